//! Ground-truth solvers: the exact optimum, next-fit greedy, and the offline
//! reference used by the amortized algorithm.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::item::{Item, ItemId};
use crate::size::Size;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_items_exact: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_items_exact: 18 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub bins: Vec<Vec<ItemId>>,
    pub objective: usize,
}

impl Packing {
    fn from_bins(bins: Vec<Vec<ItemId>>, items: &[Item]) -> Packing {
        let objective = bins
            .iter()
            .filter(|b| {
                let load: Size =
                    b.iter().map(|id| &items.iter().find(|it| it.id == *id).expect("item in packing").size).sum();
                load >= Size::one()
            })
            .count();
        Packing { bins, objective }
    }
}

/// Maximum number of covered bins over all partitions of `items`.
///
/// Runs a dynamic program over item subsets in which bins are filled one at a
/// time: the state for a subset is the lexicographically best pair (closed
/// covered bins, load of the open bin). More closed bins always dominate,
/// since an open bin can contribute at most one extra bin later.
pub fn opt_exact(items: &[Item], limits: OracleLimits) -> Result<(usize, Packing)> {
    let n = items.len();
    if n > limits.max_items_exact {
        return Err(Error::TooLarge(n, limits.max_items_exact));
    }
    if n == 0 {
        return Ok((0, Packing { bins: vec![], objective: 0 }));
    }
    let (scaled, unit) = scale_to_integers(items);
    let order = match (scaled.iter().map(|s| s.to_u64()).collect::<Option<Vec<u64>>>(), unit.to_u64()) {
        (Some(w), Some(cap)) if cap.checked_mul(n as u64 + 1).is_some() => sequence_dp(&w, cap),
        _ => sequence_dp(&scaled, unit),
    };
    let mut bins = Vec::new();
    let mut current = Vec::new();
    let mut load = Size::zero();
    for idx in order {
        current.push(items[idx].id);
        load += &items[idx].size;
        if load >= Size::one() {
            bins.push(std::mem::take(&mut current));
            load = Size::zero();
        }
    }
    if !current.is_empty() {
        bins.push(current);
    }
    let packing = Packing::from_bins(bins, items);
    Ok((packing.objective, packing))
}

/// Rescales sizes by the lcm of their denominators; returns (weights, capacity).
fn scale_to_integers(items: &[Item]) -> (Vec<BigInt>, BigInt) {
    let lcm = items.iter().fold(BigInt::one(), |acc, it| acc.lcm(it.size.denom()));
    let w = items.iter().map(|it| it.size.numer() * (&lcm / it.size.denom())).collect();
    (w, lcm)
}

trait Weight: Clone + Ord {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl Weight for u64 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl Weight for BigInt {
    fn zero() -> Self {
        <BigInt as Zero>::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// Returns an item order whose sequential filling attains the optimum.
fn sequence_dp<W: Weight>(w: &[W], cap: W) -> Vec<usize> {
    let n = w.len();
    let full = (1usize << n) - 1;
    let mut best: Vec<Option<(u32, W)>> = vec![None; 1 << n];
    let mut parent = vec![usize::MAX; 1 << n];
    best[0] = Some((0, W::zero()));
    for mask in 0..=full {
        let Some((k, l)) = best[mask].clone() else { continue };
        for (i, wi) in w.iter().enumerate() {
            if mask & (1 << i) != 0 {
                continue;
            }
            let nl = l.plus(wi);
            let cand = if nl >= cap { (k + 1, W::zero()) } else { (k, nl) };
            let next = mask | (1 << i);
            let better = match &best[next] {
                None => true,
                Some(cur) => cand > *cur,
            };
            if better {
                best[next] = Some(cand);
                parent[next] = i;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    while mask != 0 {
        let i = parent[mask];
        order.push(i);
        mask &= !(1 << i);
    }
    order.reverse();
    order
}

/// Reference recursion `f(S) = max over covered T ⊆ S of f(S \ T) + 1`,
/// enumerating sub-masks. Exponential in 3^n; kept for cross-checking.
pub fn opt_by_subset_recursion(items: &[Item]) -> usize {
    let n = items.len();
    assert!(n <= 14, "reference recursion is only meant for tiny inputs");
    let full = (1usize << n) - 1;
    let mut covered = vec![false; 1 << n];
    for (mask, c) in covered.iter_mut().enumerate() {
        let load: Size = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &items[i].size).sum();
        *c = load >= Size::one();
    }
    let mut f = vec![0usize; 1 << n];
    for mask in 1..=full {
        let mut best = 0;
        let mut sub = mask;
        while sub != 0 {
            if covered[sub] {
                best = best.max(f[mask & !sub] + 1);
            }
            sub = (sub - 1) & mask;
        }
        f[mask] = best;
    }
    f[full]
}

/// Next-fit covering in the given order: close the open bin once covered.
pub fn greedy_cover(items: &[Item]) -> Packing {
    let mut bins = Vec::new();
    let mut current = Vec::new();
    let mut load = Size::zero();
    for it in items {
        current.push(it.id);
        load += &it.size;
        if load >= Size::one() {
            bins.push(std::mem::take(&mut current));
            load = Size::zero();
        }
    }
    if !current.is_empty() {
        bins.push(current);
    }
    Packing::from_bins(bins, items)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfflineResult {
    pub count: usize,
    pub packing: Packing,
    pub solver: Solver,
}

/// Exact when the instance fits the limit, otherwise greedy on the
/// non-increasing size order (which only guarantees ratio 2).
pub fn offline_reference(items: &[Item], _eps: &Size, limits: OracleLimits) -> OfflineResult {
    if items.len() <= limits.max_items_exact {
        let (count, packing) = opt_exact(items, limits).expect("within limit");
        return OfflineResult { count, packing, solver: Solver::Exact };
    }
    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| b.size.cmp(&a.size).then(a.id.cmp(&b.id)));
    let packing = greedy_cover(&sorted);
    OfflineResult { count: packing.objective, packing, solver: Solver::Greedy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(v: &[(i64, i64)]) -> Vec<Item> {
        v.iter().enumerate().map(|(i, &(n, d))| Item::new(i as u64, Size::ratio(n, d))).collect()
    }

    #[test]
    fn exact_examples() {
        let lim = OracleLimits::default();
        assert_eq!(opt_exact(&[], lim).unwrap().0, 0);
        assert_eq!(opt_exact(&items(&[(9, 10)]), lim).unwrap().0, 0);
        assert_eq!(opt_exact(&items(&[(11, 12); 6]), lim).unwrap().0, 3);
        assert_eq!(opt_exact(&items(&[(6, 10), (6, 10), (5, 10), (5, 10)]), lim).unwrap().0, 2);
    }

    #[test]
    fn exact_rejects_large_inputs() {
        let lim = OracleLimits { max_items_exact: 3 };
        assert_eq!(opt_exact(&items(&[(1, 2); 4]), lim).unwrap_err(), Error::TooLarge(4, 3));
    }

    #[test]
    fn exact_packing_is_a_partition() {
        let its = items(&[(3, 10), (7, 10), (1, 2), (1, 4), (1, 4), (9, 10)]);
        let (count, p) = opt_exact(&its, OracleLimits::default()).unwrap();
        let mut ids: Vec<_> = p.bins.iter().flatten().copied().collect();
        ids.sort();
        assert_eq!(ids, its.iter().map(|i| i.id).collect::<Vec<_>>());
        assert_eq!(count, p.objective);
        assert_eq!(count, 2);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_cover(&items(&[(9, 10), (2, 10), (9, 10), (2, 10)])).objective, 2);
        assert_eq!(greedy_cover(&items(&[(1, 4); 3])).objective, 0);
        let mut stream = items(&[(11, 12); 6]);
        stream.extend(items(&[(1, 12); 6]).into_iter().map(|mut it| {
            it.id = ItemId(it.id.0 + 6);
            it
        }));
        assert_eq!(greedy_cover(&stream[..6]).objective, 3);
        assert_eq!(greedy_cover(&stream).objective, 3);
    }

    #[test]
    fn offline_reference_flags_solver() {
        let lim = OracleLimits::default();
        let r = offline_reference(&items(&[(6, 10), (6, 10), (5, 10), (5, 10)]), &Size::half(), lim);
        assert_eq!((r.count, r.solver), (2, Solver::Exact));
        let r = offline_reference(&items(&[(1, 10); 30]), &Size::half(), lim);
        assert_eq!((r.count, r.solver), (3, Solver::Greedy));
        let r = offline_reference(&[], &Size::half(), lim);
        assert_eq!((r.count, r.solver), (0, Solver::Exact));
    }
}
