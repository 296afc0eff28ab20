//! Chains of bins ordered by non-increasing item size, the push/pull
//! cascades along them, and the sequential chains that hold all small-only
//! bins.

use crate::bins::Tracker;
use crate::cover;
use crate::item::{BinId, BinIds, Item, ItemId};
use crate::size::Size;

/// A whole small item, or the part of it assigned to one virtual buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub item: Item,
    pub amount: Size,
}

impl Piece {
    pub fn whole(item: Item) -> Self {
        let amount = item.size.clone();
        Piece { item, amount }
    }

    pub fn is_whole(&self) -> bool {
        self.amount == self.item.size
    }

    /// Total order used for every "largest"/"smallest" choice: size first,
    /// then the smaller id counts as larger.
    pub fn outranks(&self, other: &Piece) -> bool {
        rank_gt(&self.item, &other.item)
    }
}

pub(crate) fn rank_gt(a: &Item, b: &Item) -> bool {
    a.size > b.size || (a.size == b.size && a.id < b.id)
}

pub fn total_amount(pieces: &[Piece]) -> Size {
    pieces.iter().map(|p| &p.amount).sum()
}

fn top_index(pieces: &[Piece]) -> Option<usize> {
    (0..pieces.len()).reduce(|a, b| if pieces[b].outranks(&pieces[a]) { b } else { a })
}

fn bottom_index(pieces: &[Piece]) -> Option<usize> {
    (0..pieces.len()).reduce(|a, b| if pieces[a].outranks(&pieces[b]) { b } else { a })
}

/// Well-covered test on a big size (real or virtual) plus small pieces.
///
/// With only whole pieces this is the ordinary definition. For a virtual
/// buffer the largest piece plays the role of the largest fully contained item.
pub fn well_covered(big: Option<&Size>, smalls: &[Piece]) -> bool {
    let load: Size = big.cloned().unwrap_or_default() + total_amount(smalls);
    if load < Size::one() {
        return false;
    }
    let Some(t) = top_index(smalls) else {
        return false;
    };
    let top = &smalls[t].amount;
    if &load - top >= Size::one() {
        return false;
    }
    match big {
        Some(b) => b + top < Size::one() || smalls.len() < 2,
        None => true,
    }
}

pub fn at_most_well_covered(big: Option<&Size>, smalls: &[Piece]) -> bool {
    let load: Size = big.cloned().unwrap_or_default() + total_amount(smalls);
    load < Size::one() || well_covered(big, smalls)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainBin {
    pub id: BinId,
    pub big: Option<Item>,
    /// Size assumed for the big item of a parallel chain's virtual buffer.
    pub virtual_big: Option<Size>,
    pub smalls: Vec<Piece>,
}

impl ChainBin {
    pub fn new(id: BinId) -> Self {
        ChainBin { id, big: None, virtual_big: None, smalls: Vec::new() }
    }

    pub fn with_big(id: BinId, big: Item) -> Self {
        ChainBin { id, big: Some(big), virtual_big: None, smalls: Vec::new() }
    }

    pub fn big_size(&self) -> Option<&Size> {
        self.big.as_ref().map(|b| &b.size).or(self.virtual_big.as_ref())
    }

    pub fn small_load(&self) -> Size {
        total_amount(&self.smalls)
    }

    pub fn load(&self) -> Size {
        self.big_size().cloned().unwrap_or_default() + self.small_load()
    }

    /// Load of the physical contents, ignoring any virtual big item.
    pub fn physical_load(&self) -> Size {
        self.big.as_ref().map(|b| b.size.clone()).unwrap_or_default() + self.small_load()
    }

    pub fn has_smalls(&self) -> bool {
        !self.smalls.is_empty()
    }

    pub fn is_covered(&self) -> bool {
        self.load() >= Size::one()
    }

    pub fn is_well_covered(&self) -> bool {
        well_covered(self.big_size(), &self.smalls)
    }

    pub fn is_at_most_well_covered(&self) -> bool {
        at_most_well_covered(self.big_size(), &self.smalls)
    }

    pub fn top_small(&self) -> Option<&Piece> {
        top_index(&self.smalls).map(|i| &self.smalls[i])
    }

    pub fn bottom_small(&self) -> Option<&Piece> {
        bottom_index(&self.smalls).map(|i| &self.smalls[i])
    }

    pub fn take_top_small(&mut self) -> Option<Piece> {
        top_index(&self.smalls).map(|i| self.smalls.swap_remove(i))
    }

    pub fn take_bottom_small(&mut self) -> Option<Piece> {
        bottom_index(&self.smalls).map(|i| self.smalls.swap_remove(i))
    }

    pub fn take_item(&mut self, id: ItemId) -> Option<Piece> {
        let pos = self.smalls.iter().position(|p| p.item.id == id)?;
        Some(self.smalls.swap_remove(pos))
    }

    /// Adds a piece, merging with an existing piece of the same item.
    pub fn add_piece(&mut self, piece: Piece) {
        match self.smalls.iter_mut().find(|p| p.item.id == piece.item.id) {
            Some(p) => p.amount += &piece.amount,
            None => self.smalls.push(piece),
        }
    }

    pub fn contains_smaller_than(&self, item: &Item) -> bool {
        self.smalls.iter().any(|p| p.item.size < item.size)
    }

    pub fn sizes(&self) -> Vec<Size> {
        self.big_size().cloned().into_iter().chain(self.smalls.iter().map(|p| p.amount.clone())).collect()
    }

    pub fn is_barely_covered(&self, eps: &Size) -> bool {
        cover::is_barely_covered(&self.sizes(), eps)
    }
}

/// Ordered bins; the last one is the buffer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    pub bins: Vec<ChainBin>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn buffer(&self) -> &ChainBin {
        self.bins.last().expect("chain has a buffer")
    }

    pub fn buffer_mut(&mut self) -> &mut ChainBin {
        self.bins.last_mut().expect("chain has a buffer")
    }

    pub fn small_count(&self) -> usize {
        self.bins.iter().map(|b| b.smalls.len()).sum()
    }

    /// Sets the buffer's virtual big to the big item of the bin before it.
    pub fn refresh_virtual_big(&mut self) {
        let n = self.bins.len();
        if n >= 2 {
            let v = self.bins[n - 2].big.as_ref().map(|b| b.size.clone());
            self.bins[n - 1].virtual_big = v;
        }
    }
}

/// Callbacks a chain operation needs from its owner.
pub trait ChainEnv {
    /// `item` now sits (wholly or partly) in physical bin `bin`.
    fn placed(&mut self, item: &Item, bin: BinId);
    /// Called before pulling from `bin`; a parallel chain uses it to make the
    /// largest piece on its virtual buffer whole.
    fn before_pull(&mut self, _bin: &mut ChainBin) {}
}

impl ChainEnv for Tracker {
    fn placed(&mut self, item: &Item, bin: BinId) {
        self.place(item, bin);
    }
}

/// One recursive step of a push: `x` went into bin `index`, `y` came out.
#[derive(Clone, Debug)]
pub struct PushStep {
    pub index: usize,
    pub before: ChainBin,
    pub after: ChainBin,
    pub x: Vec<Piece>,
    pub y: Vec<Piece>,
}

/// One step of a pull: `y` moved from bin `index + 1` into bin `index`.
#[derive(Clone, Debug)]
pub struct PullStep {
    pub index: usize,
    pub before: ChainBin,
    pub successor_before: ChainBin,
    pub after: ChainBin,
    pub y: Vec<Piece>,
}

/// Inserts `x` into bin `start` and cascades the overflow towards the end.
/// Returns the pieces pushed out of the last bin.
pub fn chain_push(
    chain: &mut Chain,
    start: usize,
    x: Vec<Piece>,
    env: &mut dyn ChainEnv,
    mut trace: Option<&mut Vec<PushStep>>,
) -> Vec<Piece> {
    let mut carry = x;
    let mut j = start;
    loop {
        let before = trace.as_ref().map(|_| chain.bins[j].clone());
        let bin = &mut chain.bins[j];
        for p in &carry {
            env.placed(&p.item, bin.id);
        }
        let input = carry.clone();
        for p in carry {
            bin.add_piece(p);
        }
        let mut out = Vec::new();
        while bin.is_covered() && !bin.is_well_covered() {
            out.push(bin.take_bottom_small().expect("covered bin that is not well-covered has smalls"));
        }
        if let (Some(t), Some(before)) = (trace.as_mut(), before) {
            t.push(PushStep { index: j, before, after: bin.clone(), x: input, y: out.clone() });
        }
        if out.is_empty() || j + 1 == chain.len() {
            return out;
        }
        carry = out;
        j += 1;
    }
}

/// Refills bin `start` (if uncovered) from its successor and recurses along
/// the chain.
pub fn chain_pull(chain: &mut Chain, start: usize, env: &mut dyn ChainEnv, mut trace: Option<&mut Vec<PullStep>>) {
    let mut j = start;
    while j + 1 < chain.len() && !chain.bins[j].is_covered() {
        let before = trace.as_ref().map(|_| (chain.bins[j].clone(), chain.bins[j + 1].clone()));
        let mut moved = Vec::new();
        while !chain.bins[j].is_covered() {
            let (head, tail) = chain.bins.split_at_mut(j + 1);
            let (bin, next) = (&mut head[j], &mut tail[0]);
            env.before_pull(next);
            let Some(p) = next.take_top_small() else { break };
            debug_assert!(p.is_whole(), "pulled a partial piece");
            env.placed(&p.item, bin.id);
            moved.push(p.clone());
            bin.add_piece(p);
        }
        if let (Some(t), Some((before, successor_before))) = (trace.as_mut(), before) {
            t.push(PullStep { index: j, before, successor_before, after: chain.bins[j].clone(), y: moved });
        }
        j += 1;
    }
}

/// Checks the ordering rules of a chain. Returns a description of the first
/// problem found.
pub fn chain_order_problem(chain: &Chain) -> Option<String> {
    let mut seen_bigless = false;
    let mut prev_big: Option<Size> = None;
    let mut prev_min_small: Option<Size> = None;
    for (j, b) in chain.bins.iter().enumerate() {
        match b.big_size() {
            Some(s) => {
                if seen_bigless {
                    return Some(format!("bin {j} has a big item after a bin without one"));
                }
                if prev_big.as_ref().is_some_and(|p| s > p) {
                    return Some(format!("big item in bin {j} exceeds its predecessor"));
                }
                prev_big = Some(s.clone());
            }
            None => seen_bigless = true,
        }
        if let (Some(top), Some(prev)) = (b.top_small(), prev_min_small.as_ref()) {
            if top.item.size > *prev {
                return Some(format!("small item {} in bin {j} exceeds a small item of an earlier bin", top.item.id));
            }
        }
        if let Some(bot) = b.bottom_small() {
            prev_min_small = Some(bot.item.size.clone());
        }
    }
    None
}

/// Whether inserting `x` into bin `index` keeps `chain` a chain.
pub fn is_eligible(chain: &Chain, index: usize, x: &[Piece]) -> bool {
    let mut c = chain.clone();
    for p in x {
        c.bins[index].add_piece(p.clone());
    }
    chain_order_problem(&c).is_none()
}

/// The sequential chains over the bins holding only small items.
#[derive(Clone, Debug, Default)]
pub struct SeqChains {
    pub chains: Vec<Chain>,
    /// The integer 1/ε.
    pub inv_eps: usize,
}

/// How a set of small items enters a chain structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// A single newly arrived (or reinserted) item.
    Arrival,
    /// Items moved down from an earlier group; all at least as big as anything here.
    Overflow,
}

impl SeqChains {
    pub fn new(inv_eps: usize) -> Self {
        SeqChains { chains: Vec::new(), inv_eps }
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn bins(&self) -> impl Iterator<Item = &ChainBin> {
        self.chains.iter().flat_map(|c| c.bins.iter())
    }

    pub fn has_smalls(&self) -> bool {
        self.bins().any(ChainBin::has_smalls)
    }

    pub fn locate(&self, id: ItemId) -> Option<(usize, usize)> {
        for (c, ch) in self.chains.iter().enumerate() {
            for (j, b) in ch.bins.iter().enumerate() {
                if b.smalls.iter().any(|p| p.item.id == id) {
                    return Some((c, j));
                }
            }
        }
        None
    }

    pub fn largest_small(&self) -> Option<(usize, usize, &Piece)> {
        let mut best: Option<(usize, usize, &Piece)> = None;
        for (c, ch) in self.chains.iter().enumerate() {
            for (j, b) in ch.bins.iter().enumerate() {
                if let Some(p) = b.top_small() {
                    if best.as_ref().is_none_or(|(_, _, q)| p.outranks(q)) {
                        best = Some((c, j, p));
                    }
                }
            }
        }
        best
    }

    pub fn insert(&mut self, x: Vec<Item>, scenario: Scenario, tracker: &mut Tracker, ids: &mut BinIds) {
        if x.is_empty() {
            return;
        }
        if self.chains.is_empty() {
            self.chains.push(Chain { bins: vec![ChainBin::new(ids.fresh())] });
        }
        let (c, j) = match scenario {
            Scenario::Overflow => (0, 0),
            Scenario::Arrival => {
                let probe = &x[0];
                let mut target = None;
                'outer: for (c, ch) in self.chains.iter().enumerate() {
                    for (j, b) in ch.bins.iter().enumerate() {
                        if b.contains_smaller_than(probe) {
                            target = Some((c, j));
                            break 'outer;
                        }
                    }
                }
                target.unwrap_or_else(|| {
                    let c = self.chains.len() - 1;
                    (c, self.chains[c].len() - 1)
                })
            }
        };
        let pieces = x.into_iter().map(Piece::whole).collect();
        let y = chain_push(&mut self.chains[c], j, pieces, tracker, None);
        if !y.is_empty() {
            let mut buffer = ChainBin::new(ids.fresh());
            for p in y {
                tracker.place(&p.item, buffer.id);
                buffer.add_piece(p);
            }
            self.chains[c].bins.push(buffer);
            let k = self.inv_eps;
            if self.chains[c].len() >= 2 * k + 2 {
                let tail = self.chains[c].bins.split_off(k + 1);
                self.chains.insert(c + 1, Chain { bins: tail });
            }
        }
    }

    /// Restores the chain structure after bin `(c, j)` lost items.
    pub fn repair(&mut self, c: usize, j: usize, tracker: &mut Tracker) {
        if c >= self.chains.len() {
            return;
        }
        let last = self.chains[c].len() - 1;
        if j < last && !self.chains[c].bins[j].is_well_covered() {
            chain_pull(&mut self.chains[c], j, tracker, None);
            let n = self.chains[c].len();
            if n >= 2 && !self.chains[c].bins[n - 2].is_well_covered() {
                debug_assert!(!self.chains[c].bins[n - 1].has_smalls());
                self.chains[c].bins.pop();
                self.fix_length(c, tracker);
            }
        }
        self.drop_empty_tail(c, tracker);
    }

    /// Handles a chain that became one bin too short by stealing or merging.
    fn fix_length(&mut self, c: usize, tracker: &mut Tracker) {
        let k = self.inv_eps;
        if self.chains[c].len() > k || c + 1 >= self.chains.len() {
            return;
        }
        let tail_start = self.chains[c].len() - 1;
        if self.chains[c + 1].len() > k + 1 {
            let b = self.chains[c + 1].bins.remove(0);
            self.chains[c].bins.push(b);
        } else {
            let next = self.chains.remove(c + 1);
            self.chains[c].bins.extend(next.bins);
        }
        chain_pull(&mut self.chains[c], tail_start, tracker, None);
    }

    /// Removes empty buffers (and then empty chains) at the end of chain `c`.
    fn drop_empty_tail(&mut self, c: usize, tracker: &mut Tracker) {
        if c >= self.chains.len() {
            return;
        }
        let mut shortened = false;
        while self.chains[c].bins.last().is_some_and(|b| !b.has_smalls()) {
            self.chains[c].bins.pop();
            shortened = true;
        }
        if self.chains[c].is_empty() {
            self.chains.remove(c);
            return;
        }
        if shortened {
            self.fix_length(c, tracker);
            self.drop_empty_tail(c, tracker);
        }
    }

    /// Removes a departing item; returns false if it is not held here.
    pub fn remove(&mut self, id: ItemId, tracker: &mut Tracker) -> bool {
        let Some((c, j)) = self.locate(id) else { return false };
        self.chains[c].bins[j].take_item(id);
        self.repair(c, j, tracker);
        true
    }

    /// Takes the largest small item out of S (used when an earlier group
    /// pulls items). The caller must call `repair_front` afterwards.
    pub fn take_largest(&mut self) -> Option<Item> {
        let (c, j, _) = self.largest_small()?;
        self.chains[c].bins[j].take_top_small().map(|p| p.item)
    }

    /// Repairs every bin that is no longer well-covered, front to back.
    pub fn repair_all(&mut self, tracker: &mut Tracker) {
        for c in (0..self.chains.len()).rev() {
            self.drop_empty_tail(c, tracker);
        }
        // Each repair either fixes its bin or shortens the structure.
        let bound = self.bins().count() + 1;
        for _ in 0..bound {
            let gap = self
                .chains
                .iter()
                .enumerate()
                .find_map(|(c, ch)| (0..ch.len() - 1).find(|&j| !ch.bins[j].is_well_covered()).map(|j| (c, j)));
            match gap {
                Some((c, j)) => self.repair(c, j, tracker),
                None => return,
            }
        }
    }

    pub fn violations(&self, out: &mut Vec<(&'static str, String)>) {
        let k = self.inv_eps;
        let n = self.chains.len();
        let mut covered_count = 0usize;
        for (c, ch) in self.chains.iter().enumerate() {
            let len = ch.len();
            if c + 1 < n && !(k + 1..=2 * k + 1).contains(&len) {
                out.push(("D-I7", format!("sequential chain {c} has length {len}")));
            }
            if c + 1 == n && len > 2 * k + 2 {
                out.push(("D-I7", format!("last sequential chain has length {len}")));
            }
            for (j, b) in ch.bins.iter().enumerate() {
                if b.big.is_some() || b.virtual_big.is_some() {
                    out.push(("D-I7", format!("S bin {} holds a big item", b.id)));
                }
                if b.smalls.iter().any(|p| !p.is_whole()) {
                    out.push(("D-I7", format!("S bin {} holds a partial piece", b.id)));
                }
                if b.is_covered() {
                    covered_count += 1;
                }
                if j + 1 < len {
                    if !b.is_well_covered() {
                        out.push(("D-I7", format!("non-buffer S bin {} is not well-covered", b.id)));
                    }
                } else if !b.has_smalls() || !b.is_at_most_well_covered() {
                    out.push(("D-I7", format!("S buffer {} is empty or more than well-covered", b.id)));
                }
            }
        }
        if n * k > covered_count + k {
            out.push(("D-I7", format!("{n} sequential buffers for {covered_count} covered S bins")));
        }
        let mut prev: Option<Size> = None;
        for b in self.bins() {
            if let (Some(top), Some(p)) = (b.top_small(), prev.as_ref()) {
                if top.item.size > *p {
                    out.push(("D-I8", format!("S bin {} breaks the global small order", b.id)));
                }
            }
            if let Some(bot) = b.bottom_small() {
                prev = Some(bot.item.size.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Size {
        Size::ratio(n, d)
    }

    fn small(id: u64, n: i64, d: i64) -> Piece {
        Piece::whole(Item::new(id, q(n, d)))
    }

    fn sizes(p: &[Piece]) -> Vec<Size> {
        let mut v: Vec<Size> = p.iter().map(|p| p.amount.clone()).collect();
        v.sort();
        v
    }

    #[test]
    fn push_evicts_smallest_until_well_covered() {
        let mut b = ChainBin::with_big(BinId(0), Item::new(100, q(6, 10)));
        b.smalls = vec![small(1, 3, 10), small(2, 2, 10)];
        let mut chain = Chain { bins: vec![b] };
        let mut t = Tracker::default();
        t.ledger.begin_event(&q(1, 4)).unwrap();
        let y = chain_push(&mut chain, 0, vec![small(3, 1, 4)], &mut t, None);
        assert_eq!(sizes(&y), vec![q(2, 10)]);
        assert!(chain.bins[0].is_well_covered());
        assert_eq!(chain.bins[0].load(), q(115, 100));
    }

    #[test]
    fn push_through_empty_buffer() {
        let mut first = ChainBin::new(BinId(0));
        first.smalls = vec![small(1, 1, 2), small(2, 1, 2)];
        let mut chain = Chain { bins: vec![first, ChainBin::new(BinId(1))] };
        let mut t = Tracker::default();
        t.ledger.begin_event(&q(1, 2)).unwrap();
        let y = chain_push(&mut chain, 0, vec![small(3, 1, 2)], &mut t, None);
        assert!(y.is_empty());
        assert_eq!(sizes(&chain.bins[1].smalls), vec![q(1, 2)]);
        assert_eq!(sizes(&chain.bins[0].smalls), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn push_into_uncovered_last_bin_stops() {
        let mut chain = Chain { bins: vec![ChainBin::new(BinId(0))] };
        let mut t = Tracker::default();
        t.ledger.begin_event(&q(1, 2)).unwrap();
        assert!(chain_push(&mut chain, 0, vec![small(1, 1, 5)], &mut t, None).is_empty());
    }

    #[test]
    fn pull_fills_uncovered_bin() {
        let b = ChainBin::with_big(BinId(0), Item::new(100, q(6, 10)));
        let mut next = ChainBin::new(BinId(1));
        next.smalls = vec![small(1, 3, 10), small(2, 2, 10), small(3, 2, 10), small(4, 2, 10), small(5, 1, 10)];
        let mut chain = Chain { bins: vec![b, next] };
        let mut t = Tracker::default();
        t.ledger.begin_event(&q(1, 2)).unwrap();
        let mut trace = Vec::new();
        chain_pull(&mut chain, 0, &mut t, Some(&mut trace));
        assert_eq!(sizes(&chain.bins[0].smalls), vec![q(2, 10), q(3, 10)]);
        assert!(chain.bins[0].is_well_covered());
        assert_eq!(total_amount(&trace[0].y), q(1, 2));
    }

    #[test]
    fn pull_on_covered_or_last_bin_is_a_no_op() {
        let mut b = ChainBin::new(BinId(0));
        b.smalls = vec![small(1, 1, 2), small(2, 1, 2)];
        let mut next = ChainBin::new(BinId(1));
        next.smalls = vec![small(3, 1, 4)];
        let mut chain = Chain { bins: vec![b, next] };
        let before = chain.clone();
        let mut t = Tracker::default();
        chain_pull(&mut chain, 0, &mut t, None);
        chain_pull(&mut chain, 1, &mut t, None);
        assert_eq!(chain, before);
    }

    fn build(seq: &mut SeqChains, t: &mut Tracker, ids: &mut BinIds, items: &[Item]) {
        for it in items {
            t.ledger.begin_event(&it.size).unwrap();
            seq.insert(vec![it.clone()], Scenario::Arrival, t, ids);
            t.ledger.end_event().unwrap();
            let mut v = Vec::new();
            seq.violations(&mut v);
            assert!(v.is_empty(), "{v:?}");
        }
    }

    #[test]
    fn sequential_insert_bootstraps_and_splits() {
        let mut seq = SeqChains::new(2);
        let mut t = Tracker::default();
        let mut ids = BinIds::default();
        build(&mut seq, &mut t, &mut ids, &[Item::new(1, q(1, 10))]);
        assert_eq!(seq.chains.len(), 1);
        assert_eq!(seq.chains[0].len(), 1);
        let items: Vec<Item> = (2..=12).map(|i| Item::new(i, q(1, 2))).collect();
        build(&mut seq, &mut t, &mut ids, &items);
        // 12 items: 5 full bins of two halves plus the 1/10 item; 6 bins split as 3 + 3.
        let lens: Vec<usize> = seq.chains.iter().map(Chain::len).collect();
        assert_eq!(lens, vec![3, 3]);
    }

    #[test]
    fn sequential_delete_concatenates_short_chain() {
        let mut seq = SeqChains::new(2);
        let mut t = Tracker::default();
        let mut ids = BinIds::default();
        let items: Vec<Item> = (1..=12).map(|i| Item::new(i, q(1, 2))).collect();
        build(&mut seq, &mut t, &mut ids, &items);
        let lens: Vec<usize> = seq.chains.iter().map(Chain::len).collect();
        assert_eq!(lens, vec![3, 3]);
        // The first removal only drains the buffer; the second empties it.
        for round in 0..2 {
            let victim = seq.chains[0].bins[0].smalls[0].item.id;
            t.ledger.begin_event(&q(1, 2)).unwrap();
            assert!(seq.remove(victim, &mut t));
            t.ledger.end_event().unwrap();
            let mut v = Vec::new();
            seq.violations(&mut v);
            assert!(v.is_empty(), "{v:?}");
            let lens: Vec<usize> = seq.chains.iter().map(Chain::len).collect();
            assert_eq!(lens, if round == 0 { vec![3, 3] } else { vec![5] });
        }
    }

    #[test]
    fn sequential_delete_moves_buffer_back() {
        let mut seq = SeqChains::new(2);
        let mut t = Tracker::default();
        let mut ids = BinIds::default();
        let items: Vec<Item> = (1..=5).map(|i| Item::new(i, q(1, 2))).collect();
        build(&mut seq, &mut t, &mut ids, &items);
        assert_eq!(seq.chains[0].len(), 3);
        t.ledger.begin_event(&q(1, 2)).unwrap();
        seq.remove(ItemId(1), &mut t);
        t.ledger.end_event().unwrap();
        let lens: Vec<usize> = seq.chains.iter().map(Chain::len).collect();
        assert_eq!(lens, vec![2]);
        let mut v = Vec::new();
        seq.violations(&mut v);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn order_checker_flags_inversions() {
        let mut a = ChainBin::new(BinId(0));
        a.smalls = vec![small(1, 1, 10)];
        let mut b = ChainBin::new(BinId(1));
        b.smalls = vec![small(2, 2, 10)];
        assert!(chain_order_problem(&Chain { bins: vec![a, b] }).is_some());
    }
}
