//! The insertion-only algorithm with competitive ratio 3/2 + ε.
//!
//! Bins are typed (BB, BM, BS, M, S); BS splits into BSC and BSP by coverage.
//! Small arrivals never migrate anything; big and medium arrivals repack a
//! constant total size.

use std::collections::BTreeMap;

use crate::bins::{most_loaded_uncovered, pull_source, Placements, SimpleBin};
use crate::cover::is_barely_covered;
use crate::error::{Error, Result};
use crate::item::{classify, BinId, BinIds, Item, ItemClass, ItemId};
use crate::ledger::{EventMigration, MigrationLedger};
use crate::size::Size;
use crate::violation::Violation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StaticKind {
    BB,
    BM,
    BS,
    M,
    S,
    /// A single item of size exactly 1.
    Unit,
}

#[derive(Clone, Debug)]
struct Slot {
    kind: StaticKind,
    bin: SimpleBin,
}

#[derive(Clone, Debug)]
pub struct StaticState {
    eps: Size,
    bins: BTreeMap<BinId, Slot>,
    ids: BinIds,
    placements: Placements,
    ledger: MigrationLedger,
    big_reinsertions: usize,
}

fn min_size(it: impl IntoIterator<Item = Size>) -> Option<Size> {
    it.into_iter().min()
}

fn max_size(it: impl IntoIterator<Item = Size>) -> Option<Size> {
    it.into_iter().max()
}

impl StaticState {
    /// Values of ε above 1/2 are clamped to 1/2.
    pub fn new(eps: Size) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::BadEpsilon(eps.to_string(), "must be positive"));
        }
        let eps = if eps > Size::half() { Size::half() } else { eps };
        Ok(StaticState {
            eps,
            bins: BTreeMap::new(),
            ids: BinIds::default(),
            placements: Placements::default(),
            ledger: MigrationLedger::new(),
            big_reinsertions: 0,
        })
    }

    /// Builds a state from an explicit layout without running the algorithm.
    /// Intended for exercising the invariant checker.
    pub fn from_layout(eps: Size, layout: Vec<(StaticKind, Vec<Item>)>) -> Result<Self> {
        let mut st = StaticState::new(eps)?;
        for (kind, items) in layout {
            let id = st.ids.fresh();
            for it in &items {
                if st.placements.contains(it.id) {
                    return Err(Error::DuplicateItem(it.id));
                }
                st.ledger.begin_event(&it.size)?;
                st.placements.place(&mut st.ledger, it, id);
                st.ledger.end_event()?;
            }
            st.bins.insert(id, Slot { kind, bin: SimpleBin { id, items } });
        }
        Ok(st)
    }

    pub fn eps(&self) -> &Size {
        &self.eps
    }

    pub fn ledger(&self) -> &MigrationLedger {
        &self.ledger
    }

    /// Big-item reinsertions triggered by the most recent event.
    pub fn last_big_reinsertions(&self) -> usize {
        self.big_reinsertions
    }

    pub fn live_count(&self) -> usize {
        self.placements.len()
    }

    pub fn arrive(&mut self, item: Item) -> Result<EventMigration> {
        if item.id.is_dummy() {
            return Err(Error::ReservedId(item.id));
        }
        if self.placements.contains(item.id) {
            return Err(Error::DuplicateItem(item.id));
        }
        self.ledger.begin_event(&item.size)?;
        self.big_reinsertions = 0;
        if item.size == Size::one() {
            let id = self.new_bin(StaticKind::Unit);
            self.put(id, item);
        } else {
            match classify(&item.size, &self.eps) {
                ItemClass::Small => self.insert_small(item),
                ItemClass::Medium => self.insert_medium(item),
                ItemClass::Big => self.insert_big(item, true),
            }
        }
        self.ledger.end_event()
    }

    pub fn objective(&self) -> usize {
        self.bins.values().filter(|s| s.bin.is_covered()).count()
    }

    pub fn packing(&self) -> Vec<Vec<Item>> {
        self.bins.values().map(|s| s.bin.items.clone()).collect()
    }

    pub fn count(&self, kind: StaticKind) -> usize {
        self.bins.values().filter(|s| s.kind == kind).count()
    }

    /// Bins of one kind as item-size lists, in bin-id order.
    pub fn bins_of(&self, kind: StaticKind) -> Vec<Vec<Size>> {
        self.of(kind).map(|b| b.sizes()).collect()
    }

    fn of(&self, kind: StaticKind) -> impl Iterator<Item = &SimpleBin> + '_ {
        self.bins.values().filter(move |s| s.kind == kind).map(|s| &s.bin)
    }

    fn ids_of(&self, kind: StaticKind) -> Vec<BinId> {
        self.of(kind).map(|b| b.id).collect()
    }

    fn bsp(&self) -> impl Iterator<Item = &SimpleBin> + '_ {
        self.of(StaticKind::BS).filter(|b| !b.is_covered())
    }

    fn bsc(&self) -> impl Iterator<Item = &SimpleBin> + '_ {
        self.of(StaticKind::BS).filter(|b| b.is_covered())
    }

    fn bigs<'a>(&'a self, bins: impl Iterator<Item = &'a SimpleBin> + 'a) -> impl Iterator<Item = Size> + 'a {
        let eps = &self.eps;
        bins.flat_map(move |b| b.of_class(eps, ItemClass::Big).map(|i| i.size.clone()))
    }

    fn m_load(&self) -> Size {
        self.of(StaticKind::M).map(|b| b.load()).sum()
    }

    fn new_bin(&mut self, kind: StaticKind) -> BinId {
        let id = self.ids.fresh();
        self.bins.insert(id, Slot { kind, bin: SimpleBin::new(id) });
        id
    }

    fn bin_mut(&mut self, id: BinId) -> &mut SimpleBin {
        &mut self.bins.get_mut(&id).expect("bin exists").bin
    }

    fn bin(&self, id: BinId) -> &SimpleBin {
        &self.bins[&id].bin
    }

    fn set_kind(&mut self, id: BinId, kind: StaticKind) {
        self.bins.get_mut(&id).expect("bin exists").kind = kind;
    }

    fn put(&mut self, id: BinId, item: Item) {
        self.placements.place(&mut self.ledger, &item, id);
        self.bin_mut(id).items.push(item);
    }

    fn drop_if_empty(&mut self, id: BinId) {
        if self.bins.get(&id).is_some_and(|s| s.bin.items.is_empty()) {
            self.bins.remove(&id);
        }
    }

    /// BS bin whose big item is extremal; ties go to the smaller bin id.
    fn bs_with_big(&self, want_max: bool) -> Option<BinId> {
        let eps = &self.eps;
        let mut best: Option<(Size, BinId)> = None;
        for b in self.of(StaticKind::BS) {
            let s = b.largest_of(eps, ItemClass::Big).expect("BS bin has a big item").size.clone();
            let better = match &best {
                None => true,
                Some((bs, _)) => {
                    if want_max {
                        s > *bs
                    } else {
                        s < *bs
                    }
                }
            };
            if better {
                best = Some((s, b.id));
            }
        }
        best.map(|(_, id)| id)
    }

    fn greedy_push(&mut self, item: Item, kind: StaticKind) -> BinId {
        let target = most_loaded_uncovered(self.of(kind)).unwrap_or_else(|| self.new_bin(kind));
        self.put(target, item);
        target
    }

    fn greedy_pull(&mut self, target: BinId, donors: &[BinId]) {
        loop {
            if self.bin(target).is_covered() {
                return;
            }
            let source = {
                let eps = &self.eps;
                pull_source(
                    donors.iter().filter(|d| **d != target).filter_map(|d| self.bins.get(d)).map(|s| &s.bin),
                    eps,
                )
            };
            let Some((from, item)) = source else { return };
            let it = self.bin_mut(from).take(item).expect("item in donor");
            self.put(target, it);
            if matches!(self.bins[&from].kind, StaticKind::M | StaticKind::S) {
                self.drop_if_empty(from);
            }
        }
    }

    fn insert_small(&mut self, item: Item) {
        if let Some(target) = most_loaded_uncovered(self.bsp()) {
            self.put(target, item);
        } else {
            self.greedy_push(item, StaticKind::S);
        }
    }

    fn reinsert_smalls(&mut self, mut smalls: Vec<Item>) {
        smalls.sort_by(|a, b| b.size.cmp(&a.size).then(a.id.cmp(&b.id)));
        for s in smalls {
            self.insert_small(s);
        }
    }

    fn insert_big(&mut self, item: Item, allow_bm: bool) {
        let s_m = self.m_load();
        let min_bm = min_size(self.bigs(self.of(StaticKind::BM)));
        let into_bm_by_m = &item.size + &s_m >= Size::one();
        let beats_bm = min_bm.as_ref().is_some_and(|m| item.size > *m);
        if allow_bm && (into_bm_by_m || beats_bm) {
            self.insert_into_bm(item);
            return;
        }
        let min_bs = min_size(self.bigs(self.of(StaticKind::BS)));
        let max_bb = max_size(self.bigs(self.of(StaticKind::BB)));
        let n_bs = self.count(StaticKind::BS);
        let n_bb = self.count(StaticKind::BB);
        let beats_bs = min_bs.as_ref().is_some_and(|m| item.size > *m);
        let tops_bb = max_bb.as_ref().is_none_or(|m| item.size >= *m);
        if beats_bs || (tops_bb && n_bs <= n_bb) {
            self.insert_into_bs(item);
        } else {
            self.insert_into_bb(item);
        }
    }

    fn insert_into_bm(&mut self, item: Item) {
        let target = self.new_bin(StaticKind::BM);
        self.put(target, item);
        let ms = self.ids_of(StaticKind::M);
        self.greedy_pull(target, &ms);
        if self.bin(target).is_covered() {
            return;
        }
        // Steal the medium items of the BM bin with the smallest big item.
        let eps = self.eps.clone();
        let victim = self
            .of(StaticKind::BM)
            .filter(|b| b.id != target)
            .map(|b| (b.largest_of(&eps, ItemClass::Big).expect("BM has a big").clone(), b.id))
            .min_by(|a, b| a.0.size.cmp(&b.0.size).then(a.1.cmp(&b.1)))
            .expect("a BM bin with a smaller big item exists");
        let (evicted, from) = victim;
        self.bin_mut(from).take(evicted.id);
        self.set_kind(from, StaticKind::M);
        let ms = self.ids_of(StaticKind::M);
        self.greedy_pull(target, &ms);
        debug_assert!(self.bin(target).is_covered());
        self.big_reinsertions += 1;
        self.insert_big(evicted, false);
    }

    fn insert_into_bs(&mut self, item: Item) {
        let eps = self.eps.clone();
        let size = item.size.clone();
        let target = self.new_bin(StaticKind::BS);
        self.put(target, item);
        let ss = self.ids_of(StaticKind::S);
        self.greedy_pull(target, &ss);
        if !self.bin(target).is_covered() {
            let has_small = |b: &SimpleBin| b.count_class(&eps, ItemClass::Small) > 0;
            let big_of = |b: &SimpleBin| b.largest_of(&eps, ItemClass::Big).expect("BS has a big").size.clone();
            let b1 = self.bsp().find(|b| b.id != target && has_small(b) && big_of(b) < size).map(|b| b.id);
            let b2 = self
                .bsc()
                .filter(|b| b.id != target)
                .map(|b| (big_of(b), b.id))
                .min()
                .filter(|(s, _)| *s < size)
                .map(|(_, id)| id);
            let donors: Vec<BinId> = b1.into_iter().chain(b2).collect();
            if !donors.is_empty() {
                self.greedy_pull(target, &donors);
            }
        }
        if self.count(StaticKind::BS) == self.count(StaticKind::BB) + 2 {
            let mut by_big: Vec<(Size, BinId)> = self
                .of(StaticKind::BS)
                .map(|b| (b.largest_of(&eps, ItemClass::Big).expect("BS has a big").size.clone(), b.id))
                .collect();
            by_big.sort();
            let (keep, gone) = (by_big[0].1, by_big[1].1);
            let mut smalls = self.bin_mut(keep).take_class(&eps, ItemClass::Small);
            smalls.extend(self.bin_mut(gone).take_class(&eps, ItemClass::Small));
            let moved = self.bin_mut(gone).items.pop().expect("big item");
            self.bins.remove(&gone);
            self.put(keep, moved);
            self.set_kind(keep, StaticKind::BB);
            self.reinsert_smalls(smalls);
        }
    }

    fn insert_into_bb(&mut self, item: Item) {
        let eps = self.eps.clone();
        if self.count(StaticKind::BS) == self.count(StaticKind::BB) + 1 {
            let target = self.bs_with_big(false).expect("BS is non-empty");
            let smalls = self.bin_mut(target).take_class(&eps, ItemClass::Small);
            self.put(target, item);
            self.set_kind(target, StaticKind::BB);
            self.reinsert_smalls(smalls);
        } else {
            let (evicted, from) = self
                .of(StaticKind::BB)
                .flat_map(|b| b.items.iter().map(move |i| (i.clone(), b.id)))
                .max_by(|a, b| a.0.size.cmp(&b.0.size).then(b.1.cmp(&a.1)).then(b.0.id.cmp(&a.0.id)))
                .expect("BB is non-empty");
            self.bin_mut(from).take(evicted.id);
            self.put(from, item);
            self.big_reinsertions += 1;
            self.insert_big(evicted, true);
        }
    }

    fn insert_medium(&mut self, item: Item) {
        let eps = self.eps.clone();
        self.greedy_push(item, StaticKind::M);
        let top = max_size(self.bigs(self.of(StaticKind::BS).chain(self.of(StaticKind::BB))));
        let Some(top) = top else { return };
        if self.m_load() < Size::one() - &top {
            return;
        }
        if self.count(StaticKind::BS) == 0 {
            let target = self.ids_of(StaticKind::BB)[0];
            let bin = self.bin(target);
            let (a, b) = (&bin.items[0], &bin.items[1]);
            let smaller = if a.size < b.size || (a.size == b.size && a.id > b.id) { a.id } else { b.id };
            let evicted = self.bin_mut(target).take(smaller).expect("BB item");
            self.set_kind(target, StaticKind::BM);
            let ms = self.ids_of(StaticKind::M);
            self.greedy_pull(target, &ms);
            self.big_reinsertions += 1;
            self.insert_big(evicted, true);
            return;
        }
        let target = self.bs_with_big(true).expect("BS is non-empty");
        let smalls = self.bin_mut(target).take_class(&eps, ItemClass::Small);
        self.set_kind(target, StaticKind::BM);
        let ms = self.ids_of(StaticKind::M);
        self.greedy_pull(target, &ms);
        if self.count(StaticKind::BB) == self.count(StaticKind::BS) + 2 {
            let mut bigs: Vec<(Item, BinId)> =
                self.of(StaticKind::BB).flat_map(|b| b.items.iter().map(move |i| (i.clone(), b.id))).collect();
            bigs.sort_by(|a, b| b.0.size.cmp(&a.0.size).then(a.1.cmp(&b.1)).then(a.0.id.cmp(&b.0.id)));
            let (i1, b1) = bigs[0].clone();
            let (i2, b2) = bigs[1].clone();
            self.bin_mut(b1).take(i1.id);
            self.bin_mut(b2).take(i2.id);
            if b1 != b2 {
                let rest = self.bin_mut(b2).items.pop().expect("remaining big");
                self.bins.remove(&b2);
                self.put(b1, rest);
            } else {
                self.bins.remove(&b1);
            }
            self.big_reinsertions += 2;
            self.insert_big(i1, true);
            self.insert_big(i2, true);
        }
        self.reinsert_smalls(smalls);
    }

    pub fn check_invariants(&self) -> Vec<Violation> {
        let eps = &self.eps;
        let mut out = Vec::new();
        for slot in self.bins.values() {
            let b = &slot.bin;
            let n_big = b.count_class(eps, ItemClass::Big);
            let n_med = b.count_class(eps, ItemClass::Medium);
            let n_small = b.count_class(eps, ItemClass::Small);
            let sizes = b.sizes();
            let barely = is_barely_covered(&sizes, eps);
            let bad = match slot.kind {
                StaticKind::Unit => b.items.len() != 1 || b.items[0].size != Size::one(),
                StaticKind::BB => n_big != 2 || b.items.len() != 2,
                StaticKind::BM => n_big != 1 || n_small > 0 || n_med == 0 || !barely,
                StaticKind::BS => n_big != 1 || n_med > 0 || (b.is_covered() && !barely),
                StaticKind::M => n_big + n_small > 0 || n_med == 0 || (b.is_covered() && !barely),
                StaticKind::S => n_big + n_med > 0 || n_small == 0 || (b.is_covered() && !barely),
            };
            if bad {
                out.push(Violation::new("I1", format!("{:?} bin {} has composition {:?}", slot.kind, b.id, sizes)));
            }
            if n_big > 0 && n_med > 0 && n_small > 0 {
                out.push(Violation::new("I1", format!("bin {} mixes all three classes", b.id)));
            }
        }
        let n_bb = self.count(StaticKind::BB) as i64;
        let n_bs = self.count(StaticKind::BS) as i64;
        if (n_bb - n_bs).abs() > 1 {
            out.push(Violation::new("I2", format!("|BB| = {n_bb}, |BS| = {n_bs}")));
        }
        let bm = || self.of(StaticKind::BM);
        let bs = || self.of(StaticKind::BS);
        let bb = || self.of(StaticKind::BB);
        let checks: [(Option<Size>, Option<Size>, &str); 3] = [
            (min_size(self.bigs(bm())), max_size(self.bigs(bs().chain(bb()))), "BM vs BS and BB"),
            (
                min_size(self.bigs(bm().chain(self.bsc()))),
                max_size(self.bigs(self.bsp().chain(bb()))),
                "BM and BSC vs BSP and BB",
            ),
            (min_size(self.bigs(bm().chain(bs()))), max_size(self.bigs(bb())), "BM and BS vs BB"),
        ];
        for (lo, hi, what) in checks {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo < hi {
                    out.push(Violation::new("I3", format!("{what}: {lo} < {hi}")));
                }
            }
        }
        if let Some(top) = max_size(self.bigs(bs().chain(bb()))) {
            let m = self.m_load();
            if m >= Size::one() - &top {
                out.push(Violation::new("I4", format!("s(M) = {m} with biggest BS/BB item {top}")));
            }
        }
        let n_bsp = self.bsp().count();
        if self.count(StaticKind::S) > 0 && n_bsp > 0 {
            out.push(Violation::new("I5", format!("S is non-empty while |BSP| = {n_bsp}")));
        }
        let with_small: Vec<&SimpleBin> = self.bsp().filter(|b| b.count_class(eps, ItemClass::Small) > 0).collect();
        if let Some(top) = max_size(self.bigs(self.bsp())) {
            let ok = match with_small.as_slice() {
                [] => true,
                [only] => only.largest_of(eps, ItemClass::Big).is_some_and(|i| i.size == top),
                _ => false,
            };
            if !ok {
                out.push(Violation::new("I6", format!("{} BSP bins hold small items", with_small.len())));
            }
        }
        for kind in [StaticKind::S, StaticKind::M] {
            let open = self.of(kind).filter(|b| !b.is_covered()).count();
            if open > 1 {
                out.push(Violation::new("I7", format!("{open} uncovered {kind:?} bins")));
            }
        }
        out
    }

    pub fn bin_of(&self, id: ItemId) -> Option<(StaticKind, BinId)> {
        let b = self.placements.bin_of(id)?;
        Some((self.bins[&b].kind, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::violation::labels;

    fn q(n: i64, d: i64) -> Size {
        Size::ratio(n, d)
    }

    fn it(id: u64, n: i64, d: i64) -> Item {
        Item::new(id, q(n, d))
    }

    #[test]
    fn trace_of_three_bigs_and_a_medium() {
        let mut st = StaticState::new(q(1, 4)).unwrap();
        st.arrive(it(1, 7, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::BS), vec![vec![q(7, 10)]]);
        st.arrive(it(2, 6, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::BB), vec![vec![q(7, 10), q(6, 10)]]);
        assert_eq!(st.count(StaticKind::BS), 0);
        st.arrive(it(3, 8, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::BS), vec![vec![q(8, 10)]]);
        let m = st.arrive(it(4, 3, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::BM), vec![vec![q(8, 10), q(3, 10)]]);
        assert_eq!(st.count(StaticKind::M), 0);
        assert_eq!(st.objective(), 2);
        assert!(m.moved <= Size::from_integer(27));
        assert!(st.check_invariants().is_empty());
    }

    #[test]
    fn small_arrivals_never_migrate() {
        let mut st = StaticState::new(q(1, 4)).unwrap();
        st.arrive(it(1, 7, 10)).unwrap();
        for k in 0..10 {
            let m = st.arrive(it(10 + k, 1, 8)).unwrap();
            assert!(m.moved.is_zero());
        }
        assert!(st.check_invariants().is_empty());
    }

    #[test]
    fn greedy_push_and_pull_examples() {
        let mut st = StaticState::new(q(1, 4)).unwrap();
        st.arrive(it(1, 3, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::M), vec![vec![q(3, 10)]]);
        st.arrive(it(2, 4, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::M), vec![vec![q(3, 10), q(4, 10)]]);
        // 8/10 covers with the medium items, so it opens a BM bin and pulls 4/10 first.
        st.arrive(it(3, 8, 10)).unwrap();
        assert_eq!(st.bins_of(StaticKind::BM), vec![vec![q(8, 10), q(4, 10)]]);
        assert_eq!(st.bins_of(StaticKind::M), vec![vec![q(3, 10)]]);
    }

    #[test]
    fn small_goes_to_most_loaded_bsp() {
        let st = StaticState::from_layout(
            q(1, 4),
            vec![
                (StaticKind::BS, vec![it(1, 8, 10)]),
                (StaticKind::BS, vec![it(2, 7, 10)]),
                (StaticKind::BB, vec![it(3, 6, 10), it(4, 6, 10)]),
            ],
        );
        let mut st = st.unwrap();
        st.arrive(it(5, 1, 10)).unwrap();
        assert_eq!(st.bin_of(ItemId(5)), st.bin_of(ItemId(1)).map(|(_, b)| (StaticKind::BS, b)));
    }

    #[test]
    fn legal_layouts_pass() {
        let eps = q(1, 4);
        let layouts = vec![
            vec![],
            vec![
                (StaticKind::BB, vec![it(1, 6, 10), it(2, 55, 100)]),
                (StaticKind::BS, vec![it(3, 7, 10), it(4, 1, 5), it(5, 1, 5)]),
                (StaticKind::BM, vec![it(6, 9, 10), it(7, 3, 10)]),
                (StaticKind::M, vec![it(8, 28, 100)]),
            ],
            vec![
                (StaticKind::BS, vec![it(1, 7, 10), it(2, 1, 5), it(3, 1, 5)]),
                (StaticKind::BS, vec![it(4, 6, 10), it(5, 1, 5)]),
                (StaticKind::BB, vec![it(6, 6, 10), it(7, 55, 100)]),
            ],
            vec![
                (StaticKind::M, vec![it(1, 3, 10), it(2, 3, 10), it(3, 3, 10), it(4, 3, 10)]),
                (StaticKind::M, vec![it(5, 3, 10)]),
                (StaticKind::S, vec![it(6, 1, 5); 1]),
            ],
        ];
        for layout in layouts {
            let st = StaticState::from_layout(eps.clone(), layout).unwrap();
            assert_eq!(st.check_invariants(), vec![]);
        }
    }

    #[test]
    fn broken_layout_reports_every_invariant() {
        // Two largest bigs paired, several open M bins, S next to BSP bins with smalls.
        let st = StaticState::from_layout(
            q(1, 4),
            vec![
                (StaticKind::BB, vec![it(1, 9, 10), it(2, 9, 10)]),
                (StaticKind::BS, vec![it(3, 6, 10), it(4, 1, 5)]),
                (StaticKind::BS, vec![it(5, 7, 10), it(6, 1, 10)]),
                (StaticKind::BS, vec![it(7, 55, 100)]),
                (StaticKind::M, vec![it(8, 3, 10)]),
                (StaticKind::M, vec![it(9, 3, 10)]),
                (StaticKind::S, vec![it(10, 1, 5)]),
                (StaticKind::S, vec![it(11, 1, 5)]),
            ],
        )
        .unwrap();
        let found = labels(&st.check_invariants());
        for inv in ["I2", "I3", "I4", "I5", "I6", "I7"] {
            assert!(found.contains(&inv), "{inv} missing from {found:?}");
        }
        assert!(!found.contains(&"I1"));
    }

    #[test]
    fn prop1_stream_total_is_bounded() {
        let eps = q(1, 12);
        let mut st = StaticState::new(eps).unwrap();
        for k in 0..6 {
            st.arrive(it(k, 11, 12)).unwrap();
        }
        let first = st.objective();
        for k in 6..12 {
            st.arrive(it(k, 1, 12)).unwrap();
            assert!(st.check_invariants().is_empty());
        }
        let second = st.objective();
        assert!(first + second <= 6, "{first} + {second}");
        assert!((2..=3).contains(&first));
    }

    #[test]
    fn epsilon_is_clamped_and_validated() {
        assert_eq!(StaticState::new(q(3, 4)).unwrap().eps(), &Size::half());
        assert!(StaticState::new(Size::zero()).is_err());
    }

    #[test]
    fn unit_items_get_their_own_bin() {
        let mut st = StaticState::new(q(1, 4)).unwrap();
        st.arrive(it(1, 1, 1)).unwrap();
        assert_eq!(st.objective(), 1);
        assert_eq!(st.count(StaticKind::Unit), 1);
        assert!(st.check_invariants().is_empty());
        assert!(matches!(st.arrive(it(1, 1, 2)), Err(Error::DuplicateItem(_))));
    }

    #[test]
    fn random_streams_keep_invariants_and_bounds() {
        use crate::oracle::{opt_exact, OracleLimits};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for eps in [q(1, 2), q(1, 4), q(1, 10)] {
            for _ in 0..150 {
                let mut st = StaticState::new(eps.clone()).unwrap();
                let mut live = Vec::new();
                for id in 0..14u64 {
                    let size = q(rng.gen_range(1..=100), 100);
                    let item = Item::new(id, size.clone());
                    live.push(item.clone());
                    let m = st.arrive(item).unwrap();
                    let v = st.check_invariants();
                    assert!(v.is_empty(), "{v:?}");
                    match classify(&size, &eps) {
                        ItemClass::Small => assert!(m.moved.is_zero()),
                        ItemClass::Medium => assert!(m.moved <= Size::from_integer(27)),
                        ItemClass::Big => assert!(m.moved <= Size::from_integer(11)),
                    }
                    assert!(st.last_big_reinsertions() <= 2);
                    let (opt, _) = opt_exact(&live, OracleLimits::default()).unwrap();
                    let bound = (q(3, 2) + &eps) * Size::from_integer(st.objective() as i64) + Size::from_integer(3);
                    assert!(Size::from_integer(opt as i64) <= bound);
                }
            }
        }
    }
}
