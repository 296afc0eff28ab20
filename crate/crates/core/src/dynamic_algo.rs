//! The fully dynamic algorithm: arrivals and departures with bounded
//! per-event migration and ratio 3/2 + ε up to an additive O(log 1/ε) term.

use std::collections::{BTreeMap, HashMap};

use crate::bins::{most_loaded_uncovered, pull_source, SimpleBin};
use crate::cover::is_barely_covered;
use crate::error::{Error, Result};
use crate::groups::{Ctx, GroupedBins, RepairStats};
use crate::item::{classify, BinId, Item, ItemClass, ItemId, DUMMY_ID_BASE};
use crate::ledger::{EventMigration, MigrationLedger};
use crate::size::Size;
use crate::violation::Violation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DynKind {
    BB,
    BM,
    M,
    Unit,
}

#[derive(Clone, Debug)]
struct Slot {
    kind: DynKind,
    bin: SimpleBin,
}

#[derive(Clone, Debug)]
pub struct DynamicState {
    eps: Size,
    inv_eps: usize,
    bins: BTreeMap<BinId, Slot>,
    grouped: GroupedBins,
    ctx: Ctx,
    live: HashMap<ItemId, Item>,
    next_dummy: u64,
}

/// Checks that 1/ε is an integer of at least 2 and returns it.
pub fn inverse_epsilon(eps: &Size) -> Result<usize> {
    if !eps.is_positive() || *eps > Size::half() {
        return Err(Error::BadEpsilon(eps.to_string(), "must lie in (0, 1/2]"));
    }
    eps.recip()
        .to_integer()
        .and_then(|k| usize::try_from(k).ok())
        .ok_or_else(|| Error::BadEpsilon(eps.to_string(), "1/ε must be an integer"))
}

/// Largest admissible value not above `eps`: 1/⌈1/ε⌉, capped at 1/2.
pub fn admissible_epsilon(eps: &Size) -> Result<Size> {
    if !eps.is_positive() {
        return Err(Error::BadEpsilon(eps.to_string(), "must be positive"));
    }
    let k = eps.recip().ceil();
    let k = i64::try_from(k).map_err(|_| Error::BadEpsilon(eps.to_string(), "too small"))?.max(2);
    Ok(Size::ratio(1, k))
}

fn rank_gt(a: &Item, b: &Item) -> bool {
    a.size > b.size || (a.size == b.size && a.id < b.id)
}

impl DynamicState {
    pub fn new(eps: Size) -> Result<Self> {
        let inv_eps = inverse_epsilon(&eps)?;
        Ok(DynamicState {
            eps,
            inv_eps,
            bins: BTreeMap::new(),
            grouped: GroupedBins::new(inv_eps),
            ctx: Ctx::default(),
            live: HashMap::new(),
            next_dummy: DUMMY_ID_BASE,
        })
    }

    pub fn eps(&self) -> &Size {
        &self.eps
    }

    /// The integer 1/ε.
    pub fn inv_eps(&self) -> usize {
        self.inv_eps
    }

    pub fn ledger(&self) -> &MigrationLedger {
        &self.ctx.tracker.ledger
    }

    pub fn repair_stats(&self) -> &RepairStats {
        &self.grouped.stats
    }

    pub fn grouped(&self) -> &GroupedBins {
        &self.grouped
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn live_items(&self) -> impl Iterator<Item = &Item> {
        self.live.values()
    }

    pub fn arrive(&mut self, item: Item) -> Result<EventMigration> {
        if item.id.is_dummy() {
            return Err(Error::ReservedId(item.id));
        }
        if self.live.contains_key(&item.id) {
            return Err(Error::DuplicateItem(item.id));
        }
        self.ctx.tracker.ledger.begin_event(&item.size)?;
        self.live.insert(item.id, item.clone());
        if item.size == Size::one() {
            let id = self.new_bin(DynKind::Unit);
            self.put(id, item);
        } else {
            match classify(&item.size, &self.eps) {
                ItemClass::Small => self.grouped.insert_small(item, &mut self.ctx),
                ItemClass::Medium => self.insert_medium(item),
                ItemClass::Big => self.insert_big(item, true),
            }
        }
        self.ctx.tracker.ledger.end_event()
    }

    pub fn depart(&mut self, id: ItemId) -> Result<EventMigration> {
        let item = self.live.remove(&id).ok_or(Error::UnknownItem(id))?;
        self.ctx.tracker.ledger.begin_event(&item.size)?;
        self.ctx.tracker.placements.forget(id);
        if item.size == Size::one() {
            let bin = self.simple_bin_holding(id).expect("unit item has its own bin");
            self.bins.remove(&bin);
        } else {
            match classify(&item.size, &self.eps) {
                ItemClass::Small => {
                    let found = self.grouped.remove_small(id, &mut self.ctx);
                    debug_assert!(found, "small item {id} not found");
                }
                ItemClass::Medium => self.remove_medium(id),
                ItemClass::Big => self.remove_big(id),
            }
        }
        self.ctx.tracker.ledger.end_event()
    }

    // ---- bookkeeping -------------------------------------------------

    fn new_bin(&mut self, kind: DynKind) -> BinId {
        let id = self.ctx.ids.fresh();
        self.bins.insert(id, Slot { kind, bin: SimpleBin::new(id) });
        id
    }

    fn put(&mut self, id: BinId, item: Item) {
        self.ctx.tracker.place(&item, id);
        self.bins.get_mut(&id).expect("bin exists").bin.items.push(item);
    }

    fn bin(&self, id: BinId) -> &SimpleBin {
        &self.bins[&id].bin
    }

    fn bin_mut(&mut self, id: BinId) -> &mut SimpleBin {
        &mut self.bins.get_mut(&id).expect("bin exists").bin
    }

    fn of(&self, kind: DynKind) -> impl Iterator<Item = &SimpleBin> + '_ {
        self.bins.values().filter(move |s| s.kind == kind).map(|s| &s.bin)
    }

    fn ids_of(&self, kind: DynKind) -> Vec<BinId> {
        self.of(kind).map(|b| b.id).collect()
    }

    fn count(&self, kind: DynKind) -> usize {
        self.of(kind).count()
    }

    fn simple_bin_holding(&self, id: ItemId) -> Option<BinId> {
        let bin = self.ctx.tracker.placements.bin_of(id);
        match bin {
            Some(b) if self.bins.get(&b).is_some_and(|s| s.bin.items.iter().any(|i| i.id == id)) => Some(b),
            _ => self.bins.values().find(|s| s.bin.items.iter().any(|i| i.id == id)).map(|s| s.bin.id),
        }
    }

    fn m_load(&self) -> Size {
        self.of(DynKind::M).map(|b| b.load()).sum()
    }

    fn bigs_of(&self, kind: DynKind) -> impl Iterator<Item = &Item> + '_ {
        let eps = &self.eps;
        self.of(kind).flat_map(move |b| b.items.iter().filter(move |i| classify(&i.size, eps) == ItemClass::Big))
    }

    fn max_bb(&self) -> Option<(Item, BinId)> {
        self.of(DynKind::BB).flat_map(|b| b.items.iter().map(move |i| (i.clone(), b.id))).reduce(|a, b| {
            if rank_gt(&b.0, &a.0) {
                b
            } else {
                a
            }
        })
    }

    fn dummy(&mut self, size: Size) -> Item {
        let id = self.next_dummy;
        self.next_dummy += 1;
        Item::new(id, size)
    }

    fn greedy_push(&mut self, item: Item, kind: DynKind) -> BinId {
        let target = most_loaded_uncovered(self.of(kind)).unwrap_or_else(|| self.new_bin(kind));
        self.put(target, item);
        target
    }

    /// Pulls medium items from M into `target` until it is covered.
    fn greedy_pull(&mut self, target: BinId) {
        loop {
            if self.bin(target).is_covered() {
                return;
            }
            let source = {
                let eps = &self.eps;
                pull_source(self.of(DynKind::M).filter(|b| b.id != target), eps)
            };
            let Some((from, item)) = source else { return };
            let it = self.bin_mut(from).take(item).expect("item in donor");
            self.put(target, it);
            if self.bin(from).items.is_empty() {
                self.bins.remove(&from);
            }
        }
    }

    // ---- big items -----------------------------------------------------

    fn insert_big(&mut self, item: Item, allow_bm: bool) {
        let min_bm = self.bigs_of(DynKind::BM).map(|i| i.size.clone()).min();
        let into_bm = &item.size + &self.m_load() >= Size::one() || min_bm.is_some_and(|m| item.size > m);
        if allow_bm && into_bm {
            self.insert_into_bm(item);
            return;
        }
        let beats_bs = self.grouped.min_big().is_some_and(|m| item.size > m.size);
        let tops_bb = self.max_bb().is_none_or(|(m, _)| item.size >= m.size);
        if beats_bs || (tops_bb && self.grouped.bs_count() <= self.count(DynKind::BB)) {
            self.insert_into_bs(item);
        } else {
            self.insert_into_bb(item);
        }
    }

    fn insert_into_bm(&mut self, item: Item) {
        let target = self.new_bin(DynKind::BM);
        self.put(target, item);
        self.greedy_pull(target);
        if self.bin(target).is_covered() {
            return;
        }
        let eps = self.eps.clone();
        let (evicted, from) = self
            .of(DynKind::BM)
            .filter(|b| b.id != target)
            .map(|b| (b.largest_of(&eps, ItemClass::Big).expect("BM has a big").clone(), b.id))
            .reduce(|a, b| if rank_gt(&a.0, &b.0) { b } else { a })
            .expect("a BM bin with a smaller big item exists");
        self.bin_mut(from).take(evicted.id);
        self.bins.get_mut(&from).expect("bin exists").kind = DynKind::M;
        self.greedy_pull(target);
        debug_assert!(self.bin(target).is_covered());
        self.insert_big(evicted, false);
    }

    fn insert_into_bs(&mut self, item: Item) {
        self.grouped.insert_big(item, &mut self.ctx);
        if self.grouped.bs_count() == self.count(DynKind::BB) + 2 {
            let size = match self.max_bb() {
                Some((i, _)) => i.size,
                None => self.grouped.min_big().expect("BS is non-empty").size.clone(),
            };
            let (d1, d2) = (self.dummy(size.clone()), self.dummy(size));
            let bin = self.new_bin(DynKind::BB);
            let (id1, id2) = (d1.id, d2.id);
            self.put(bin, d1);
            self.put(bin, d2);
            self.remove_big(id1);
            self.remove_big(id2);
        }
    }

    fn insert_into_bb(&mut self, item: Item) {
        if self.grouped.bs_count() == self.count(DynKind::BB) + 1 {
            let min = self.grouped.min_big().expect("BS is non-empty").id;
            let partner = self.grouped.extract_big(min, &mut self.ctx).expect("min big is in BS");
            self.after_bs_removal();
            let bin = self.new_bin(DynKind::BB);
            self.put(bin, item);
            self.put(bin, partner);
        } else {
            let (evicted, from) = self.max_bb().expect("BB is non-empty");
            self.bin_mut(from).take(evicted.id);
            self.put(from, item);
            self.insert_big(evicted, true);
        }
    }

    /// Rebalances BB against BS after BS shrank.
    fn after_bs_removal(&mut self) {
        if self.grouped.bs_count() + 2 != self.count(DynKind::BB) {
            return;
        }
        let mut bigs: Vec<(Item, BinId)> =
            self.of(DynKind::BB).flat_map(|b| b.items.iter().map(move |i| (i.clone(), b.id))).collect();
        bigs.sort_by(|a, b| if rank_gt(&a.0, &b.0) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        let (i1, b1) = bigs[0].clone();
        let (i2, b2) = bigs[1].clone();
        if b1 != b2 {
            let other = self.bin(b1).items.iter().find(|i| i.id != i1.id).expect("BB bin holds two items").clone();
            self.bin_mut(b1).take(other.id);
            self.bin_mut(b2).take(i2.id);
            self.put(b2, other);
        } else {
            self.bin_mut(b1).take(i2.id);
        }
        self.bin_mut(b1).take(i1.id);
        self.bins.remove(&b1);
        self.insert_big(i1, true);
        self.insert_big(i2, true);
    }

    fn remove_big(&mut self, id: ItemId) {
        if id.is_dummy() {
            self.ctx.tracker.placements.forget(id);
        }
        if let Some(bin) = self.simple_bin_holding(id) {
            match self.bins[&bin].kind {
                DynKind::BM => {
                    self.bin_mut(bin).take(id);
                    let mut mediums = std::mem::take(&mut self.bin_mut(bin).items);
                    self.bins.remove(&bin);
                    mediums.sort_by(
                        |a, b| if rank_gt(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater },
                    );
                    for m in mediums {
                        self.insert_medium(m);
                    }
                }
                DynKind::BB => self.remove_from_bb(bin, id),
                kind => unreachable!("big item in a {kind:?} bin"),
            }
            return;
        }
        if self.grouped.extract_big(id, &mut self.ctx).is_some() {
            self.after_bs_removal();
        }
    }

    fn remove_from_bb(&mut self, bin: BinId, id: ItemId) {
        let n_bb = self.count(DynKind::BB);
        let n_bs = self.grouped.bs_count();
        self.bin_mut(bin).take(id);
        let rest = self.bin(bin).items[0].clone();
        if n_bb >= n_bs {
            // The largest BB item, preferring the bin that lost an item.
            let (top, from) = self
                .of(DynKind::BB)
                .flat_map(|b| b.items.iter().map(move |i| (i.clone(), b.id)))
                .reduce(|a, b| {
                    let prefer_b = rank_gt(&b.0, &a.0) || (b.0.size == a.0.size && b.1 == bin && a.1 != bin);
                    if prefer_b {
                        b
                    } else {
                        a
                    }
                })
                .expect("BB is non-empty");
            self.bins.remove(&bin);
            if from != bin {
                self.bin_mut(from).take(top.id);
                self.put(from, rest);
                self.insert_big(top, true);
            } else {
                self.insert_big(rest, true);
            }
        } else {
            let min = self.grouped.min_big().expect("BS is non-empty").id;
            let partner = self.grouped.extract_big(min, &mut self.ctx).expect("min big is in BS");
            self.put(bin, partner);
            self.after_bs_removal();
        }
    }

    // ---- medium items --------------------------------------------------

    fn insert_medium(&mut self, item: Item) {
        self.greedy_push(item, DynKind::M);
        let top =
            self.grouped.max_big().map(|i| i.size.clone()).into_iter().chain(self.max_bb().map(|(i, _)| i.size)).max();
        let Some(top) = top else { return };
        if self.m_load() < Size::one() - &top {
            return;
        }
        if self.grouped.bs_count() == 0 {
            let target = self.ids_of(DynKind::BB)[0];
            let bin = self.bin(target);
            let (a, b) = (&bin.items[0], &bin.items[1]);
            let smaller = if rank_gt(a, b) { b.id } else { a.id };
            let evicted = self.bin_mut(target).take(smaller).expect("BB item");
            self.bins.get_mut(&target).expect("bin exists").kind = DynKind::BM;
            self.greedy_pull(target);
            self.insert_big(evicted, true);
            return;
        }
        let top_item = self.grouped.max_big().expect("BS is non-empty").clone();
        let stand_in = self.dummy(top_item.size.clone());
        let stand_in_id = stand_in.id;
        self.grouped.replace_big(top_item.id, stand_in, &mut self.ctx);
        let target = self.new_bin(DynKind::BM);
        self.put(target, top_item);
        self.greedy_pull(target);
        self.remove_big(stand_in_id);
    }

    fn remove_medium(&mut self, id: ItemId) {
        let bin = self.simple_bin_holding(id).expect("medium item sits in a plain bin");
        self.bin_mut(bin).take(id);
        let sizes = self.bin(bin).sizes();
        if is_barely_covered(&sizes, &self.eps) {
            return;
        }
        match self.bins[&bin].kind {
            DynKind::M => {
                let mut items = std::mem::take(&mut self.bin_mut(bin).items);
                self.bins.remove(&bin);
                items
                    .sort_by(|a, b| if rank_gt(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
                for m in items {
                    self.insert_medium(m);
                }
            }
            DynKind::BM => {
                self.greedy_pull(bin);
                if self.bin(bin).is_covered() {
                    return;
                }
                let eps = self.eps.clone();
                let big = self.bin(bin).largest_of(&eps, ItemClass::Big).expect("BM has a big").clone();
                self.bin_mut(bin).take(big.id);
                if self.bin(bin).items.is_empty() {
                    self.bins.remove(&bin);
                } else {
                    self.bins.get_mut(&bin).expect("bin exists").kind = DynKind::M;
                }
                // BM stays open: if another BM bin holds a smaller big item,
                // the reinsertion must displace it to keep D-I3.
                self.insert_big(big, true);
            }
            kind => unreachable!("medium item in a {kind:?} bin"),
        }
    }

    // ---- queries -------------------------------------------------------

    /// Number of covered bins.
    pub fn objective(&self) -> usize {
        let plain = self.bins.values().filter(|s| s.bin.is_covered()).count();
        let grouped = self.grouped.physical_bins().iter().filter(|(_, _, load)| *load >= Size::one()).count();
        plain + grouped
    }

    /// Item ids per physical bin.
    pub fn packing(&self) -> Vec<Vec<ItemId>> {
        let mut out: Vec<Vec<ItemId>> =
            self.bins.values().map(|s| s.bin.items.iter().map(|i| i.id).collect()).collect();
        out.extend(self.grouped.physical_bins().into_iter().map(|(_, ids, _)| ids));
        out.retain(|b| !b.is_empty());
        out
    }

    pub fn count_kind(&self, kind: DynKind) -> usize {
        self.count(kind)
    }

    /// Exchanges two big items held in BS without any repair.
    pub fn swap_bigs_unchecked(&mut self, a: ItemId, b: ItemId) -> bool {
        self.grouped.swap_bigs_unchecked(a, b)
    }

    pub fn check_invariants(&self) -> Vec<Violation> {
        let eps = &self.eps;
        let mut out = Vec::new();
        for slot in self.bins.values() {
            let b = &slot.bin;
            let n_big = b.count_class(eps, ItemClass::Big);
            let n_med = b.count_class(eps, ItemClass::Medium);
            let n_small = b.count_class(eps, ItemClass::Small);
            let barely = is_barely_covered(&b.sizes(), eps);
            let bad = match slot.kind {
                DynKind::Unit => b.items.len() != 1 || b.items[0].size != Size::one(),
                DynKind::BB => n_big != 2 || b.items.len() != 2,
                DynKind::BM => n_big != 1 || n_small > 0 || n_med == 0 || !barely,
                DynKind::M => n_big + n_small > 0 || n_med == 0 || (b.is_covered() && !barely),
            };
            if bad {
                out.push(Violation::new(
                    "D-I1",
                    format!("{:?} bin {} has composition {:?}", slot.kind, b.id, b.sizes()),
                ));
            }
        }
        for b in self.grouped.bs_bins() {
            let bad_big = b.big.as_ref().is_none_or(|i| classify(&i.size, eps) != ItemClass::Big);
            let bad_small = b.smalls.iter().any(|p| classify(&p.item.size, eps) != ItemClass::Small);
            if bad_big || bad_small || (b.is_covered() && !b.is_barely_covered(eps)) {
                out.push(Violation::new("D-I1", format!("BS bin {} has composition {:?}", b.id, b.sizes())));
            }
        }
        for b in self.grouped.seq.bins() {
            if b.smalls.iter().any(|p| classify(&p.item.size, eps) != ItemClass::Small) {
                out.push(Violation::new("D-I1", format!("S bin {} holds a non-small item", b.id)));
            }
        }
        if self.live.keys().any(|id| id.is_dummy())
            || self.bins.values().any(|s| s.bin.items.iter().any(|i| i.id.is_dummy()))
            || self.grouped.bigs().any(|i| i.id.is_dummy())
        {
            out.push(Violation::new("D-I1", "a dummy item outlived its event"));
        }

        let n_bb = self.count(DynKind::BB) as i64;
        let n_bs = self.grouped.bs_count() as i64;
        if (n_bb - n_bs).abs() > 1 {
            out.push(Violation::new("D-I2", format!("|BB| = {n_bb}, |BS| = {n_bs}")));
        }

        let bm_min = self.bigs_of(DynKind::BM).map(|i| &i.size).min();
        let bs_min = self.grouped.min_big().map(|i| &i.size);
        let bs_max = self.grouped.max_big().map(|i| &i.size);
        let bb_max = self.bigs_of(DynKind::BB).map(|i| &i.size).max();
        let lo1 = bm_min;
        let hi1 = bs_max.into_iter().chain(bb_max).max();
        if let (Some(lo), Some(hi)) = (lo1, hi1) {
            if lo < hi {
                out.push(Violation::new("D-I3", format!("BM vs BS and BB: {lo} < {hi}")));
            }
        }
        let lo2 = bm_min.into_iter().chain(bs_min).min();
        if let (Some(lo), Some(hi)) = (lo2, bb_max) {
            if lo < hi {
                out.push(Violation::new("D-I3", format!("BM and BS vs BB: {lo} < {hi}")));
            }
        }
        if let Some(top) = hi1 {
            let m = self.m_load();
            if m >= Size::one() - top {
                out.push(Violation::new("D-I4", format!("s(M) = {m} with biggest BS/BB item {top}")));
            }
        }
        let bsp = self.grouped.bs_bins().filter(|b| !b.is_covered()).count();
        if !self.grouped.seq.is_empty() && bsp > 0 {
            out.push(Violation::new("D-I5", format!("S is non-empty while {bsp} BS bins are uncovered")));
        }
        let open_m = self.of(DynKind::M).filter(|b| !b.is_covered()).count();
        if open_m > 1 {
            out.push(Violation::new("D-I6", format!("{open_m} uncovered M bins")));
        }
        let mut structural = Vec::new();
        self.grouped.violations(&mut structural);
        out.extend(structural.into_iter().map(|(inv, d)| Violation::new(inv, d)));

        // Every live item is stored exactly once.
        let mut stored: HashMap<ItemId, usize> = HashMap::new();
        for bin in self.packing() {
            for id in bin {
                *stored.entry(id).or_default() += 1;
            }
        }
        for id in self.live.keys() {
            if stored.get(id) != Some(&1) {
                out.push(Violation::new("D-I1", format!("item {id} is stored {} times", stored.get(id).unwrap_or(&0))));
            }
        }
        if stored.len() != self.live.len() {
            out.push(Violation::new("D-I1", "a departed item is still stored"));
        }
        out
    }
}
