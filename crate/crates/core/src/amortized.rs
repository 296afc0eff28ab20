//! Insertion-only algorithm with amortized migration: every arrival opens a
//! fresh bin, except at special times when the whole instance is repacked to
//! the offline reference packing.

use std::collections::{HashMap, HashSet};

use crate::bins::Tracker;
use crate::error::{Error, Result};
use crate::item::{BinId, BinIds, Item, ItemId};
use crate::ledger::{EventMigration, MigrationLedger};
use crate::oracle::{offline_reference, OracleLimits, Solver};
use crate::size::Size;
use crate::violation::Violation;

#[derive(Clone, Debug)]
pub struct AmortizedState {
    eps: Size,
    mu: Size,
    limits: OracleLimits,
    /// Offline value at the most recent special time.
    last_special_value: Option<usize>,
    special_times: Vec<usize>,
    bins: Vec<(BinId, Vec<Item>)>,
    ids: BinIds,
    tracker: Tracker,
    arrivals: usize,
    last_solver: Option<Solver>,
}

impl AmortizedState {
    /// `mu` defaults to ε³, which puts the first repack at offline value 3.
    pub fn new(eps: Size, mu: Option<Size>, limits: OracleLimits) -> Result<Self> {
        if !eps.is_positive() || eps > Size::half() {
            return Err(Error::BadEpsilon(eps.to_string(), "must lie in (0, 1/2]"));
        }
        let mu = mu.unwrap_or_else(|| &eps * &eps * &eps);
        if !mu.is_positive() {
            return Err(Error::BadEpsilon(mu.to_string(), "mu must be positive"));
        }
        Ok(AmortizedState {
            eps,
            mu,
            limits,
            last_special_value: None,
            special_times: Vec::new(),
            bins: Vec::new(),
            ids: BinIds::default(),
            tracker: Tracker::default(),
            arrivals: 0,
            last_solver: None,
        })
    }

    pub fn eps(&self) -> &Size {
        &self.eps
    }

    pub fn mu(&self) -> &Size {
        &self.mu
    }

    /// Offline value needed for the first repack: 3μ/ε³.
    pub fn first_threshold(&self) -> Size {
        Size::from(3) * &self.mu / (&self.eps * &self.eps * &self.eps)
    }

    pub fn last_special_value(&self) -> Option<usize> {
        self.last_special_value
    }

    /// Arrival indices (0-based) at which a repack happened.
    pub fn special_times(&self) -> &[usize] {
        &self.special_times
    }

    /// Solver used by the most recent offline evaluation.
    pub fn last_solver(&self) -> Option<Solver> {
        self.last_solver
    }

    pub fn ledger(&self) -> &MigrationLedger {
        &self.tracker.ledger
    }

    pub fn live_count(&self) -> usize {
        self.bins.iter().map(|(_, b)| b.len()).sum()
    }

    pub fn amortized_factor(&self) -> Size {
        self.tracker.ledger.amortized_factor()
    }

    pub fn objective(&self) -> usize {
        self.bins.iter().filter(|(_, b)| b.iter().map(|i| &i.size).sum::<Size>() >= Size::one()).count()
    }

    pub fn packing(&self) -> Vec<Vec<Item>> {
        self.bins.iter().map(|(_, b)| b.clone()).collect()
    }

    /// Every item sits in exactly one bin, and right after a repack the
    /// objective equals the offline value that triggered it.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (bin, items) in &self.bins {
            for it in items {
                if !seen.insert(it.id) {
                    out.push(Violation::new("A-placement", format!("item {} stored twice", it.id)));
                }
                if self.tracker.placements.bin_of(it.id) != Some(*bin) {
                    out.push(Violation::new("A-placement", format!("item {} tracked in the wrong bin", it.id)));
                }
            }
        }
        if seen.len() != self.tracker.placements.len() {
            out.push(Violation::new("A-placement", "tracked items differ from stored items"));
        }
        if self.special_times.last() == Some(&(self.arrivals.wrapping_sub(1))) {
            if let Some(v) = self.last_special_value {
                if self.objective() != v {
                    out.push(Violation::new(
                        "A-repack",
                        format!("objective {} after repack, offline value {v}", self.objective()),
                    ));
                }
            }
        }
        out
    }

    fn items(&self) -> Vec<Item> {
        self.bins.iter().flat_map(|(_, b)| b.iter().cloned()).collect()
    }

    pub fn arrive(&mut self, item: Item) -> Result<EventMigration> {
        if item.id.is_dummy() {
            return Err(Error::ReservedId(item.id));
        }
        if self.tracker.placements.contains(item.id) {
            return Err(Error::DuplicateItem(item.id));
        }
        self.tracker.ledger.begin_event(&item.size)?;
        let mut items = self.items();
        items.push(item.clone());
        let offline = offline_reference(&items, &self.eps, self.limits);
        self.last_solver = Some(offline.solver);
        let value = Size::from(offline.count as i64);
        let special = match self.last_special_value {
            None => value >= self.first_threshold(),
            Some(prev) => value >= (Size::one() + &self.eps) * Size::from(prev as i64),
        };
        if special {
            let by_id: HashMap<ItemId, Item> = items.into_iter().map(|i| (i.id, i)).collect();
            let target: Vec<Vec<Item>> =
                offline.packing.bins.iter().map(|b| b.iter().map(|id| by_id[id].clone()).collect()).collect();
            self.repack(target);
            self.last_special_value = Some(offline.count);
            self.special_times.push(self.arrivals);
        } else {
            let id = self.ids.fresh();
            self.tracker.place(&item, id);
            self.bins.push((id, vec![item]));
        }
        self.arrivals += 1;
        self.tracker.ledger.end_event()
    }

    /// Moves to `target`, reusing old bin ids so that as little size as
    /// possible is charged: identical bins keep their id, then remaining
    /// pairs are matched greedily by shared size.
    fn repack(&mut self, target: Vec<Vec<Item>>) {
        let old = std::mem::take(&mut self.bins);
        let key = |b: &[Item]| {
            let mut ids: Vec<ItemId> = b.iter().map(|i| i.id).collect();
            ids.sort();
            ids
        };
        let mut assigned: Vec<Option<BinId>> = vec![None; target.len()];
        let mut used: HashSet<usize> = HashSet::new();
        let mut by_content: HashMap<Vec<ItemId>, Vec<usize>> = HashMap::new();
        for (k, (_, b)) in old.iter().enumerate() {
            by_content.entry(key(b)).or_default().push(k);
        }
        for (t, bin) in target.iter().enumerate() {
            if let Some(k) = by_content.get_mut(&key(bin)).and_then(|v| v.pop()) {
                assigned[t] = Some(old[k].0);
                used.insert(k);
            }
        }
        let mut pairs: Vec<(Size, usize, usize)> = Vec::new();
        for (t, bin) in target.iter().enumerate() {
            if assigned[t].is_some() {
                continue;
            }
            let ids: HashSet<ItemId> = bin.iter().map(|i| i.id).collect();
            for (k, (_, b)) in old.iter().enumerate() {
                if used.contains(&k) {
                    continue;
                }
                let shared: Size = b.iter().filter(|i| ids.contains(&i.id)).map(|i| &i.size).sum();
                if shared.is_positive() {
                    pairs.push((shared, t, k));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, t, k) in pairs {
            if assigned[t].is_none() && !used.contains(&k) {
                assigned[t] = Some(old[k].0);
                used.insert(k);
            }
        }
        for (slot, bin) in assigned.into_iter().zip(target) {
            let id = slot.unwrap_or_else(|| self.ids.fresh());
            for it in &bin {
                self.tracker.place(it, id);
            }
            self.bins.push((id, bin));
        }
    }
}
