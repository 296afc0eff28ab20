//! Plain bins, item placement tracking and the two greedy selection rules.

use std::collections::HashMap;

use crate::cover::{self, CoverState};
use crate::item::{classify, BinId, Item, ItemClass, ItemId};
use crate::ledger::MigrationLedger;
use crate::size::Size;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleBin {
    pub id: BinId,
    pub items: Vec<Item>,
}

impl SimpleBin {
    pub fn new(id: BinId) -> Self {
        SimpleBin { id, items: Vec::new() }
    }

    pub fn load(&self) -> Size {
        self.items.iter().map(|i| &i.size).sum()
    }

    pub fn sizes(&self) -> Vec<Size> {
        self.items.iter().map(|i| i.size.clone()).collect()
    }

    pub fn is_covered(&self) -> bool {
        self.load() >= Size::one()
    }

    pub fn state(&self, eps: &Size) -> CoverState {
        cover::cover_state(&self.sizes(), eps)
    }

    pub fn of_class<'a>(&'a self, eps: &'a Size, class: ItemClass) -> impl Iterator<Item = &'a Item> + 'a {
        self.items.iter().filter(move |i| classify(&i.size, eps) == class)
    }

    pub fn count_class(&self, eps: &Size, class: ItemClass) -> usize {
        self.of_class(eps, class).count()
    }

    /// Largest item of the class, ties to the smallest id.
    pub fn largest_of(&self, eps: &Size, class: ItemClass) -> Option<&Item> {
        self.items.iter().filter(|i| classify(&i.size, eps) == class).fold(None, |best: Option<&Item>, it| match best {
            Some(b) if b.size > it.size || (b.size == it.size && b.id < it.id) => Some(b),
            _ => Some(it),
        })
    }

    pub fn largest_non_big(&self, eps: &Size) -> Option<&Item> {
        self.items.iter().filter(|i| classify(&i.size, eps) != ItemClass::Big).fold(None, |best: Option<&Item>, it| {
            match best {
                Some(b) if b.size > it.size || (b.size == it.size && b.id < it.id) => Some(b),
                _ => Some(it),
            }
        })
    }

    pub fn has_non_big(&self, eps: &Size) -> bool {
        self.items.iter().any(|i| classify(&i.size, eps) != ItemClass::Big)
    }

    pub fn take(&mut self, id: ItemId) -> Option<Item> {
        let pos = self.items.iter().position(|i| i.id == id)?;
        Some(self.items.remove(pos))
    }

    pub fn take_class(&mut self, eps: &Size, class: ItemClass) -> Vec<Item> {
        let (taken, kept) = std::mem::take(&mut self.items).into_iter().partition(|i| classify(&i.size, eps) == class);
        self.items = kept;
        taken
    }
}

/// Most loaded uncovered bin, ties to the smallest id.
pub fn most_loaded_uncovered<'a>(bins: impl IntoIterator<Item = &'a SimpleBin>) -> Option<BinId> {
    let mut best: Option<(Size, BinId)> = None;
    for b in bins {
        let l = b.load();
        if l >= Size::one() {
            continue;
        }
        match &best {
            Some((bl, bid)) if *bl > l || (*bl == l && *bid < b.id) => {}
            _ => best = Some((l, b.id)),
        }
    }
    best.map(|(_, id)| id)
}

/// The next item a pull would take: the largest non-big item of the least
/// loaded bin holding non-big items.
pub fn pull_source<'a>(bins: impl IntoIterator<Item = &'a SimpleBin>, eps: &Size) -> Option<(BinId, ItemId)> {
    let mut best: Option<(Size, &SimpleBin)> = None;
    for b in bins {
        if !b.has_non_big(eps) {
            continue;
        }
        let l = b.load();
        match &best {
            Some((bl, bb)) if *bl < l || (*bl == l && bb.id < b.id) => {}
            _ => best = Some((l, b)),
        }
    }
    best.map(|(_, b)| (b.id, b.largest_non_big(eps).expect("has non-big").id))
}

/// Last physical bin of every live item; charges the ledger whenever an item
/// is placed into a bin other than the one it last occupied.
#[derive(Clone, Debug, Default)]
pub struct Placements {
    loc: HashMap<ItemId, BinId>,
}

impl Placements {
    pub fn place(&mut self, ledger: &mut MigrationLedger, item: &Item, bin: BinId) {
        match self.loc.insert(item.id, bin) {
            Some(prev) if prev != bin && !item.id.is_dummy() => {
                ledger.record_move(item.id, &item.size).expect("event open during placement");
            }
            _ => {}
        }
    }

    pub fn forget(&mut self, id: ItemId) -> Option<BinId> {
        self.loc.remove(&id)
    }

    pub fn bin_of(&self, id: ItemId) -> Option<BinId> {
        self.loc.get(&id).copied()
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.loc.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loc.is_empty()
    }
}

/// Placements plus the ledger they charge, bundled for code that moves items
/// around without owning the whole algorithm state.
#[derive(Clone, Debug, Default)]
pub struct Tracker {
    pub placements: Placements,
    pub ledger: MigrationLedger,
}

impl Tracker {
    pub fn place(&mut self, item: &Item, bin: BinId) {
        self.placements.place(&mut self.ledger, item, bin);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(id: u64, sizes: &[(i64, i64)]) -> SimpleBin {
        SimpleBin {
            id: BinId(id),
            items: sizes
                .iter()
                .enumerate()
                .map(|(k, &(n, d))| Item::new(id * 100 + k as u64, Size::ratio(n, d)))
                .collect(),
        }
    }

    #[test]
    fn push_target_is_most_loaded_uncovered() {
        let bins = [bin(1, &[(7, 10)]), bin(2, &[(8, 10)]), bin(3, &[(1, 1)])];
        assert_eq!(most_loaded_uncovered(&bins), Some(BinId(2)));
        assert_eq!(most_loaded_uncovered(&bins[2..]), None);
        let tied = [bin(5, &[(1, 2)]), bin(4, &[(1, 2)])];
        assert_eq!(most_loaded_uncovered(&tied), Some(BinId(4)));
    }

    #[test]
    fn pull_takes_largest_from_least_loaded() {
        let eps = Size::ratio(1, 4);
        let bins = [bin(1, &[(3, 10), (4, 10)]), bin(2, &[(9, 10)]), bin(3, &[(3, 10), (3, 10), (3, 10)])];
        assert_eq!(pull_source(&bins, &eps), Some((BinId(1), ItemId(101))));
        assert_eq!(pull_source(&bins[1..2], &eps), None);
    }

    #[test]
    fn placements_charge_only_real_moves() {
        let mut l = MigrationLedger::new();
        let mut p = Placements::default();
        let it = Item::new(1, Size::ratio(1, 4));
        l.begin_event(&it.size).unwrap();
        p.place(&mut l, &it, BinId(1));
        p.place(&mut l, &it, BinId(1));
        assert!(l.current_event_moved().is_zero());
        p.place(&mut l, &it, BinId(2));
        assert_eq!(l.current_event_moved(), &Size::ratio(1, 4));
    }
}
