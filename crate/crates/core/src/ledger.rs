//! Migration accounting per event and cumulatively.
//!
//! An arriving item's first placement and a departing item's removal are
//! free. Every other change of an item's bin is charged the item's full size,
//! once per change.

use crate::error::{Error, Result};
use crate::item::ItemId;
use crate::size::Size;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub index: usize,
    pub trigger: Size,
    pub moved: Size,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventMigration {
    pub moved: Size,
    /// `moved / trigger`.
    pub factor: Size,
}

#[derive(Clone, Debug, Default)]
pub struct MigrationLedger {
    open: Option<Size>,
    current_event_moved: Size,
    cumulative_moved: Size,
    cumulative_arrived_departed: Size,
    per_event_rows: Vec<EventRecord>,
    moves_in_event: Vec<(ItemId, Size)>,
}

impl MigrationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn begin_event(&mut self, trigger: &Size) -> Result<()> {
        if self.open.is_some() {
            return Err(Error::EventAlreadyOpen);
        }
        self.open = Some(trigger.clone());
        self.current_event_moved = Size::zero();
        self.moves_in_event.clear();
        Ok(())
    }

    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    pub fn record_move(&mut self, item: ItemId, size: &Size) -> Result<()> {
        if self.open.is_none() {
            return Err(Error::NoOpenEvent);
        }
        self.current_event_moved += size;
        self.moves_in_event.push((item, size.clone()));
        Ok(())
    }

    pub fn end_event(&mut self) -> Result<EventMigration> {
        let trigger = self.open.take().ok_or(Error::NoOpenEvent)?;
        let moved = std::mem::take(&mut self.current_event_moved);
        self.cumulative_moved += &moved;
        self.cumulative_arrived_departed += &trigger;
        let factor = if trigger.is_positive() { &moved / &trigger } else { Size::zero() };
        self.per_event_rows.push(EventRecord { index: self.per_event_rows.len(), trigger, moved: moved.clone() });
        Ok(EventMigration { moved, factor })
    }

    /// Moves recorded in the open (or most recently closed) event.
    pub fn moves_in_event(&self) -> &[(ItemId, Size)] {
        &self.moves_in_event
    }

    pub fn current_event_moved(&self) -> &Size {
        &self.current_event_moved
    }

    pub fn cumulative_moved(&self) -> &Size {
        &self.cumulative_moved
    }

    pub fn cumulative_arrived_departed(&self) -> &Size {
        &self.cumulative_arrived_departed
    }

    pub fn per_event_rows(&self) -> &[EventRecord] {
        &self.per_event_rows
    }

    pub fn amortized_factor(&self) -> Size {
        if self.cumulative_arrived_departed.is_zero() {
            Size::zero()
        } else {
            &self.cumulative_moved / &self.cumulative_arrived_departed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_event_has_zero_factor() {
        let mut l = MigrationLedger::new();
        l.begin_event(&Size::ratio(1, 3)).unwrap();
        let m = l.end_event().unwrap();
        assert_eq!(m.moved, Size::zero());
        assert_eq!(m.factor, Size::zero());
    }

    #[test]
    fn repeated_moves_are_charged_each_time() {
        let mut l = MigrationLedger::new();
        l.begin_event(&Size::ratio(7, 10)).unwrap();
        l.record_move(ItemId(1), &Size::ratio(1, 10)).unwrap();
        l.record_move(ItemId(1), &Size::ratio(1, 10)).unwrap();
        let m = l.end_event().unwrap();
        assert_eq!(m.moved, Size::ratio(2, 10));
        assert_eq!(m.factor, Size::ratio(2, 7));
    }

    #[test]
    fn move_outside_event_is_an_error() {
        let mut l = MigrationLedger::new();
        assert_eq!(l.record_move(ItemId(1), &Size::one()), Err(Error::NoOpenEvent));
        assert_eq!(l.end_event(), Err(Error::NoOpenEvent));
    }

    #[test]
    fn cumulative_counters_match_rows() {
        let mut l = MigrationLedger::new();
        for k in 1..=5 {
            l.begin_event(&Size::ratio(1, 2)).unwrap();
            for _ in 0..k {
                l.record_move(ItemId(k), &Size::ratio(1, 8)).unwrap();
            }
            l.end_event().unwrap();
        }
        let total: Size = l.per_event_rows().iter().map(|r| r.moved.clone()).sum();
        assert_eq!(&total, l.cumulative_moved());
        assert_eq!(l.cumulative_arrived_departed(), &Size::ratio(5, 2));
        let before = l.amortized_factor();
        l.begin_event(&Size::ratio(1, 2)).unwrap();
        l.end_event().unwrap();
        assert!(l.amortized_factor() <= before);
    }
}
