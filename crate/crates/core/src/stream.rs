//! Event streams and their text format.
//!
//! One event per line: `+ <id> <size>` or `- <id>`. Lines starting with `#`
//! are comments; `# key: value` records metadata and
//! `# phase <k> [opt=<n>]` marks that phase `k` starts at the next event.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::item::{Item, ItemId};
use crate::size::Size;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Arrive(Item),
    Depart(ItemId),
}

impl Event {
    pub fn is_departure(&self) -> bool {
        matches!(self, Event::Depart(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMark {
    /// Index of the first event of the phase.
    pub start: usize,
    pub label: usize,
    /// Known optimum after the phase completes, when the generator knows it.
    pub opt: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventStream {
    pub meta: Vec<(String, String)>,
    pub phases: Vec<PhaseMark>,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn arrive(&mut self, id: u64, size: Size) {
        self.events.push(Event::Arrive(Item::new(id, size)));
    }

    pub fn depart(&mut self, id: u64) {
        self.events.push(Event::Depart(ItemId(id)));
    }

    pub fn mark_phase(&mut self, label: usize, opt: Option<usize>) {
        self.phases.push(PhaseMark { start: self.events.len(), label, opt });
    }

    pub fn has_departures(&self) -> bool {
        self.events.iter().any(Event::is_departure)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks that ids are never reused and departures name live items.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut live = HashSet::new();
        for ev in &self.events {
            match ev {
                Event::Arrive(it) => {
                    if !seen.insert(it.id) {
                        return Err(Error::DuplicateItem(it.id));
                    }
                    if it.id.is_dummy() {
                        return Err(Error::ReservedId(it.id));
                    }
                    live.insert(it.id);
                }
                Event::Depart(id) => {
                    if !live.remove(id) {
                        return Err(Error::UnknownItem(*id));
                    }
                }
            }
        }
        Ok(())
    }

    /// Live items after the first `upto` events, in arrival order.
    pub fn live_items(&self, upto: usize) -> Vec<Item> {
        let mut live: Vec<Item> = Vec::new();
        for ev in &self.events[..upto] {
            match ev {
                Event::Arrive(it) => live.push(it.clone()),
                Event::Depart(id) => live.retain(|it| it.id != *id),
            }
        }
        live
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut phases = self.phases.iter().peekable();
        for (idx, ev) in self.events.iter().enumerate() {
            while let Some(p) = phases.next_if(|p| p.start == idx) {
                write_phase(&mut out, p);
            }
            match ev {
                Event::Arrive(it) => {
                    let _ = writeln!(out, "+ {} {}", it.id, it.size);
                }
                Event::Depart(id) => {
                    let _ = writeln!(out, "- {id}");
                }
            }
        }
        for p in phases {
            write_phase(&mut out, p);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = EventStream::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("phase ") {
                    let mut parts = rest.split_whitespace();
                    let label =
                        parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad phase label".into()))?;
                    let mut opt = None;
                    for p in parts {
                        if let Some(v) = p.strip_prefix("opt=") {
                            opt = Some(v.parse().map_err(|_| err(format!("bad opt value {v:?}")))?);
                        }
                    }
                    s.phases.push(PhaseMark { start: s.events.len(), label, opt });
                } else if let Some((k, v)) = comment.split_once(':') {
                    s.meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap_or_default();
            let id: u64 =
                parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("missing or invalid item id".into()))?;
            match op {
                "+" => {
                    let text = parts.next().ok_or_else(|| err("missing size".into()))?;
                    let size = Size::parse_item(text).map_err(|e| err(e.to_string()))?;
                    s.events.push(Event::Arrive(Item::new(id, size)));
                }
                "-" => s.events.push(Event::Depart(ItemId(id))),
                other => return Err(err(format!("unknown event kind {other:?}"))),
            }
            if parts.next().is_some() {
                return Err(err("trailing tokens".into()));
            }
        }
        s.validate()?;
        Ok(s)
    }
}

fn write_phase(out: &mut String, p: &PhaseMark) {
    match p.opt {
        Some(o) => {
            let _ = writeln!(out, "# phase {} opt={}", p.label, o);
        }
        None => {
            let _ = writeln!(out, "# phase {}", p.label);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut s = EventStream::new().with_meta("family", "test");
        s.mark_phase(0, None);
        s.arrive(1, Size::ratio(1, 2));
        s.arrive(2, Size::ratio(3, 10));
        s.mark_phase(1, Some(4));
        s.depart(1);
        let parsed = EventStream::parse(&s.to_text()).unwrap();
        assert_eq!(parsed, s);
        assert_eq!(parsed.meta("family"), Some("test"));
    }

    #[test]
    fn decimal_sizes_are_exact() {
        let s = EventStream::parse("+ 7 0.1\n").unwrap();
        assert_eq!(s.events[0], Event::Arrive(Item::new(7, Size::ratio(1, 10))));
    }

    #[test]
    fn rejects_bad_streams() {
        assert!(matches!(EventStream::parse("+ 1 1/2\n+ 1 1/3\n"), Err(Error::DuplicateItem(_))));
        assert!(matches!(EventStream::parse("- 4\n"), Err(Error::UnknownItem(_))));
        assert!(matches!(EventStream::parse("* 1 1/2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(EventStream::parse("+ 1 3/2\n"), Err(Error::Parse { .. })));
        assert!(matches!(EventStream::parse("+ 1 1/2\n- 1\n+ 1 1/2\n"), Err(Error::DuplicateItem(_))));
    }

    #[test]
    fn live_items_follow_events() {
        let s = EventStream::parse("+ 1 1/2\n+ 2 1/4\n- 1\n+ 3 1/8\n").unwrap();
        let ids: Vec<u64> = s.live_items(4).iter().map(|i| i.id.0).collect();
        assert_eq!(ids, vec![2, 3]);
        assert_eq!(s.live_items(2).len(), 2);
    }
}
