//! Items, size classes and bin kinds.

use std::fmt;

use crate::size::Size;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ids at or above this value are reserved for internal placeholder items.
pub const DUMMY_ID_BASE: u64 = 1 << 62;

impl ItemId {
    pub fn is_dummy(self) -> bool {
        self.0 >= DUMMY_ID_BASE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinId(pub u64);

impl fmt::Display for BinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Item {
    pub id: ItemId,
    pub size: Size,
}

impl Item {
    pub fn new(id: u64, size: Size) -> Self {
        Item { id: ItemId(id), size }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemClass {
    Small,
    Medium,
    Big,
}

/// Big is (1/2, 1], medium is (eps, 1/2], small is (0, eps].
pub fn classify(size: &Size, eps: &Size) -> ItemClass {
    if *size > Size::half() {
        ItemClass::Big
    } else if size > eps {
        ItemClass::Medium
    } else {
        ItemClass::Small
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinKind {
    /// Two big items.
    BB,
    /// One big item plus medium items, barely covered.
    BM,
    /// One big item plus small items, covered.
    BSC,
    /// One big item plus small items, not covered.
    BSP,
    /// Medium items only.
    M,
    /// Small items only.
    S,
    /// Shared buffer of a group of parallel chains.
    GB,
}

impl fmt::Display for BinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Hands out fresh bin ids; ids are never reused within one state.
#[derive(Clone, Debug, Default)]
pub struct BinIds {
    next: u64,
}

impl BinIds {
    pub fn fresh(&mut self) -> BinId {
        let id = BinId(self.next);
        self.next += 1;
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_boundaries() {
        let eps = Size::ratio(1, 10);
        assert_eq!(classify(&Size::ratio(13, 20), &eps), ItemClass::Big);
        assert_eq!(classify(&Size::ratio(1, 10), &eps), ItemClass::Small);
        assert_eq!(classify(&Size::ratio(3, 10), &Size::ratio(3, 10)), ItemClass::Small);
        assert_eq!(classify(&Size::half(), &eps), ItemClass::Medium);
        assert_eq!(classify(&Size::one(), &eps), ItemClass::Big);
    }
}
