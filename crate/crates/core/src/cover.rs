//! Cover-state predicates on a bin's item multiset.

use crate::item::{classify, ItemClass};
use crate::size::Size;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverState {
    Uncovered,
    /// Barely covered but not well-covered.
    BarelyCovered,
    WellCovered,
    /// Covered but not barely covered.
    OverCovered,
}

impl CoverState {
    pub fn is_covered(self) -> bool {
        self != CoverState::Uncovered
    }

    pub fn is_barely_covered(self) -> bool {
        matches!(self, CoverState::BarelyCovered | CoverState::WellCovered)
    }

    pub fn is_well_covered(self) -> bool {
        self == CoverState::WellCovered
    }
}

pub fn load<'a>(sizes: impl IntoIterator<Item = &'a Size>) -> Size {
    sizes.into_iter().sum()
}

pub fn is_covered(sizes: &[Size]) -> bool {
    load(sizes) >= Size::one()
}

/// Covered, and dropping the biggest item of the smallest class present uncovers it.
pub fn is_barely_covered(sizes: &[Size], eps: &Size) -> bool {
    let total = load(sizes);
    if total < Size::one() {
        return false;
    }
    let Some(lowest) = sizes.iter().map(|s| classify(s, eps)).min() else {
        return false;
    };
    let biggest = sizes.iter().filter(|s| classify(s, eps) == lowest).max().expect("class present");
    total - biggest < Size::one()
}

/// Barely covered, and if the biggest big item together with the biggest
/// other item already covers, the bin holds at most two items.
pub fn is_well_covered(sizes: &[Size], eps: &Size) -> bool {
    if !is_barely_covered(sizes, eps) {
        return false;
    }
    let max_big = sizes.iter().filter(|s| classify(s, eps) == ItemClass::Big).max().cloned().unwrap_or_else(Size::zero);
    let max_rest =
        sizes.iter().filter(|s| classify(s, eps) != ItemClass::Big).max().cloned().unwrap_or_else(Size::zero);
    max_big + max_rest < Size::one() || sizes.len() <= 2
}

/// Some items can be added to reach well-covered; equivalently the bin is
/// uncovered or already well-covered.
pub fn is_at_most_well_covered(sizes: &[Size], eps: &Size) -> bool {
    !is_covered(sizes) || is_well_covered(sizes, eps)
}

pub fn cover_state(sizes: &[Size], eps: &Size) -> CoverState {
    if !is_covered(sizes) {
        CoverState::Uncovered
    } else if is_well_covered(sizes, eps) {
        CoverState::WellCovered
    } else if is_barely_covered(sizes, eps) {
        CoverState::BarelyCovered
    } else {
        CoverState::OverCovered
    }
}
