use std::fmt;

/// One failed invariant check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl Violation {
    pub fn new(invariant: &'static str, detail: impl Into<String>) -> Self {
        Violation { invariant, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

/// Distinct invariant labels in first-seen order.
pub fn labels(vs: &[Violation]) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = Vec::new();
    for v in vs {
        if !out.contains(&v.invariant) {
            out.push(v.invariant);
        }
    }
    out
}
