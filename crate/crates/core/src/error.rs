use thiserror::Error;

use crate::item::ItemId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed size literal {0:?}")]
    MalformedSize(String),
    #[error("item size {0} is outside (0, 1]")]
    SizeOutOfRange(String),
    #[error("epsilon {0} is not admissible: {1}")]
    BadEpsilon(String, &'static str),
    #[error("item {0} is already live")]
    DuplicateItem(ItemId),
    #[error("item {0} is not live")]
    UnknownItem(ItemId),
    #[error("item id {0} lies in the reserved dummy range")]
    ReservedId(ItemId),
    #[error("{0} items exceed the exact solver limit of {1}")]
    TooLarge(usize, usize),
    #[error("departures are not supported by the {0} algorithm")]
    DeparturesUnsupported(&'static str),
    #[error("move recorded outside of an event")]
    NoOpenEvent,
    #[error("an event is already open")]
    EventAlreadyOpen,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid generator parameter: {0}")]
    Generator(String),
    #[error("invariant violated after event {event}: {detail}")]
    Invariant {
        event: usize,
        detail: String,
        /// Debug rendering of the full algorithm state.
        dump: String,
    },
    #[error("malformed report: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;
