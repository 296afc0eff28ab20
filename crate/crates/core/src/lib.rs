pub mod adversary;
pub mod amortized;
pub mod bins;
pub mod chains;
pub mod cover;
pub mod dynamic_algo;
pub mod error;
pub mod groups;
pub mod harness;
pub mod item;
pub mod ledger;
pub mod oracle;
pub mod size;
pub mod static_algo;
pub mod stream;
pub mod violation;

pub use error::{Error, Result};
pub use item::{BinId, Item, ItemClass, ItemId};
pub use size::Size;
