//! Probabilistic logic with aggregation over trees.

pub mod eliminate;
pub mod error;
pub mod harness;
pub mod logic;
pub mod network;
pub mod scalar;
pub mod trees;
pub mod types;

pub use error::{Error, Result};
pub use logic::{evaluate, parse, Formula, Signature, Valuation};
pub use scalar::{Scalar, Value};
pub use trees::{NodeId, Tree};
