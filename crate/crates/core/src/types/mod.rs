//! Closure types over σ relative to trees of bounded height.

mod basic;
mod catalog;
mod closure;

pub use basic::ClosureBasic;
pub use catalog::{catalog, completions, decompose, lits, positivity, skeletons, witness, CatalogLimits, Positivity};
pub use closure::{tuples, ClosureType, Literal};
