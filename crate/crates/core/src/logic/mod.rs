//! PLA*: syntax, semantics, built-in connectives and aggregation functions.

mod ctprobe;
mod eval;
mod fo;
mod formula;
mod parser;
mod registry;
mod signature;
mod structure;

pub use ctprobe::{ct_probe, ct_probe_curve, ct_sample, CtParams};
pub use eval::{check, evaluate, evaluate_at, Valuation};
pub use fo::{embed_fo, Fo};
pub use formula::{fresh_name, Aggregate, Formula, TypeAtom, Var};
pub use parser::{parse, Parser};
pub use registry::{
    builtin_registry, lipschitz_probe, AggClass, Aggregation, Connective, CustomAggregation, CustomConnective,
};
pub use signature::{RelId, Signature, Sym, EDGE};
pub use structure::{GeneralStructure, SigmaStructure, Structure, Table};
