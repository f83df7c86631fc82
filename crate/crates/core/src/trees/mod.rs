//! Base trees: construction, navigation, closure, subtree counting, generators.

mod generate;
mod io;
mod tree;

pub use generate::{generate_tree, Assumption, ChildCountFn, LevelCount, Profile, TreeGenConfig};
pub use io::{read_tree, write_tree, TreeSpec};
pub use tree::{NodeId, Tree};
