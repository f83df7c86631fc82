use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tree::Tree;
use crate::error::{Error, Result};

/// Which tree assumption a generated family satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    /// All leaves on level Δ, uniform sibling counts, fanout growing with n.
    Full,
    /// All leaves on level Δ and fanout between g₁(n) → ∞ and a polynomial.
    Light,
    Violating,
}

/// `coef · n^exp` children for every node on one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCount {
    pub coef: usize,
    pub exp: u32,
}

impl LevelCount {
    pub fn at(&self, n: usize) -> usize {
        self.coef * n.pow(self.exp)
    }
}

pub type ChildCountFn = Arc<dyn Fn(usize, usize, usize) -> usize + Send + Sync>;

#[derive(Clone)]
pub enum Profile {
    /// Every node above level Δ has exactly n children.
    Uniform,
    /// One count per level `0..Δ`.
    Schedule(Vec<LevelCount>),
    /// Height-2 family whose leaf levels depend on the parity of n.
    MixedLeaves,
    /// Height-2 family where one or two children of the root carry almost all leaves.
    FewBig,
    /// `f(level, index within level, n)` children; the tag is the caller's claim.
    Custom(ChildCountFn, Assumption),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Uniform => write!(f, "Uniform"),
            Profile::Schedule(s) => f.debug_tuple("Schedule").field(s).finish(),
            Profile::MixedLeaves => write!(f, "MixedLeaves"),
            Profile::FewBig => write!(f, "FewBig"),
            Profile::Custom(_, a) => write!(f, "Custom({:?})", a),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TreeGenConfig {
    pub height: usize,
    pub profile: Profile,
    pub n: usize,
}

impl TreeGenConfig {
    pub fn uniform(height: usize, n: usize) -> Self {
        TreeGenConfig { height, profile: Profile::Uniform, n }
    }

    pub fn mixed_leaves(n: usize) -> Self {
        TreeGenConfig { height: 2, profile: Profile::MixedLeaves, n }
    }

    pub fn few_big(n: usize) -> Self {
        TreeGenConfig { height: 2, profile: Profile::FewBig, n }
    }

    pub fn with_n(&self, n: usize) -> Self {
        TreeGenConfig { n, ..self.clone() }
    }

    pub fn assumption(&self) -> Assumption {
        match &self.profile {
            Profile::Uniform => Assumption::Full,
            Profile::Schedule(s) if s.iter().all(|c| c.coef >= 1 && c.exp >= 1) => Assumption::Full,
            Profile::Schedule(_) | Profile::MixedLeaves => Assumption::Violating,
            Profile::FewBig => Assumption::Light,
            Profile::Custom(_, a) => *a,
        }
    }

    fn count(&self, level: usize, index: usize) -> usize {
        let n = self.n;
        if level >= self.height {
            return 0;
        }
        match &self.profile {
            Profile::Uniform => n,
            Profile::Schedule(s) => s[level].at(n),
            Profile::MixedLeaves => match level {
                0 => n,
                _ => {
                    let big = if n % 2 == 0 { n / 2 } else { n / 3 };
                    if index < big {
                        n
                    } else {
                        0
                    }
                }
            },
            Profile::FewBig => match level {
                0 => n,
                _ if n % 2 == 1 && index == 0 => 2 * n.pow(3),
                _ if n % 2 == 0 && index < 2 => n.pow(3),
                _ => n,
            },
            Profile::Custom(f, _) => f(level, index, n),
        }
    }
}

/// Generates the tree for `cfg`, numbering nodes in BFS order.
pub fn generate_tree(cfg: &TreeGenConfig) -> Result<Tree> {
    if cfg.height == 0 {
        return Err(Error::InvalidTree("height must be at least 1".into()));
    }
    match &cfg.profile {
        Profile::Schedule(s) if s.len() != cfg.height => {
            return Err(Error::InvalidTree(format!(
                "schedule has {} levels, height is {}",
                s.len(),
                cfg.height
            )))
        }
        Profile::MixedLeaves | Profile::FewBig if cfg.height != 2 => {
            return Err(Error::InvalidTree("this profile has height 2".into()))
        }
        _ => {}
    }
    let mut parents = vec![None];
    let mut frontier = vec![0usize];
    for level in 0..cfg.height {
        let mut next = Vec::new();
        for (index, &v) in frontier.iter().enumerate() {
            for _ in 0..cfg.count(level, index) {
                next.push(parents.len());
                parents.push(Some(v));
            }
        }
        frontier = next;
    }
    Tree::new(&parents)
}
