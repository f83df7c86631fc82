use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type RelId = usize;

/// Name of the binary tree relation in τ.
pub const EDGE: &str = "E";

/// A relation symbol: the tree edge relation or one of the σ∖τ relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Edge,
    Rel(RelId),
}

/// σ = {E} ∪ the listed relations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    rels: Vec<(String, usize)>,
}

impl Signature {
    pub fn new<S: Into<String>>(rels: impl IntoIterator<Item = (S, usize)>) -> Result<Signature> {
        let mut sig = Signature::default();
        for (name, arity) in rels {
            sig.add(name, arity)?;
        }
        Ok(sig)
    }

    pub fn add(&mut self, name: impl Into<String>, arity: usize) -> Result<RelId> {
        let name = name.into();
        if name == EDGE || self.lookup(&name).is_some() {
            return Err(Error::InvalidSpec(format!("relation `{}` declared twice", name)));
        }
        if !name.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            return Err(Error::InvalidSpec(format!("bad relation name `{}`", name)));
        }
        self.rels.push((name, arity));
        Ok(self.rels.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.rels.iter().position(|(n, _)| n == name)
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        if name == EDGE {
            Some(Sym::Edge)
        } else {
            self.lookup(name).map(Sym::Rel)
        }
    }

    pub fn name(&self, r: RelId) -> &str {
        &self.rels[r].0
    }

    pub fn arity(&self, r: RelId) -> usize {
        self.rels[r].1
    }

    pub fn sym_arity(&self, s: Sym) -> usize {
        match s {
            Sym::Edge => 2,
            Sym::Rel(r) => self.arity(r),
        }
    }

    pub fn sym_name(&self, s: Sym) -> &str {
        match s {
            Sym::Edge => EDGE,
            Sym::Rel(r) => self.name(r),
        }
    }

    pub fn ids(&self) -> std::ops::Range<RelId> {
        0..self.rels.len()
    }
}
