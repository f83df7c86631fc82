use std::sync::Arc;

use super::signature::{Signature, Sym};
use crate::error::{Error, Result};
use crate::trees::{NodeId, Tree};

/// A finite structure the evaluator can query.
pub trait Structure: Sync {
    fn size(&self) -> usize;
    fn signature(&self) -> &Signature;
    fn holds(&self, sym: Sym, args: &[NodeId]) -> bool;
    /// The underlying tree when `E` is a parent relation.
    fn tree(&self) -> Option<&Tree> {
        None
    }
}

/// Dense truth table of one relation over `[0, n)^arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Table {
    arity: usize,
    n: usize,
    bits: Vec<u64>,
}

/// Largest table (in entries) we are willing to allocate.
const MAX_TABLE: u128 = 1 << 34;

impl Table {
    pub fn new(arity: usize, n: usize) -> Result<Table> {
        let entries = (n as u128).checked_pow(arity as u32).filter(|e| *e <= MAX_TABLE);
        let entries = entries.ok_or(Error::TooManyTuples(usize::MAX, MAX_TABLE as usize))? as usize;
        Ok(Table { arity, n, bits: vec![0; entries.div_ceil(64)] })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of tuples, `n^arity`.
    pub fn tuples(&self) -> usize {
        self.n.pow(self.arity as u32)
    }

    pub fn index(&self, args: &[NodeId]) -> usize {
        args.iter().fold(0, |acc, &a| acc * self.n + a)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<NodeId> {
        let mut out = vec![0; self.arity];
        for slot in out.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        out
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_index(&mut self, i: usize, v: bool) {
        if v {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn get(&self, args: &[NodeId]) -> bool {
        self.get_index(self.index(args))
    }

    pub fn set(&mut self, args: &[NodeId], v: bool) {
        let i = self.index(args);
        self.set_index(i, v)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// An expansion of a tree to σ: `E` is the parent relation, the rest are tables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SigmaStructure {
    tree: Arc<Tree>,
    sig: Arc<Signature>,
    tables: Vec<Table>,
}

impl SigmaStructure {
    /// All relations empty.
    pub fn empty(tree: Arc<Tree>, sig: Arc<Signature>) -> Result<SigmaStructure> {
        let tables = sig.ids().map(|r| Table::new(sig.arity(r), tree.len())).collect::<Result<_>>()?;
        Ok(SigmaStructure { tree, sig, tables })
    }

    pub fn tree_arc(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn sig_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn table(&self, r: usize) -> &Table {
        &self.tables[r]
    }

    pub fn table_mut(&mut self, r: usize) -> &mut Table {
        &mut self.tables[r]
    }

    pub fn set(&mut self, r: usize, args: &[NodeId], v: bool) {
        self.tables[r].set(args, v)
    }
}

impl Structure for SigmaStructure {
    fn size(&self) -> usize {
        self.tree.len()
    }
    fn signature(&self) -> &Signature {
        &self.sig
    }
    fn holds(&self, sym: Sym, args: &[NodeId]) -> bool {
        match sym {
            Sym::Edge => self.tree.parent(args[1]) == Some(args[0]),
            Sym::Rel(r) => self.tables[r].get(args),
        }
    }
    fn tree(&self) -> Option<&Tree> {
        Some(&self.tree)
    }
}

/// A finite structure with an arbitrary binary `E`, e.g. a link graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralStructure {
    sig: Signature,
    edge: Table,
    tables: Vec<Table>,
}

impl GeneralStructure {
    pub fn new(size: usize, sig: Signature) -> Result<GeneralStructure> {
        let tables = sig.ids().map(|r| Table::new(sig.arity(r), size)).collect::<Result<_>>()?;
        Ok(GeneralStructure { edge: Table::new(2, size)?, sig, tables })
    }

    pub fn from_edges(size: usize, edges: &[(NodeId, NodeId)]) -> Result<GeneralStructure> {
        let mut g = GeneralStructure::new(size, Signature::default())?;
        for &(a, b) in edges {
            if a >= size || b >= size {
                return Err(Error::NodeOutOfRange(a.max(b)));
            }
            g.edge.set(&[a, b], true);
        }
        Ok(g)
    }

    pub fn set(&mut self, sym: Sym, args: &[NodeId], v: bool) {
        match sym {
            Sym::Edge => self.edge.set(args, v),
            Sym::Rel(r) => self.tables[r].set(args, v),
        }
    }

    pub fn out_degree(&self, a: NodeId) -> usize {
        (0..self.edge.n).filter(|&b| self.edge.get(&[a, b])).count()
    }
}

impl Structure for GeneralStructure {
    fn size(&self) -> usize {
        self.edge.n
    }
    fn signature(&self) -> &Signature {
        &self.sig
    }
    fn holds(&self, sym: Sym, args: &[NodeId]) -> bool {
        match sym {
            Sym::Edge => self.edge.get(args),
            Sym::Rel(r) => self.tables[r].get(args),
        }
    }
}
