use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::closure::{tuples, ClosureType, Literal};
use crate::error::{Error, Result};
use crate::logic::{RelId, SigmaStructure, Signature};
use crate::trees::{NodeId, Tree};

/// Limits for type enumeration.
#[derive(Clone, Copy, Debug)]
pub struct CatalogLimits {
    /// Most free variables allowed.
    pub max_vars: usize,
    /// Most types in one catalog.
    pub max_types: usize,
}

impl Default for CatalogLimits {
    fn default() -> Self {
        CatalogLimits { max_vars: 8, max_types: 1 << 20 }
    }
}

/// All closure types over τ in `k` free variables realizable in trees of height ≤ `delta`.
pub fn skeletons(k: usize, delta: usize) -> Vec<ClosureType> {
    let mut out = BTreeSet::new();
    // nodes: (parent, depth, outer index)
    let start = vec![(None, 0usize, None)];
    place(start, 0, k, delta, &mut out);
    out.into_iter().collect()
}

type Node = (Option<usize>, usize, Option<usize>);

fn place(nodes: Vec<Node>, i: usize, k: usize, delta: usize, out: &mut BTreeSet<ClosureType>) {
    if i == k {
        if let Some(t) = finish(&nodes, k) {
            out.insert(t);
        }
        return;
    }
    // an existing witness becomes x_i
    for (e, node) in nodes.iter().enumerate() {
        if node.2.is_none() {
            let mut next = nodes.clone();
            next[e].2 = Some(i);
            place(next, i + 1, k, delta, out);
        }
    }
    // a new branch below an existing node
    for u in 0..nodes.len() {
        let du = nodes[u].1;
        for d in du + 1..=delta {
            let mut next = nodes.clone();
            let mut at = u;
            for depth in du + 1..d {
                next.push((Some(at), depth, None));
                at = next.len() - 1;
            }
            next.push((Some(at), d, Some(i)));
            place(next, i + 1, k, delta, out);
        }
    }
}

fn finish(nodes: &[Node], k: usize) -> Option<ClosureType> {
    let n = nodes.len();
    // every witness must be an ancestor of a free variable
    let mut needed = vec![false; n];
    for (v, node) in nodes.iter().enumerate() {
        if node.2.is_some() || k == 0 {
            let mut cur = Some(v);
            while let Some(c) = cur {
                needed[c] = true;
                cur = nodes[c].0;
            }
        }
    }
    if needed.iter().any(|x| !x) {
        return None;
    }
    let mut order: Vec<usize> = (0..k).map(|i| nodes.iter().position(|nd| nd.2 == Some(i)).unwrap()).collect();
    order.extend((0..n).filter(|&v| nodes[v].2.is_none()));
    let mut idx = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        idx[old] = new;
    }
    let parent = order.iter().map(|&old| nodes[old].0.map(|p| idx[p])).collect();
    ClosureType::skeleton(k, parent).ok()
}

/// Every completion of `partial` over `rels`, keeping its literals.
pub fn completions(partial: &ClosureType, sig: &Signature, rels: &[RelId], limit: usize) -> Result<Vec<ClosureType>> {
    let n = partial.len();
    let open: Vec<Literal> = rels
        .iter()
        .flat_map(|&r| tuples(n, sig.arity(r)).map(move |t| (r, t)))
        .filter(|l| !partial.lits().contains_key(l))
        .collect();
    if open.len() >= 63 || (1usize << open.len()) > limit {
        return Err(Error::CatalogOverflow(limit));
    }
    let mut out = Vec::with_capacity(1 << open.len());
    for mask in 0..(1usize << open.len()) {
        let mut lits = partial.lits().clone();
        for (b, l) in open.iter().enumerate() {
            lits.insert(l.clone(), mask >> b & 1 == 1);
        }
        out.push(partial.with_lits(lits));
    }
    Ok(out)
}

/// All complete closure types over `rels` in `k` free variables, for trees of
/// height ≤ `delta`.
pub fn catalog(sig: &Signature, rels: &[RelId], k: usize, delta: usize, limits: CatalogLimits) -> Result<Vec<ClosureType>> {
    if k > limits.max_vars {
        return Err(Error::TooManyVariables(k, limits.max_vars));
    }
    let mut out = Vec::new();
    for s in skeletons(k, delta) {
        let room = limits.max_types.saturating_sub(out.len());
        out.extend(completions(&s, sig, rels, room)?);
    }
    Ok(out)
}

/// A concrete σ-structure realizing `p`: its own skeleton as the tree, with
/// undecided literals false. Returns the structure and the nodes of the free variables.
pub fn witness(p: &ClosureType, sig: &Arc<Signature>) -> Result<(SigmaStructure, Vec<NodeId>)> {
    let tree = Arc::new(Tree::new(p.parents())?);
    let mut st = SigmaStructure::empty(tree, sig.clone())?;
    for ((r, args), v) in p.lits() {
        st.set(*r, args, *v);
    }
    Ok((st, (0..p.outer()).collect()))
}

/// Orders the variables of cl(x̄ȳ)∖cl(x̄) so that each one's parent lies in
/// cl(x̄) or earlier in the list: the chain of rank-1 steps.
pub fn decompose(p: &ClosureType, bound: &[usize]) -> Result<Vec<usize>> {
    let rest: Vec<usize> = (0..p.outer()).filter(|v| !bound.contains(v)).collect();
    let base = p.closure_of(&rest);
    let mut new: Vec<usize> = (0..p.len()).filter(|v| !base.contains(v)).collect();
    if new.is_empty() {
        return Err(Error::NotDecomposable("rank is 0".into()));
    }
    new.sort_by_key(|&v| (p.depth(v), v));
    Ok(new)
}

/// Outcome of the syntactic positivity test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Positivity {
    Positive,
    Unknown,
}

/// Positivity in the fragment decidable without a network: types over τ and rank 0.
pub fn positivity(chi: &ClosureType, bound: &[usize]) -> Positivity {
    if chi.lits().is_empty() || chi.rank(bound) == 0 {
        Positivity::Positive
    } else {
        Positivity::Unknown
    }
}

/// Literal map helper for tests and callers building types by hand.
pub fn lits<const N: usize>(items: [(RelId, &[usize], bool); N]) -> BTreeMap<Literal, bool> {
    items.into_iter().map(|(r, a, v)| ((r, a.to_vec()), v)).collect()
}
