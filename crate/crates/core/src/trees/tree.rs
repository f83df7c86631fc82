use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An immutable rooted tree. Node ids are dense; generators number nodes in BFS
/// order so the root is 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<usize>,
    levels: Vec<Vec<NodeId>>,
    root: NodeId,
}

impl Tree {
    /// Builds a tree from a parent list (`None` marks the root).
    pub fn new(parents: &[Option<NodeId>]) -> Result<Tree> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::EmptyTree);
        }
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match p {
                None => match root {
                    None => root = Some(v),
                    Some(r) => return Err(Error::MultipleRoots(r, v)),
                },
                Some(p) if *p >= n => return Err(Error::DanglingParent { node: v, parent: *p }),
                Some(_) => {}
            }
        }
        let root = match root {
            Some(r) => r,
            None => return Err(Error::Cycle(0)),
        };
        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        let mut depth = vec![usize::MAX; n];
        let mut levels: Vec<Vec<NodeId>> = vec![vec![root]];
        depth[root] = 0;
        let mut seen = 1;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &c in &children[v] {
                    depth[c] = depth[v] + 1;
                    next.push(c);
                }
            }
            if next.is_empty() {
                break;
            }
            seen += next.len();
            levels.push(next);
        }
        if seen < n {
            let v = depth.iter().position(|d| *d == usize::MAX).unwrap();
            return Err(Error::Cycle(v));
        }
        Ok(Tree { parent: parents.to_vec(), children, depth, levels, root })
    }

    /// Builds a tree from per-node child counts listed in BFS order.
    pub fn from_child_counts(counts: impl IntoIterator<Item = usize>) -> Result<Tree> {
        let mut parents = vec![None];
        let mut next = 0usize;
        for c in counts {
            if next >= parents.len() {
                return Err(Error::InvalidTree("more child counts than nodes".into()));
            }
            for _ in 0..c {
                parents.push(Some(next));
            }
            next += 1;
        }
        Tree::new(&parents)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &[NodeId] {
        self.levels.get(l).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    /// Ancestors of `v`, nearest first, excluding `v`.
    pub fn ancestors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent[v], move |&u| self.parent[u])
    }

    pub fn is_ancestor(&self, u: NodeId, v: NodeId) -> bool {
        self.depth[u] < self.depth[v] && self.ancestors(v).nth(self.depth[v] - self.depth[u] - 1) == Some(u)
    }

    /// `B ∪ {root} ∪` all ancestors of members of `B`, sorted.
    pub fn closure(&self, nodes: &[NodeId]) -> Vec<NodeId> {
        let mut out = BTreeSet::new();
        out.insert(self.root);
        for &v in nodes {
            if out.insert(v) {
                for u in self.ancestors(v) {
                    if !out.insert(u) {
                        break;
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn is_closed(&self, nodes: &[NodeId]) -> bool {
        let set: BTreeSet<_> = nodes.iter().copied().collect();
        set.contains(&self.root) && set.iter().all(|&v| self.parent[v].is_none_or(|p| set.contains(&p)))
    }

    /// AHU encoding of the subtree below `v`; equal strings iff isomorphic.
    pub fn shape(&self, v: NodeId) -> String {
        let mut parts: Vec<String> = self.children[v].iter().map(|&c| self.shape(c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }

    /// Number of subtrees rooted at `a` isomorphic to `pattern`.
    pub fn count_rooted_subtrees(&self, a: NodeId, pattern: &Tree) -> BigUint {
        let mut shapes: HashMap<String, usize> = HashMap::new();
        let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
        let top = intern(pattern, pattern.root, &mut shapes, &mut classes);
        let mut memo = HashMap::new();
        count_at(self, a, top, &classes, &mut memo)
    }
}

/// Interns pattern shapes; `classes[s]` lists (child shape, multiplicity).
fn intern(
    p: &Tree,
    v: NodeId,
    shapes: &mut HashMap<String, usize>,
    classes: &mut Vec<Vec<(usize, usize)>>,
) -> usize {
    let mut kids: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in p.children(v) {
        *kids.entry(intern(p, c, shapes, classes)).or_default() += 1;
    }
    let key = p.shape(v);
    if let Some(&id) = shapes.get(&key) {
        return id;
    }
    let id = classes.len();
    classes.push(kids.into_iter().collect());
    shapes.insert(key, id);
    id
}

fn count_at(
    t: &Tree,
    v: NodeId,
    shape: usize,
    classes: &[Vec<(usize, usize)>],
    memo: &mut HashMap<(NodeId, usize), BigUint>,
) -> BigUint {
    if let Some(c) = memo.get(&(v, shape)) {
        return c.clone();
    }
    let need = &classes[shape];
    let mut states: HashMap<Vec<usize>, BigUint> = HashMap::new();
    states.insert(need.iter().map(|&(_, m)| m).collect(), BigUint::one());
    for &c in t.children(v) {
        let ways: Vec<BigUint> = need.iter().map(|&(s, _)| count_at(t, c, s, classes, memo)).collect();
        let mut next = states.clone();
        for (rem, cnt) in &states {
            for (k, w) in ways.iter().enumerate() {
                if rem[k] > 0 && !w.is_zero() {
                    let mut r = rem.clone();
                    r[k] -= 1;
                    *next.entry(r).or_insert_with(BigUint::zero) += cnt * w;
                }
            }
        }
        states = next;
    }
    let done = vec![0; need.len()];
    let out = states.remove(&done).unwrap_or_else(BigUint::zero);
    memo.insert((v, shape), out.clone());
    out
}
