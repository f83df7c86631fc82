use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::logic::{RelId, Signature, Structure, Sym};
use crate::trees::{NodeId, Tree};

pub type Literal = (RelId, Vec<usize>);

/// A closure type p(x̄): variables `0..outer` are the free variables x̄, the rest
/// are the existential witnesses cl(x̄)∖x̄. The τ-part is the skeleton `parent`
/// (exactly one variable, the root, has no parent); the σ∖τ part is a set of
/// literals over the variables, possibly partial.
///
/// Values are kept canonical: witnesses are numbered in the order in which they
/// are met walking up from x₀, x₁, … so syntactic equality is equivalence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosureType {
    outer: usize,
    parent: Vec<Option<usize>>,
    lits: BTreeMap<Literal, bool>,
}

impl ClosureType {
    /// Validates and canonicalizes. Returns the type and the map old index → new index.
    pub fn new(
        outer: usize,
        parent: Vec<Option<usize>>,
        lits: BTreeMap<Literal, bool>,
    ) -> Result<(ClosureType, Vec<usize>)> {
        let n = parent.len();
        let bad = |m: String| Err(Error::InvalidType(m));
        if n == 0 || outer > n {
            return bad("no variables".into());
        }
        if parent.iter().filter(|p| p.is_none()).count() != 1 {
            return bad("exactly one variable must be the root".into());
        }
        if parent.iter().flatten().any(|&p| p >= n) {
            return bad("parent index out of range".into());
        }
        // acyclic: every chain reaches the root within n steps
        for v in 0..n {
            let mut cur = v;
            for _ in 0..=n {
                match parent[cur] {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if parent[cur].is_some() {
                return bad("parent links contain a cycle".into());
            }
        }
        let mut order: Vec<usize> = (0..outer).collect();
        let mut placed = vec![false; n];
        for p in placed.iter_mut().take(outer) {
            *p = true;
        }
        for i in 0..outer {
            let mut cur = i;
            while let Some(p) = parent[cur] {
                if !placed[p] {
                    placed[p] = true;
                    order.push(p);
                }
                cur = p;
            }
        }
        if outer == 0 {
            if n != 1 {
                return bad("a type without free variables has only the root".into());
            }
            order.push(0);
        }
        if order.len() != n {
            return bad("some witness is not an ancestor of a free variable".into());
        }
        let mut map = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        let mut new_parent = vec![None; n];
        for (old, p) in parent.iter().enumerate() {
            new_parent[map[old]] = p.map(|p| map[p]);
        }
        let mut new_lits = BTreeMap::new();
        for ((r, args), v) in lits {
            if args.iter().any(|&a| a >= n) {
                return bad("literal mentions an unknown variable".into());
            }
            let key = (r, args.iter().map(|&a| map[a]).collect());
            if new_lits.insert(key, v) == Some(!v) {
                return bad("contradictory literals".into());
            }
        }
        Ok((ClosureType { outer, parent: new_parent, lits: new_lits }, map))
    }

    /// The type over τ of a skeleton, without relation literals.
    pub fn skeleton(outer: usize, parent: Vec<Option<usize>>) -> Result<ClosureType> {
        Ok(Self::new(outer, parent, BTreeMap::new())?.0)
    }

    pub fn outer(&self) -> usize {
        self.outer
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(|p| p.is_none()).unwrap()
    }

    pub fn depth(&self, v: usize) -> usize {
        let mut d = 0;
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
        }
        d
    }

    pub fn height(&self) -> usize {
        (0..self.len()).map(|v| self.depth(v)).max().unwrap_or(0)
    }

    pub fn lits(&self) -> &BTreeMap<Literal, bool> {
        &self.lits
    }

    pub fn literal(&self, r: RelId, args: &[usize]) -> Option<bool> {
        self.lits.get(&(r, args.to_vec())).copied()
    }

    /// The τ-part of the type.
    pub fn tau(&self) -> ClosureType {
        ClosureType { lits: BTreeMap::new(), ..self.clone() }
    }

    pub fn with_lits(&self, lits: BTreeMap<Literal, bool>) -> ClosureType {
        ClosureType { lits, ..self.clone() }
    }

    pub fn rels_used(&self) -> BTreeSet<RelId> {
        self.lits.keys().map(|(r, _)| *r).collect()
    }

    /// Complete over the relations `rels`: every tuple of every relation is decided
    /// and no other relation is mentioned.
    pub fn is_complete(&self, sig: &Signature, rels: &[RelId]) -> bool {
        let n = self.len();
        let expected: usize = rels.iter().map(|&r| n.pow(sig.arity(r) as u32)).sum();
        self.lits.len() == expected && self.lits.keys().all(|(r, _)| rels.contains(r))
    }

    /// Variables in cl of the given variables (the variables and all their ancestors).
    pub fn closure_of(&self, vars: &[usize]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        out.insert(self.root());
        for &v in vars {
            let mut cur = Some(v);
            while let Some(c) = cur {
                if !out.insert(c) && c != self.root() {
                    break;
                }
                cur = self.parent[c];
            }
        }
        out
    }

    /// rank with respect to the free variables in `bound`: the number of
    /// variables of cl(x̄ȳ) outside cl(x̄), where x̄ are the other free variables.
    pub fn rank(&self, bound: &[usize]) -> usize {
        let rest: Vec<usize> = (0..self.outer).filter(|v| !bound.contains(v)).collect();
        self.len() - self.closure_of(&rest).len()
    }

    /// No bound variable lies in cl of the other free variables.
    pub fn is_independent(&self, bound: &[usize]) -> bool {
        let rest: Vec<usize> = (0..self.outer).filter(|v| !bound.contains(v)).collect();
        let cl = self.closure_of(&rest);
        bound.iter().all(|b| !cl.contains(b))
    }

    /// All witnesses become free variables.
    pub fn self_contained(&self) -> ClosureType {
        ClosureType { outer: self.len(), ..self.clone() }
    }

    /// The closure type of the free variables `keep` (in that order): the
    /// variables are `keep` followed by their witnesses, literals restricted.
    pub fn restrict(&self, keep: &[usize]) -> ClosureType {
        self.restrict_map(keep).0
    }

    /// [`restrict`](Self::restrict), also returning for each variable of the
    /// result its index in `self`.
    pub fn restrict_map(&self, keep: &[usize]) -> (ClosureType, Vec<usize>) {
        let cl = self.closure_of(keep);
        let mut old: Vec<usize> = keep.to_vec();
        old.extend(cl.iter().copied().filter(|v| !keep.contains(v)));
        let mut idx = vec![usize::MAX; self.len()];
        for (i, &o) in old.iter().enumerate() {
            idx[o] = i;
        }
        let parent = old.iter().map(|&o| self.parent[o].map(|p| idx[p])).collect();
        let lits = self
            .lits
            .iter()
            .filter(|((_, args), _)| args.iter().all(|&a| idx[a] != usize::MAX))
            .map(|((r, args), v)| ((*r, args.iter().map(|&a| idx[a]).collect()), *v))
            .collect();
        let (ty, map) = Self::new(keep.len(), parent, lits).expect("restriction of a valid type");
        let mut back = vec![0; old.len()];
        for (pos, &o) in old.iter().enumerate() {
            back[map[pos]] = o;
        }
        (ty, back)
    }

    /// Drops literals of relations outside `rels`.
    pub fn restrict_rels(&self, rels: &[RelId]) -> ClosureType {
        let lits = self.lits.iter().filter(|((r, _), _)| rels.contains(r)).map(|(k, v)| (k.clone(), *v)).collect();
        self.with_lits(lits)
    }

    /// `self ⊨ other` for a type in the same free variables: same skeleton and
    /// every literal of `other` holds in `self`.
    pub fn entails(&self, other: &ClosureType) -> bool {
        self.outer == other.outer
            && self.parent == other.parent
            && other.lits.iter().all(|(k, v)| self.lits.get(k) == Some(v))
    }

    /// Same skeleton and no contradicting literal.
    pub fn consistent_with(&self, other: &ClosureType) -> bool {
        self.outer == other.outer
            && self.parent == other.parent
            && other.lits.iter().all(|(k, v)| self.lits.get(k).is_none_or(|w| w == v))
    }

    /// The complete type over `rels` of the distinct nodes `nodes` in `st`.
    pub fn of_tuple(st: &dyn Structure, tree: &Tree, nodes: &[NodeId], rels: &[RelId]) -> Result<ClosureType> {
        for (i, a) in nodes.iter().enumerate() {
            if *a >= tree.len() {
                return Err(Error::NodeOutOfRange(*a));
            }
            if nodes[..i].contains(a) {
                return Err(Error::InvalidType("closure types need distinct elements".into()));
            }
        }
        let mut vars: Vec<NodeId> = nodes.to_vec();
        for i in 0..nodes.len() {
            for u in tree.ancestors(nodes[i]) {
                if !vars.contains(&u) {
                    vars.push(u);
                }
            }
        }
        if vars.is_empty() {
            vars.push(tree.root());
        }
        let parent = vars.iter().map(|&a| tree.parent(a).map(|p| vars.iter().position(|&b| b == p).unwrap())).collect();
        let sig = st.signature();
        let mut lits = BTreeMap::new();
        for &r in rels {
            for args in tuples(vars.len(), sig.arity(r)) {
                let nodes: Vec<NodeId> = args.iter().map(|&i| vars[i]).collect();
                lits.insert((r, args), st.holds(Sym::Rel(r), &nodes));
            }
        }
        Ok(Self::new(nodes.len(), parent, lits)?.0)
    }

    /// Satisfaction of p(ā).
    pub fn holds(&self, st: &dyn Structure, nodes: &[NodeId]) -> bool {
        let known: Vec<Option<NodeId>> = nodes.iter().map(|&a| Some(a)).collect();
        if let Some(t) = st.tree() {
            let Some(assign) = self.anchor(t, &known) else { return false };
            if assign.iter().all(Option::is_some) {
                let at = |i: usize| assign[i].unwrap();
                return (1..assign.len()).all(|i| (0..i).all(|j| at(i) != at(j))) && self.lits_hold_at(st, at);
            }
        }
        !self.solutions(st, &known, true).is_empty()
    }

    /// All assignments of every variable (free and witness) that satisfy the type
    /// and extend `known` (one entry per free variable). With `first`, stops at one.
    pub fn solutions(&self, st: &dyn Structure, known: &[Option<NodeId>], first: bool) -> Vec<Vec<NodeId>> {
        match st.tree() {
            Some(t) => self.solutions_tree(st, t, known, first),
            None => self.solutions_general(st, known, first),
        }
    }

    fn solutions_tree(&self, st: &dyn Structure, t: &Tree, known: &[Option<NodeId>], first: bool) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        self.visit_tree(st, t, known, &mut |s| {
            out.push(s.to_vec());
            !first
        });
        out
    }

    /// Calls `f` on every solution as in [`ClosureType::solutions`]; `f` returns
    /// whether to continue.
    pub fn for_each_solution(&self, st: &dyn Structure, known: &[Option<NodeId>], f: &mut dyn FnMut(&[NodeId]) -> bool) {
        match st.tree() {
            Some(t) => self.visit_tree(st, t, known, f),
            None => {
                for s in self.solutions_general(st, known, false) {
                    if !f(&s) {
                        break;
                    }
                }
            }
        }
    }

    fn visit_tree(&self, st: &dyn Structure, t: &Tree, known: &[Option<NodeId>], f: &mut dyn FnMut(&[NodeId]) -> bool) {
        let Some(assign) = self.anchor(t, known) else { return };
        let mut free: Vec<usize> = (0..self.len()).filter(|&v| assign[v].is_none()).collect();
        free.sort_by_key(|&v| self.depth(v));
        let mut nodes: Vec<NodeId> = assign.iter().map(|a| a.unwrap_or(usize::MAX)).collect();
        self.descend(st, t, &free, 0, &mut nodes, f);
    }

    /// Assigns the known variables, their ancestors and the root; `None` if the
    /// skeleton cannot match.
    fn anchor(&self, t: &Tree, known: &[Option<NodeId>]) -> Option<Vec<Option<NodeId>>> {
        let n = self.len();
        let mut assign: Vec<Option<NodeId>> = vec![None; n];
        assign[..self.outer].copy_from_slice(&known[..self.outer]);
        for v in 0..self.outer {
            let Some(mut node) = assign[v] else { continue };
            let mut cur = v;
            loop {
                match (self.parent[cur], t.parent(node)) {
                    (None, None) => break,
                    (Some(pv), Some(pn)) => match assign[pv] {
                        Some(x) if x == pn => break,
                        Some(_) => return None,
                        None => {
                            assign[pv] = Some(pn);
                            cur = pv;
                            node = pn;
                        }
                    },
                    _ => return None,
                }
            }
        }
        let root = self.root();
        match assign[root] {
            Some(r) if r != t.root() => return None,
            _ => assign[root] = Some(t.root()),
        }
        Some(assign)
    }

    /// Returns false once `f` asks to stop.
    fn descend(
        &self,
        st: &dyn Structure,
        t: &Tree,
        free: &[usize],
        i: usize,
        nodes: &mut [NodeId],
        f: &mut dyn FnMut(&[NodeId]) -> bool,
    ) -> bool {
        if i == free.len() {
            return !self.distinct_and_lits(st, nodes) || f(nodes);
        }
        let v = free[i];
        let p = nodes[self.parent[v].unwrap()];
        for &c in t.children(p) {
            nodes[v] = c;
            if !self.descend(st, t, free, i + 1, nodes, f) {
                return false;
            }
        }
        true
    }

    fn distinct_and_lits(&self, st: &dyn Structure, nodes: &[NodeId]) -> bool {
        for i in 0..nodes.len() {
            if nodes[..i].contains(&nodes[i]) {
                return false;
            }
        }
        self.lits_hold(st, nodes)
    }

    fn lits_hold(&self, st: &dyn Structure, nodes: &[NodeId]) -> bool {
        self.lits_hold_at(st, |i| nodes[i])
    }

    fn lits_hold_at(&self, st: &dyn Structure, at: impl Fn(usize) -> NodeId) -> bool {
        let mut small = [0; 8];
        let mut big = Vec::new();
        self.lits.iter().all(|((r, args), v)| {
            let buf: &[NodeId] = if args.len() <= small.len() {
                for (s, &a) in small.iter_mut().zip(args) {
                    *s = at(a);
                }
                &small[..args.len()]
            } else {
                big.clear();
                big.extend(args.iter().map(|&a| at(a)));
                &big
            };
            st.holds(Sym::Rel(*r), buf) == *v
        })
    }

    /// Direct reading of ∃ȳ(atomic type ∧ closedness) on an arbitrary structure.
    fn solutions_general(&self, st: &dyn Structure, known: &[Option<NodeId>], first: bool) -> Vec<Vec<NodeId>> {
        let n = self.len();
        let size = st.size();
        let unknown: Vec<usize> = (0..n).filter(|&v| v >= self.outer || known[v].is_none()).collect();
        let mut out = Vec::new();
        let mut nodes: Vec<NodeId> = (0..n).map(|v| if v < self.outer { known[v].unwrap_or(0) } else { 0 }).collect();
        let total = (size as u128).pow(unknown.len() as u32);
        for code in 0..total {
            let mut c = code;
            for &v in unknown.iter().rev() {
                nodes[v] = (c % size as u128) as usize;
                c /= size as u128;
            }
            if self.holds_general(st, &nodes) {
                out.push(nodes.clone());
                if first {
                    break;
                }
            }
        }
        out
    }

    fn holds_general(&self, st: &dyn Structure, nodes: &[NodeId]) -> bool {
        let n = nodes.len();
        for i in 0..n {
            if nodes[..i].contains(&nodes[i]) {
                return false;
            }
        }
        for u in 0..n {
            for v in 0..n {
                if st.holds(Sym::Edge, &[nodes[u], nodes[v]]) != (self.parent[v] == Some(u)) {
                    return false;
                }
            }
        }
        for &b in nodes {
            for z in 0..st.size() {
                if st.holds(Sym::Edge, &[z, b]) && !nodes.contains(&z) {
                    return false;
                }
            }
        }
        self.lits_hold(st, nodes)
    }

    /// Renders the type as a `closed{...}` macro with the given variable names.
    pub fn render(&self, names: &[String], sig: &Signature) -> String {
        let mut parts = Vec::new();
        if self.outer < self.len() {
            parts.push(format!("exists {}", names[self.outer..].join(", ")));
        }
        for v in 0..self.len() {
            if let Some(p) = self.parent[v] {
                parts.push(format!("E({}, {})", names[p], names[v]));
            }
        }
        for ((r, args), v) in &self.lits {
            let args: Vec<&str> = args.iter().map(|&a| names[a].as_str()).collect();
            parts.push(format!("{}{}({})", if *v { "" } else { "!" }, sig.name(*r), args.join(", ")));
        }
        let mut s = String::from("closed{");
        for (i, p) in parts.iter().enumerate() {
            write!(s, "{}{}", if i == 0 { " " } else { "; " }, p).unwrap();
        }
        s.push_str(" }");
        s
    }
}

/// All tuples in `[0, n)^k` in lexicographic order.
pub fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(k as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        t
    })
}
