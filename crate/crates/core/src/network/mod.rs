//! Networks over σ∖τ and the distributions they induce on expansions of a tree.

mod exact;
mod sample;

pub use exact::{ExactDistribution, ExactOptions};
pub use sample::{derive_seed, estimate, sample, sample_with, Estimate};

use std::collections::BTreeSet;
use std::fmt::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::{Formula, Parser, RelId, Signature, Sym, Var};

/// One relation of a network with its parents and `θ_R(vars)`.
#[derive(Clone, Debug)]
pub struct NetRelation {
    pub parents: Vec<RelId>,
    pub vars: Vec<Var>,
    pub theta: Formula,
}

/// A DAG over the relations of σ∖τ with a formula θ_R per relation.
#[derive(Clone, Debug)]
pub struct Network {
    sig: Arc<Signature>,
    rels: Vec<NetRelation>,
    levels: Vec<usize>,
    order: Vec<RelId>,
    local: Vec<bool>,
}

impl Network {
    /// Validates the DAG and the θ formulas; `rels[r]` belongs to relation `r` of `sig`.
    pub fn new(sig: Arc<Signature>, rels: Vec<NetRelation>) -> Result<Network> {
        if rels.len() != sig.len() {
            return Err(Error::InvalidNetwork(format!("{} relations but {} theta blocks", sig.len(), rels.len())));
        }
        for (r, nr) in rels.iter().enumerate() {
            let name = sig.name(r);
            if let Some(&p) = nr.parents.iter().find(|&&p| p >= sig.len()) {
                return Err(Error::InvalidNetwork(format!("`{}` has unknown parent {}", name, p)));
            }
            if nr.vars.len() != sig.arity(r) {
                return Err(Error::ArityMismatch { name: name.into(), expected: sig.arity(r), got: nr.vars.len() });
            }
            let distinct: BTreeSet<&Var> = nr.vars.iter().collect();
            if distinct.len() != nr.vars.len() {
                return Err(Error::InvalidNetwork(format!("theta variables of `{}` repeat", name)));
            }
            if let Some(v) = nr.theta.free_vars().into_iter().find(|v| !nr.vars.contains(v)) {
                return Err(Error::UnboundVariable(v));
            }
            for s in nr.theta.relations() {
                if !nr.parents.contains(&s) {
                    return Err(Error::ThetaNotInParentSignature { rel: name.into(), sym: sig.name(s).into() });
                }
            }
        }
        let levels = levels(&sig, &rels)?;
        let mut order: Vec<RelId> = sig.ids().collect();
        order.sort_by_key(|&r| (levels[r], r));
        let local = rels.iter().map(|nr| is_local(&nr.theta)).collect();
        Ok(Network { sig, rels, levels, order, local })
    }

    /// Every relation has no parents and `θ_R ≡ c`.
    pub fn constant(sig: Arc<Signature>, c: num_rational::BigRational) -> Network {
        let rels = sig
            .ids()
            .map(|r| NetRelation {
                parents: vec![],
                vars: (0..sig.arity(r)).map(|i| format!("x{}", i)).collect(),
                theta: Formula::Const(c.clone()),
            })
            .collect();
        Network::new(sig, rels).expect("constant networks are valid")
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn relation(&self, r: RelId) -> &NetRelation {
        &self.rels[r]
    }

    pub fn level(&self, r: RelId) -> usize {
        self.levels[r]
    }

    /// Height of the DAG; −1 when σ = τ.
    pub fn height(&self) -> isize {
        self.levels.iter().map(|&l| l as isize).max().unwrap_or(-1)
    }

    /// Relations sorted by level, then id.
    pub fn order(&self) -> &[RelId] {
        &self.order
    }

    /// θ_R depends only on literals inside cl(ā).
    pub fn is_local(&self, r: RelId) -> bool {
        self.local[r]
    }

    /// Every θ_R is local; the exact constant calculus applies.
    pub fn is_closure_basic(&self) -> bool {
        self.local.iter().all(|&l| l)
    }

    /// The relations in `rels` and all their ancestors, sorted.
    pub fn ancestors(&self, rels: impl IntoIterator<Item = RelId>) -> Vec<RelId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<RelId> = rels.into_iter().collect();
        while let Some(r) = stack.pop() {
            if seen.insert(r) {
                stack.extend(self.rels[r].parents.iter().copied());
            }
        }
        seen.into_iter().collect()
    }

    /// Closed under parents.
    pub fn is_downward_closed(&self, rels: &[RelId]) -> bool {
        rels.iter().all(|&r| self.rels[r].parents.iter().all(|p| rels.contains(p)))
    }

    /// Parses the text format:
    ///
    /// ```text
    /// network v1
    /// relation P arity=1 parents=
    /// relation Q arity=1 parents=P
    /// let top(x) = closed{ x };
    /// theta P(x) = 1/2
    /// theta Q(x) = implies(P(x), 1/3)
    /// ```
    ///
    /// Lines starting with whitespace continue the previous statement. The variable
    /// list after `theta R` may be omitted when θ has exactly arity(R) free
    /// variables; they are then taken in sorted order.
    pub fn parse(text: &str) -> Result<Network> {
        let mut stmts: Vec<(usize, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with(char::is_whitespace) && !stmts.is_empty() {
                let last = stmts.last_mut().unwrap();
                last.1.push(' ');
                last.1.push_str(line.trim());
            } else {
                stmts.push((i + 1, line.trim().to_string()));
            }
        }
        let bad = |line: usize, msg: &str| Error::Parse { line, col: 1, msg: msg.into() };
        let mut it = stmts.into_iter();
        match it.next() {
            Some((_, h)) if h == "network v1" => {}
            Some((l, _)) => return Err(bad(l, "expected header `network v1`")),
            None => return Err(bad(1, "empty network file")),
        }
        let mut sig = Signature::default();
        let mut parent_names: Vec<(usize, Vec<String>)> = Vec::new();
        let mut rest = Vec::new();
        for (line, s) in it {
            let words: Vec<&str> = s.split_whitespace().collect();
            if words.first() != Some(&"relation") {
                rest.push((line, s));
                continue;
            }
            if !rest.is_empty() {
                return Err(bad(line, "relations must be declared before theta and let lines"));
            }
            let name = words.get(1).ok_or_else(|| bad(line, "missing relation name"))?;
            let mut arity = None;
            let mut parents = Vec::new();
            for w in &words[2..] {
                if let Some(a) = w.strip_prefix("arity=") {
                    arity = Some(a.parse::<usize>().map_err(|_| bad(line, "bad arity"))?);
                } else if let Some(p) = w.strip_prefix("parents=") {
                    parents.extend(p.split(',').filter(|p| !p.is_empty()).map(String::from));
                } else {
                    return Err(bad(line, &format!("unexpected `{}`", w)));
                }
            }
            let arity = arity.ok_or_else(|| bad(line, "missing arity="))?;
            sig.add(*name, arity)?;
            parent_names.push((line, parents));
        }
        let sig = Arc::new(sig);
        let mut parents = Vec::new();
        for (line, names) in parent_names {
            let ids = names
                .iter()
                .map(|n| sig.lookup(n).ok_or_else(|| Error::UnknownSymbol(n.clone())))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| match e {
                    Error::UnknownSymbol(n) => bad(line, &format!("unknown parent `{}`", n)),
                    e => e,
                })?;
            parents.push(ids);
        }
        let mut parser = Parser::new(sig.clone());
        let mut thetas: Vec<Option<(Vec<Var>, Formula)>> = vec![None; sig.len()];
        for (line, s) in rest {
            if s.starts_with("let ") {
                parser.parse(&format!("{} true", s)).map_err(|e| shift(e, line))?;
                continue;
            }
            let body = s.strip_prefix("theta ").ok_or_else(|| bad(line, "expected `relation`, `let` or `theta`"))?;
            let (head, formula) = body.split_once('=').ok_or_else(|| bad(line, "expected `theta R(vars) = formula`"))?;
            let head = head.trim();
            let (name, vars) = match head.split_once('(') {
                Some((n, v)) => {
                    let v = v.strip_suffix(')').ok_or_else(|| bad(line, "unclosed variable list"))?;
                    (n.trim(), Some(v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect::<Vec<_>>()))
                }
                None => (head, None),
            };
            let r = sig.lookup(name).ok_or_else(|| Error::UnknownSymbol(name.into()))?;
            let theta = parser.parse(formula).map_err(|e| shift(e, line))?;
            let vars = match vars {
                Some(v) => v,
                None => {
                    let fv: Vec<Var> = theta.free_vars().into_iter().collect();
                    if fv.len() != sig.arity(r) {
                        return Err(Error::ArityMismatch { name: name.into(), expected: sig.arity(r), got: fv.len() });
                    }
                    fv
                }
            };
            if thetas[r].replace((vars, theta)).is_some() {
                return Err(bad(line, &format!("second theta for `{}`", name)));
            }
        }
        let mut rels = Vec::new();
        for (r, (t, p)) in thetas.into_iter().zip(parents).enumerate() {
            let (vars, theta) = t.ok_or_else(|| Error::InvalidNetwork(format!("no theta for `{}`", sig.name(r))))?;
            rels.push(NetRelation { parents: p, vars, theta });
        }
        Network::new(sig, rels)
    }

    /// Text form accepted by [`Network::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("network v1\n");
        for r in self.sig.ids() {
            let ps: Vec<&str> = self.rels[r].parents.iter().map(|&p| self.sig.name(p)).collect();
            writeln!(out, "relation {} arity={} parents={}", self.sig.name(r), self.sig.arity(r), ps.join(",")).unwrap();
        }
        for r in self.sig.ids() {
            let nr = &self.rels[r];
            writeln!(out, "theta {}({}) = {}", self.sig.name(r), nr.vars.join(", "), nr.theta).unwrap();
        }
        out
    }
}

fn shift(e: Error, line: usize) -> Error {
    match e {
        Error::Parse { line: l, col, msg } => Error::Parse { line: line + l - 1, col, msg },
        e => e,
    }
}

fn levels(sig: &Signature, rels: &[NetRelation]) -> Result<Vec<usize>> {
    // 0 unvisited, 1 on stack, 2 done
    fn visit(r: RelId, rels: &[NetRelation], state: &mut [u8], level: &mut [usize], sig: &Signature) -> Result<usize> {
        match state[r] {
            2 => return Ok(level[r]),
            1 => return Err(Error::CyclicNetwork(sig.name(r).into())),
            _ => {}
        }
        state[r] = 1;
        let mut l = 0;
        for &p in &rels[r].parents {
            l = l.max(visit(p, rels, state, level, sig)? + 1);
        }
        state[r] = 2;
        level[r] = l;
        Ok(l)
    }
    let mut state = vec![0u8; rels.len()];
    let mut level = vec![0; rels.len()];
    for r in 0..rels.len() {
        visit(r, rels, &mut state, &mut level, sig)?;
    }
    Ok(level)
}

/// The value of `f` at ā depends only on relation literals inside cl(ā): every
/// aggregation conditions on closure types of rank 0.
pub fn is_local(f: &Formula) -> bool {
    match f {
        Formula::Const(_) | Formula::Eq(..) | Formula::Atom { .. } | Formula::Type(_) => true,
        Formula::Conn(_, args) => args.iter().all(is_local),
        Formula::Agg(a) => {
            a.body.iter().all(is_local)
                && a.cond.iter().all(|c| match c {
                    Formula::Type(t) => {
                        let pos: Option<Vec<usize>> =
                            a.bound.iter().map(|y| t.free().iter().position(|v| v == y)).collect();
                        pos.is_some_and(|p| t.ty.rank(&p) == 0)
                    }
                    _ => false,
                })
        }
    }
}

/// Names of the symbols a formula reads, for messages.
pub fn symbol_names(f: &Formula, sig: &Signature) -> Vec<String> {
    let mut out: Vec<String> = f.relations().into_iter().map(|r| sig.name(r).to_string()).collect();
    let mut edge = false;
    f.walk(&mut |g| {
        if let Formula::Atom { sym: Sym::Edge, .. } = g {
            edge = true
        }
    });
    if edge {
        out.push(crate::logic::EDGE.into());
    }
    out
}
