use std::collections::BTreeMap;

use super::formula::{Aggregate, Formula, Var};
use super::registry::Connective;
use super::signature::Sym;
use super::structure::Structure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trees::NodeId;

/// Assignment of nodes to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation(pub BTreeMap<Var, NodeId>);

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn with(mut self, var: &str, node: NodeId) -> Valuation {
        self.0.insert(var.to_string(), node);
        self
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, NodeId)>) -> Valuation {
        Valuation(pairs.into_iter().map(|(v, a)| (v.to_string(), a)).collect())
    }

    pub fn get(&self, var: &str) -> Option<NodeId> {
        self.0.get(var).copied()
    }
}

/// `A(φ(ā))`.
pub fn evaluate<T: Scalar>(st: &dyn Structure, phi: &Formula, val: &Valuation) -> Result<T> {
    check(st, phi, val)?;
    let mut ev = Evaluator { st, env: val.0.iter().map(|(v, a)| (v.as_str(), *a)).collect() };
    Ok(ev.eval(phi))
}

/// `A(φ(ā))` with `vars[i] ↦ nodes[i]`, without validation. Call [`check`] once
/// beforehand; unbound variables panic.
pub fn evaluate_at<T: Scalar>(st: &dyn Structure, phi: &Formula, vars: &[Var], nodes: &[NodeId]) -> T {
    let mut ev = Evaluator { st, env: vars.iter().map(|v| v.as_str()).zip(nodes.iter().copied()).collect() };
    ev.eval(phi)
}

/// Checks that `phi` can be evaluated on `st` under `val`.
pub fn check(st: &dyn Structure, phi: &Formula, val: &Valuation) -> Result<()> {
    for v in phi.free_vars() {
        match val.get(&v) {
            None => return Err(Error::UnboundVariable(v)),
            Some(a) if a >= st.size() => return Err(Error::NodeOutOfRange(a)),
            _ => {}
        }
    }
    let sig = st.signature();
    let mut bad = None;
    phi.walk(&mut |f| match f {
        Formula::Atom { sym: Sym::Rel(r), name, args } => {
            if sig.lookup(name) != Some(*r) || sig.arity(*r) != args.len() {
                bad = Some(name.clone());
            }
        }
        Formula::Type(t) => {
            for r in t.ty.rels_used() {
                let name = t.sig.name(r);
                if sig.lookup(name) != Some(r) {
                    bad = Some(name.to_string());
                }
            }
        }
        _ => {}
    });
    match bad {
        Some(name) => Err(Error::UnknownSymbol(name)),
        None => Ok(()),
    }
}

const SMALL: usize = 8;

struct Evaluator<'a> {
    st: &'a dyn Structure,
    env: Vec<(&'a str, NodeId)>,
}

impl<'a> Evaluator<'a> {
    fn lookup(&self, v: &str) -> NodeId {
        self.env.iter().rev().find(|(n, _)| *n == v).map(|(_, a)| *a).expect("free variables are checked up front")
    }

    fn truth<T: Scalar>(b: bool) -> T {
        if b {
            T::one()
        } else {
            T::zero()
        }
    }

    fn eval<T: Scalar>(&mut self, f: &'a Formula) -> T {
        match f {
            Formula::Const(q) => T::from_ratio(q),
            Formula::Eq(a, b) => Self::truth(self.lookup(a) == self.lookup(b)),
            Formula::Atom { sym, args, .. } => {
                let mut buf = [0; SMALL];
                let nodes = self.lookup_all(args, &mut buf);
                Self::truth(self.st.holds(*sym, &nodes))
            }
            Formula::Conn(c, args) => match c {
                Connective::Not => T::one() - self.eval::<T>(&args[0]),
                Connective::And => self.fold(args, T::one(), T::min_of),
                Connective::Or => self.fold(args, T::zero(), T::max_of),
                Connective::Product => self.fold(args, T::one(), |a, b| a * b),
                _ => {
                    let xs: Vec<T> = args.iter().map(|a| self.eval(a)).collect();
                    c.apply(&xs)
                }
            },
            Formula::Agg(a) => self.aggregate(a),
            Formula::Type(t) => {
                let mut buf = [0; SMALL];
                let nodes = self.lookup_all(t.free(), &mut buf);
                if (1..nodes.len()).any(|i| nodes[..i].contains(&nodes[i])) {
                    return T::zero();
                }
                Self::truth(t.ty.holds(self.st, &nodes))
            }
        }
    }

    fn fold<T: Scalar>(&mut self, args: &'a [Formula], init: T, f: impl Fn(T, T) -> T) -> T {
        let mut it = args.iter();
        match it.next() {
            None => init,
            Some(a) => {
                let first = self.eval(a);
                it.fold(first, |acc, b| f(acc, self.eval(b)))
            }
        }
    }

    /// Node values of `vars`, in `buf` when they fit.
    fn lookup_all<'b>(&self, vars: &[Var], buf: &'b mut [NodeId; SMALL]) -> std::borrow::Cow<'b, [NodeId]> {
        if vars.len() <= SMALL {
            for (slot, v) in buf.iter_mut().zip(vars) {
                *slot = self.lookup(v);
            }
            std::borrow::Cow::Borrowed(&buf[..vars.len()])
        } else {
            std::borrow::Cow::Owned(vars.iter().map(|v| self.lookup(v)).collect())
        }
    }

    fn aggregate<T: Scalar>(&mut self, a: &'a Aggregate) -> T {
        let k = a.bound.len();
        let mut slots = Vec::with_capacity(a.body.len());
        for (body, cond) in a.body.iter().zip(&a.cond) {
            let flat = self.conditioning::<T>(&a.bound, cond);
            let count = if k == 0 { flat.len() } else { flat.len() / k };
            if count == 0 {
                return T::zero();
            }
            let mut vals = Vec::with_capacity(count);
            for i in 0..count {
                self.push(&a.bound, &flat[i * k..(i + 1) * k]);
                vals.push(self.eval::<T>(body));
                self.pop(k);
            }
            slots.push(vals);
        }
        a.func.apply(&slots)
    }

    fn push(&mut self, vars: &'a [Var], nodes: &[NodeId]) {
        self.env.extend(vars.iter().map(|v| v.as_str()).zip(nodes.iter().copied()));
    }

    fn pop(&mut self, k: usize) {
        self.env.truncate(self.env.len() - k);
    }

    /// All b̄ with `A(χ(ā, b̄)) = 1`, in lexicographic order, concatenated. With
    /// no bound variables the result holds one dummy entry per satisfying tuple.
    fn conditioning<T: Scalar>(&mut self, bound: &'a [Var], cond: &'a Formula) -> Vec<NodeId> {
        let k = bound.len();
        if k == 0 {
            let v: T = self.eval(cond);
            return if v == T::one() { vec![0] } else { Vec::new() };
        }
        if let (Formula::Type(t), Some(_)) = (cond, self.st.tree()) {
            let free = t.free();
            let pos: Option<Vec<usize>> = bound.iter().map(|y| free.iter().position(|v| v == y)).collect();
            if let Some(pos) = pos {
                let known: Vec<Option<NodeId>> =
                    free.iter().map(|v| if bound.contains(v) { None } else { Some(self.lookup(v)) }).collect();
                let mut flat = Vec::new();
                t.ty.for_each_solution(self.st, &known, &mut |s| {
                    flat.extend(pos.iter().map(|&i| s[i]));
                    true
                });
                return sort_tuples(flat, k);
            }
        }
        let n = self.st.size();
        let mut out = Vec::new();
        let mut b = vec![0; k];
        let total = (n as u128).pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for slot in b.iter_mut().rev() {
                *slot = (c % n as u128) as usize;
                c /= n as u128;
            }
            self.push(bound, &b);
            let v: T = self.eval(cond);
            self.pop(k);
            if v == T::one() {
                out.extend_from_slice(&b);
            }
        }
        out
    }
}

/// Sorts and dedups the `k`-tuples stored back to back in `flat`.
fn sort_tuples(mut flat: Vec<NodeId>, k: usize) -> Vec<NodeId> {
    if k == 1 {
        flat.sort_unstable();
        flat.dedup();
        return flat;
    }
    let mut rows: Vec<&[NodeId]> = flat.chunks(k).collect();
    rows.sort_unstable();
    rows.dedup();
    rows.concat()
}
