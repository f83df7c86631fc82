use std::sync::Arc;

use num_traits::{One, Zero};

use super::Network;
use crate::error::{Error, Result};
use crate::logic::{check, evaluate, evaluate_at, Formula, RelId, SigmaStructure, Valuation};
use crate::scalar::Value;
use crate::trees::{NodeId, Tree};
use crate::types::tuples;

/// Limits and scope for exact enumeration.
#[derive(Clone, Debug)]
pub struct ExactOptions {
    /// The support may hold at most `2^max_branching` worlds.
    pub max_branching: usize,
    /// Most relation tuples to track.
    pub max_tuples: usize,
    /// Restrict to these relations (closed under parents).
    pub rels: Option<Vec<RelId>>,
    /// Restrict to tuples inside this closed node set; needs local θ.
    pub scope: Option<Vec<NodeId>>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { max_branching: 24, max_tuples: 4096, rels: None, scope: None }
    }
}

/// The distribution P_n as a table of its support.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    base: SigmaStructure,
    tuples: Vec<(RelId, Vec<NodeId>)>,
    worlds: Vec<(Vec<u64>, Value)>,
}

impl ExactDistribution {
    /// Enumerates every expansion of `tree` with positive probability, level by
    /// level, multiplying `θ_R(ā)` or `1 − θ_R(ā)` per tuple.
    pub fn new(tree: &Arc<Tree>, net: &Network, opts: &ExactOptions) -> Result<ExactDistribution> {
        let sig = net.sig().clone();
        let rels: Vec<RelId> = match &opts.rels {
            Some(rs) => {
                if !net.is_downward_closed(rs) {
                    return Err(Error::InvalidNetwork("relation subset is not closed under parents".into()));
                }
                net.order().iter().copied().filter(|r| rs.contains(r)).collect()
            }
            None => net.order().to_vec(),
        };
        let nodes: Vec<NodeId> = match &opts.scope {
            Some(s) => {
                if let Some(&a) = s.iter().find(|&&a| a >= tree.len()) {
                    return Err(Error::NodeOutOfRange(a));
                }
                if !tree.is_closed(s) {
                    return Err(Error::InvalidNetwork("scope is not a closed node set".into()));
                }
                if let Some(&r) = rels.iter().find(|&&r| !net.is_local(r)) {
                    return Err(Error::NotClosureBasic(format!("theta of `{}` is not local", sig.name(r))));
                }
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s
            }
            None => (0..tree.len()).collect(),
        };
        let mut list = Vec::new();
        for &r in &rels {
            for idx in tuples(nodes.len(), sig.arity(r)) {
                list.push((r, idx.iter().map(|&i| nodes[i]).collect::<Vec<_>>()));
                if list.len() > opts.max_tuples {
                    return Err(Error::TooManyTuples(list.len(), opts.max_tuples));
                }
            }
        }
        let base = SigmaStructure::empty(tree.clone(), sig.clone())?;
        for &r in &rels {
            let nr = net.relation(r);
            let val = Valuation::from_pairs(nr.vars.iter().map(|v| (v.as_str(), 0)));
            check(&base, &nr.theta, &val)?;
        }
        let mut dfs = Dfs {
            net,
            list: &list,
            st: base.clone(),
            bits: vec![0; list.len().div_ceil(64)],
            out: Vec::new(),
            cap: 1usize.checked_shl(opts.max_branching as u32).unwrap_or(usize::MAX),
            cap_bits: opts.max_branching,
        };
        dfs.run(0, Value::one())?;
        let worlds = dfs.out;
        Ok(ExactDistribution { base, tuples: list, worlds })
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// Tracked tuples, in enumeration order.
    pub fn tuples(&self) -> &[(RelId, Vec<NodeId>)] {
        &self.tuples
    }

    /// Σ of all world probabilities.
    pub fn total(&self) -> Value {
        self.worlds.iter().fold(Value::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// Calls `f` on every world of the support with its probability.
    pub fn for_each<E>(&self, mut f: impl FnMut(&SigmaStructure, &Value) -> std::result::Result<(), E>) -> std::result::Result<(), E> {
        let mut st = self.base.clone();
        for (bits, p) in &self.worlds {
            for (i, (r, args)) in self.tuples.iter().enumerate() {
                st.set(*r, args, bits[i / 64] >> (i % 64) & 1 == 1);
            }
            f(&st, p)?;
        }
        Ok(())
    }

    /// Worlds as owned structures.
    pub fn worlds(&self) -> Vec<(SigmaStructure, Value)> {
        let mut out = Vec::with_capacity(self.len());
        let _ = self.for_each::<()>(|st, p| {
            out.push((st.clone(), p.clone()));
            Ok(())
        });
        out
    }

    /// Mass of the worlds in which `event` holds.
    pub fn probability(&self, mut event: impl FnMut(&SigmaStructure) -> bool) -> Value {
        let mut acc = Value::zero();
        let _ = self.for_each::<()>(|st, p| {
            if event(st) {
                acc = acc.clone() + p.clone();
            }
            Ok(())
        });
        acc
    }

    /// `P(E^{φ(ā)})` for a 0/1-valued φ.
    pub fn event_probability(&self, phi: &Formula, val: &Valuation) -> Result<Value> {
        check(&self.base, phi, val)?;
        let mut acc = Value::zero();
        self.for_each(|st, p| {
            let v: Value = evaluate(st, phi, val)?;
            if v.is_one() {
                acc = acc.clone() + p.clone();
            } else if !v.is_zero() {
                return Err(Error::NotZeroOne(format!("{} takes value {}", phi, v)));
            }
            Ok(())
        })?;
        Ok(acc)
    }

    /// `P(E^{φ} | E^{ψ})`; `None` when the condition has probability 0.
    pub fn conditional(&self, phi: &Formula, given: &Formula, val: &Valuation) -> Result<Option<Value>> {
        let both = Formula::Conn(crate::logic::Connective::And, vec![phi.clone(), given.clone()]);
        let den = self.event_probability(given, val)?;
        if den.is_zero() {
            return Ok(None);
        }
        Ok(Some(self.event_probability(&both, val)? / den))
    }

    /// `E[A(φ(ā))]`.
    pub fn expectation(&self, phi: &Formula, val: &Valuation) -> Result<Value> {
        check(&self.base, phi, val)?;
        let mut acc = Value::zero();
        self.for_each(|st, p| {
            let v: Value = evaluate(st, phi, val)?;
            acc = acc.clone() + v * p.clone();
            Ok::<(), Error>(())
        })?;
        Ok(acc)
    }

    /// `P(R(ā))`.
    pub fn marginal(&self, r: RelId, args: &[NodeId]) -> Value {
        self.probability(|st| st.table(r).get(args))
    }
}

struct Dfs<'a> {
    net: &'a Network,
    list: &'a [(RelId, Vec<NodeId>)],
    st: SigmaStructure,
    bits: Vec<u64>,
    out: Vec<(Vec<u64>, Value)>,
    cap: usize,
    cap_bits: usize,
}

impl Dfs<'_> {
    fn run(&mut self, i: usize, p: Value) -> Result<()> {
        if i == self.list.len() {
            if self.out.len() >= self.cap {
                return Err(Error::TooManyTuples(self.cap_bits + 1, self.cap_bits));
            }
            self.out.push((self.bits.clone(), p));
            return Ok(());
        }
        let (r, args) = &self.list[i];
        let nr = self.net.relation(*r);
        let theta: Value = evaluate_at(&self.st, &nr.theta, &nr.vars, args);
        let miss = Value::one() - theta.clone();
        if !theta.is_zero() {
            self.set(i, true);
            self.run(i + 1, p.clone() * theta)?;
        }
        if !miss.is_zero() {
            self.set(i, false);
            self.run(i + 1, p * miss)?;
        }
        self.set(i, false);
        Ok(())
    }

    fn set(&mut self, i: usize, v: bool) {
        let (r, args) = &self.list[i];
        self.st.set(*r, args, v);
        if v {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::scalar::ratio;

    fn tiny() -> (Arc<Tree>, Network) {
        let tree = Arc::new(Tree::new(&[None, Some(0), Some(0)]).unwrap());
        let net = Network::parse(
            "network v1
relation P arity=1 parents=
theta P(x) = and(implies(closed{ exists r; E(r, x) }, 1/3), implies(closed{ x }, 0))
",
        )
        .unwrap();
        (tree, net)
    }

    #[test]
    fn tiny_example() {
        let (tree, net) = tiny();
        let d = ExactDistribution::new(&tree, &net, &ExactOptions::default()).unwrap();
        assert_eq!(d.total(), Value::one());
        assert_eq!(d.len(), 4);
        let both = d.probability(|st| st.table(0).get(&[1]) && st.table(0).get(&[2]) && !st.table(0).get(&[0]));
        assert_eq!(both, Value::Exact(ratio(1, 9)));
        assert_eq!(d.marginal(0, &[1]), Value::Exact(ratio(1, 3)));
        let sig = net.sig();
        let some = parse("exists x (P(x))", sig).unwrap();
        assert_eq!(d.event_probability(&some, &Valuation::new()).unwrap(), Value::Exact(ratio(5, 9)));
        let pa = parse("P(a)", sig).unwrap();
        let pb = parse("P(b)", sig).unwrap();
        let v = Valuation::new().with("a", 1).with("b", 2);
        assert_eq!(d.conditional(&pa, &pb, &v).unwrap(), Some(Value::Exact(ratio(1, 3))));
        let half = parse("1/2", sig).unwrap();
        assert!(matches!(d.event_probability(&half, &v), Err(Error::NotZeroOne(_))));
        assert_eq!(d.event_probability(&Formula::top(), &v).unwrap(), Value::one());
    }

    #[test]
    fn scope_and_caps() {
        let (tree, net) = tiny();
        let opts = ExactOptions { scope: Some(vec![0, 1]), ..Default::default() };
        let d = ExactDistribution::new(&tree, &net, &opts).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.marginal(0, &[1]), Value::Exact(ratio(1, 3)));
        let bad = ExactOptions { scope: Some(vec![1]), ..Default::default() };
        assert!(ExactDistribution::new(&tree, &net, &bad).is_err());
        let small = ExactOptions { max_branching: 1, ..Default::default() };
        assert!(matches!(ExactDistribution::new(&tree, &net, &small), Err(Error::TooManyTuples(..))));
    }
}
