use std::collections::HashMap;
use std::sync::Arc;

use super::closure::ClosureType;
use crate::error::Result;
use crate::logic::{Connective, Formula, RelId, Signature, Structure, TypeAtom, Var};
use crate::scalar::Value;
use crate::trees::{NodeId, Tree};

/// `⋀ᵢ (pᵢ(x̄) → cᵢ)` for pairwise distinct complete closure types pᵢ over `rels`:
/// value `cᵢ` on tuples realizing pᵢ and 1 on all other tuples.
#[derive(Clone, Debug)]
pub struct ClosureBasic {
    pub vars: Vec<Var>,
    pub sig: Arc<Signature>,
    pub rels: Vec<RelId>,
    cases: Vec<(ClosureType, Value)>,
    index: HashMap<ClosureType, usize>,
}

impl ClosureBasic {
    pub fn new(vars: Vec<Var>, sig: Arc<Signature>, rels: Vec<RelId>, cases: Vec<(ClosureType, Value)>) -> ClosureBasic {
        let index = cases.iter().enumerate().map(|(i, (p, _))| (p.clone(), i)).collect();
        ClosureBasic { vars, sig, rels, cases, index }
    }

    pub fn cases(&self) -> &[(ClosureType, Value)] {
        &self.cases
    }

    /// Value on a tuple whose complete type over `rels` is `p`.
    pub fn value_of_type(&self, p: &ClosureType) -> Value {
        match self.index.get(p) {
            Some(&i) => self.cases[i].1.clone(),
            None => Value::Exact(num_traits::One::one()),
        }
    }

    pub fn value_at(&self, st: &dyn Structure, tree: &Tree, nodes: &[NodeId]) -> Result<Value> {
        for (i, a) in nodes.iter().enumerate() {
            if nodes[..i].contains(a) {
                return Ok(Value::Exact(num_traits::One::one()));
            }
        }
        let p = ClosureType::of_tuple(st, tree, nodes, &self.rels)?;
        Ok(self.value_of_type(&p))
    }

    /// The formula `and(implies(p₁, c₁), …)`.
    pub fn to_formula(&self) -> Formula {
        let clauses: Vec<Formula> = self
            .cases
            .iter()
            .filter(|(_, c)| !num_traits::One::is_one(c))
            .map(|(p, c)| {
                let atom = TypeAtom::new(p.clone(), self.vars.clone(), self.sig.clone());
                let c = match c {
                    Value::Exact(q) => q.clone(),
                    Value::Approx(x) => num_rational::BigRational::from_float(*x).unwrap_or_default(),
                };
                Formula::Conn(Connective::Implies, vec![Formula::Type(Box::new(atom)), Formula::Const(c)])
            })
            .collect();
        match clauses.len() {
            0 => Formula::top(),
            1 => clauses.into_iter().next().unwrap(),
            _ => Formula::Conn(Connective::And, clauses),
        }
    }
}
