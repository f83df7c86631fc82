//! Asymptotic elimination: rewriting a formula into a closure-basic formula
//! whose constants come from Θ products, balance constants and ct-limits.

mod check;
mod constants;

pub use check::{check_asymptotic_equivalence, tuple_schedule, EquivalenceReport, EquivalenceRow};
pub use constants::{balance_constant, balance_chain, convergence_constant, Constant, Provenance};

use std::collections::HashMap;
use std::rc::Rc;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::{evaluate_at, AggClass, Aggregate, Formula, RelId, Sym, TypeAtom, Var};
use crate::network::Network;
use crate::scalar::{Scalar, Value};
use crate::trees::Assumption;
use crate::types::{catalog, completions, witness, CatalogLimits, ClosureBasic, ClosureType};

/// Settings for the compiler.
#[derive(Clone, Debug)]
pub struct EliminationOptions {
    /// Height bound Δ of the trees.
    pub delta: usize,
    /// Which tree assumption the family satisfies.
    pub assumption: Assumption,
    pub limits: CatalogLimits,
    /// Most completions enumerated for one aggregation case.
    pub max_extensions: usize,
}

impl EliminationOptions {
    pub fn new(delta: usize) -> EliminationOptions {
        EliminationOptions { delta, assumption: Assumption::Full, limits: CatalogLimits::default(), max_extensions: 1 << 16 }
    }

    pub fn with_assumption(mut self, a: Assumption) -> Self {
        self.assumption = a;
        self
    }
}

/// One outer type of one aggregation.
#[derive(Clone, Debug, Serialize)]
pub struct AggCase {
    pub outer_type: String,
    pub ranks: Vec<usize>,
    /// Per slot, `[c, α]` pairs as decimal strings of exact values where possible.
    pub params: Vec<Vec<[String; 2]>>,
    pub limit: String,
    pub note: Option<String>,
}

/// The record of one aggregation subformula of the input.
#[derive(Clone, Debug, Serialize)]
pub struct AggEntry {
    pub agg: String,
    pub class: String,
    pub cases: Vec<AggCase>,
}

/// A constant the compiler used.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantEntry {
    pub kind: String,
    pub p: String,
    pub q: String,
    pub value: String,
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EliminationReport {
    pub input: String,
    pub output_formula: String,
    pub provenance: String,
    pub ledger: Vec<AggEntry>,
    pub constants: Vec<ConstantEntry>,
    pub warnings: Vec<String>,
}

/// Rewrites `phi` into a closure-basic formula asymptotically equivalent to it
/// with respect to the distributions of `net` on trees satisfying `opts.assumption`.
pub fn eliminate(net: &Network, phi: &Formula, opts: &EliminationOptions) -> Result<(ClosureBasic, EliminationReport)> {
    let mut c = Compiler::new(net, opts);
    let mut entries = Vec::new();
    phi.walk(&mut |f| {
        if let Formula::Agg(a) = f {
            entries.push((f as *const Formula as usize, a));
        }
    });
    for (i, (ptr, a)) in entries.iter().enumerate() {
        c.ledger_index.insert(*ptr, i);
        c.ledger.push(AggEntry {
            agg: Formula::Agg(Box::new((*a).as_ref().clone())).to_string(),
            class: class_name(a.func.class()).into(),
            cases: Vec::new(),
        });
    }
    let out = c.compile(phi)?;
    let report = EliminationReport {
        input: phi.to_string(),
        output_formula: out.to_formula().to_string(),
        provenance: c.provenance().into(),
        ledger: c.ledger,
        constants: c.constants,
        warnings: c.warnings,
    };
    Ok((out, report))
}

fn class_name(c: AggClass) -> &'static str {
    match c {
        AggClass::Continuous => "continuous",
        AggClass::Admissible => "admissible",
        AggClass::Neither => "neither",
    }
}

/// Free variables in sorted order; the variable order of every type attached to `f`.
fn vars_of(f: &Formula) -> Vec<Var> {
    f.free_vars().into_iter().collect()
}

fn positions(of: &[Var], within: &[Var]) -> Vec<usize> {
    of.iter().map(|v| within.iter().position(|w| w == v).expect("variable in scope")).collect()
}

fn show(v: &Value) -> String {
    v.to_string()
}

pub(crate) struct Compiler<'n> {
    net: &'n Network,
    opts: EliminationOptions,
    memo: HashMap<(usize, ClosureType), Value>,
    renamed: HashMap<(RelId, Vec<usize>), Rc<Formula>>,
    ledger_index: HashMap<usize, usize>,
    ledger: Vec<AggEntry>,
    constants: Vec<ConstantEntry>,
    warnings: Vec<String>,
    pub(crate) used_limits: bool,
}

impl<'n> Compiler<'n> {
    pub(crate) fn new(net: &'n Network, opts: &EliminationOptions) -> Compiler<'n> {
        Compiler {
            net,
            opts: opts.clone(),
            memo: HashMap::new(),
            renamed: HashMap::new(),
            ledger_index: HashMap::new(),
            ledger: Vec::new(),
            constants: Vec::new(),
            warnings: Vec::new(),
            used_limits: false,
        }
    }

    fn provenance(&self) -> &'static str {
        if self.used_limits {
            "limit-product"
        } else {
            "exact-product"
        }
    }

    /// Relations `f` depends on through the network, sorted.
    pub(crate) fn relevant(&self, f: &Formula) -> Vec<RelId> {
        self.net.ancestors(f.relations())
    }

    fn render(&self, p: &ClosureType, names: &[Var]) -> String {
        let atom = TypeAtom::new(p.clone(), names.to_vec(), self.net.sig().clone());
        Formula::Type(Box::new(atom)).to_string()
    }

    fn compile(&mut self, phi: &Formula) -> Result<ClosureBasic> {
        let xs = vars_of(phi);
        let rels = self.relevant(phi);
        let qs = catalog(self.net.sig(), &rels, xs.len(), self.opts.delta, self.opts.limits)?;
        let mut cases = Vec::with_capacity(qs.len());
        for q in qs {
            let v = self.elim(phi, &q)?;
            cases.push((q, v));
        }
        Ok(ClosureBasic::new(xs, self.net.sig().clone(), rels, cases))
    }

    /// The limit value of `f` on tuples of complete type `q`, whose free
    /// variables are the sorted free variables of `f`.
    pub(crate) fn elim(&mut self, f: &Formula, q: &ClosureType) -> Result<Value> {
        let key = (f as *const Formula as usize, q.clone());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let vars = vars_of(f);
        let v = match f {
            Formula::Const(c) => Value::Exact(c.clone()),
            Formula::Eq(a, b) => truth(a == b),
            Formula::Atom { sym: Sym::Edge, args, .. } => {
                let ix = positions(args, &vars);
                truth(ix[0] != ix[1] && q.parent(ix[1]) == Some(ix[0]))
            }
            Formula::Atom { sym: Sym::Rel(r), args, .. } => {
                let ix = positions(args, &vars);
                match q.literal(*r, &ix) {
                    Some(b) => truth(b),
                    None => return Err(Error::NotCompleteType(format!("no literal for {}", f))),
                }
            }
            Formula::Type(t) => {
                let ix = positions(t.free(), &vars);
                let sub = q.restrict(&ix);
                truth(sub.entails(&t.ty))
            }
            Formula::Conn(c, args) => {
                if !c.is_continuous() {
                    return Err(Error::Discontinuous(c.name().to_string()));
                }
                let mut xs = Vec::with_capacity(args.len());
                for a in args {
                    let sub = self.sub_type(a, q, &vars);
                    xs.push(self.elim(a, &sub)?);
                }
                c.apply(&xs)
            }
            Formula::Agg(a) => self.elim_agg(f, a, q, &vars)?,
        };
        self.memo.insert(key, v.clone());
        Ok(v)
    }

    /// Restriction of `q` (over `vars`) to the variables and relations of `g`.
    fn sub_type(&self, g: &Formula, q: &ClosureType, vars: &[Var]) -> ClosureType {
        let ix = positions(&vars_of(g), vars);
        q.restrict(&ix).restrict_rels(&self.relevant(g))
    }

    fn elim_agg(&mut self, f: &Formula, a: &Aggregate, q: &ClosureType, xs: &[Var]) -> Result<Value> {
        let k = xs.len();
        let all: Vec<Var> = xs.iter().chain(&a.bound).cloned().collect();
        let bound: Vec<usize> = (k..all.len()).collect();
        let rels = self.relevant(f);
        let unsupported = |m: String| Error::UnsupportedAggregation(format!("{}: {}", m, f));
        let mut ranks = Vec::new();
        let mut slots: Vec<Slot> = Vec::new();
        let mut note = None;
        for (body, cond) in a.body.iter().zip(&a.cond) {
            let t = match cond {
                Formula::Type(t) => t,
                _ => return Err(unsupported("conditioning formulas must be closure types".into())),
            };
            if t.free().len() != all.len() || !all.iter().all(|v| t.free().contains(v)) {
                return Err(unsupported("a conditioning type must mention every free and bound variable".into()));
            }
            let chi = t.ty.restrict(&positions(&all, t.free()));
            let rank = chi.rank(&bound);
            ranks.push(rank);
            match self.extensions(q, &chi, k, &rels)? {
                None => {
                    note = Some("a conditioning type has no witness".to_string());
                    slots.clear();
                    break;
                }
                Some((base, new)) => {
                    if rank == 0 {
                        let c = self.body_value(body, &base, &all)?;
                        slots.push(Slot::Determined(vec![c]));
                        continue;
                    }
                    let ps = completions(&base, self.net.sig(), &rels, self.opts.max_extensions)?;
                    let mut entries: Vec<(Value, Value)> = Vec::new();
                    let mut total = Value::zero();
                    for p in ps {
                        let beta = self.theta_product(&p, Some(&new))?;
                        if beta.is_zero() {
                            continue;
                        }
                        let c = self.body_value(body, &p, &all)?;
                        total = total + beta.clone();
                        match entries.iter_mut().find(|(c0, _)| *c0 == c) {
                            Some(e) => e.1 = e.1.clone() + beta,
                            None => entries.push((c, beta)),
                        }
                    }
                    if total.is_zero() {
                        if !rels.iter().all(|&r| self.net.is_local(r)) {
                            return Err(Error::NotPositive(format!("{} has limit proportion 0 under {}", cond, self.render(q, xs))));
                        }
                        note = Some("a conditioning type is empty with probability 1".to_string());
                        slots.clear();
                        break;
                    }
                    let params: Vec<(Value, Value)> =
                        entries.into_iter().map(|(c, b)| (c, b / total.clone())).collect();
                    for (c, alpha) in &params {
                        self.constants.push(ConstantEntry {
                            kind: "balance".into(),
                            p: format!("{} with value {}", self.render(&chi, &all), show(c)),
                            q: self.render(q, xs),
                            value: show(alpha),
                            provenance: self.provenance().into(),
                        });
                    }
                    slots.push(Slot::Limit(params));
                }
            }
        }
        let value = if slots.is_empty() {
            Value::zero()
        } else if slots.iter().all(|s| matches!(s, Slot::Determined(_))) {
            let seqs: Vec<Vec<Value>> =
                slots.iter().map(|s| if let Slot::Determined(v) = s { v.clone() } else { unreachable!() }).collect();
            a.func.apply(&seqs)
        } else if slots.iter().all(|s| matches!(s, Slot::Limit(_))) {
            let max_rank = ranks.iter().copied().max().unwrap_or(0);
            match self.opts.assumption {
                Assumption::Violating => {
                    return Err(unsupported("the tree family violates the tree assumptions".into()))
                }
                Assumption::Light if max_rank > 1 => {
                    return Err(unsupported(format!("rank {} conditioning needs the full tree assumption", max_rank)))
                }
                _ => {}
            }
            let mut params: Vec<Vec<(Value, Value)>> =
                slots.into_iter().map(|s| if let Slot::Limit(p) = s { p } else { unreachable!() }).collect();
            match a.func.class() {
                AggClass::Neither => return Err(unsupported("no ct-limit for this aggregation function".into())),
                AggClass::Admissible => {
                    let exact = rels.iter().all(|&r| self.net.is_local(r));
                    if !exact && max_rank > 1 {
                        return Err(unsupported("admissible function needs a closure-basic network above rank 1".into()));
                    }
                    if params.iter().flatten().any(|(_, al)| al.is_zero()) {
                        if !exact {
                            return Err(unsupported("cannot prove exact emptiness for α = 0".into()));
                        }
                        for s in &mut params {
                            s.retain(|(_, al)| !al.is_zero());
                        }
                    }
                }
                AggClass::Continuous => {}
            }
            let v = a.func.ct_limit(&params).ok_or_else(|| unsupported("no ct-limit".into()))?;
            self.log_case(f, q, xs, &ranks, &params, &v, None);
            return Ok(v);
        } else {
            return Err(unsupported("slots mix rank 0 and higher rank".into()));
        };
        self.log_case(f, q, xs, &ranks, &[], &value, note);
        Ok(value)
    }

    #[allow(clippy::too_many_arguments)]
    fn log_case(
        &mut self,
        f: &Formula,
        q: &ClosureType,
        xs: &[Var],
        ranks: &[usize],
        params: &[Vec<(Value, Value)>],
        v: &Value,
        note: Option<String>,
    ) {
        if let Some(&i) = self.ledger_index.get(&(f as *const Formula as usize)) {
            let case = AggCase {
                outer_type: self.render(q, xs),
                ranks: ranks.to_vec(),
                params: params.iter().map(|s| s.iter().map(|(c, a)| [show(c), show(a)]).collect()).collect(),
                limit: show(v),
                note,
            };
            self.ledger[i].cases.push(case);
        }
    }

    /// Value of a body at the complete type `p` over `all`.
    fn body_value(&mut self, body: &Formula, p: &ClosureType, all: &[Var]) -> Result<Value> {
        let sub = self.sub_type(body, p, all);
        self.elim(body, &sub)
    }

    /// The partial type over x̄ȳ combining χ with q, and the variables outside
    /// cl(x̄). `None` when χ has no witness under q.
    pub(crate) fn extensions(
        &self,
        q: &ClosureType,
        chi: &ClosureType,
        k: usize,
        rels: &[RelId],
    ) -> Result<Option<(ClosureType, Vec<usize>)>> {
        if chi.height() > self.opts.delta {
            return Ok(None);
        }
        let xs: Vec<usize> = (0..k).collect();
        let (chi_x, map) = chi.restrict_map(&xs);
        if chi_x.parents() != q.parents() {
            return Ok(None);
        }
        let mut lits = chi.lits().clone();
        for ((r, args), v) in q.lits() {
            if !rels.contains(r) {
                continue;
            }
            let key = (*r, args.iter().map(|&i| map[i]).collect());
            if lits.insert(key, *v) == Some(!*v) {
                return Ok(None);
            }
        }
        let new: Vec<usize> = (0..chi.len()).filter(|v| !map.contains(v)).collect();
        Ok(Some((chi.with_lits(lits), new)))
    }

    /// Π over the literals of the complete type `p` that touch `touching` (all
    /// literals when `None`) of θ_R or 1 − θ_R, evaluated on p's own witness.
    pub(crate) fn theta_product(&mut self, p: &ClosureType, touching: Option<&[usize]>) -> Result<Value> {
        let (st, _) = witness(p, self.net.sig())?;
        let mut acc = Value::one();
        let lits: Vec<_> = p.lits().iter().map(|(k, v)| (k.clone(), *v)).collect();
        for ((r, args), v) in lits {
            if let Some(t) = touching {
                if !args.iter().any(|a| t.contains(a)) {
                    continue;
                }
            }
            let theta = self.theta_value(r, p, &st, &args)?;
            let factor = if v { theta } else { Value::one() - theta };
            if factor.is_zero() {
                return Ok(Value::zero());
            }
            acc = acc * factor;
        }
        Ok(acc)
    }

    pub(crate) fn theta_value(&mut self, r: RelId, p: &ClosureType, st: &crate::logic::SigmaStructure, args: &[usize]) -> Result<Value> {
        let nr = self.net.relation(r);
        if self.net.is_local(r) {
            return Ok(evaluate_at::<Value>(st, &nr.theta, &nr.vars, args).clamp01());
        }
        self.used_limits = true;
        // one variable per distinct argument, so repeated arguments stay repeated
        let mut distinct: Vec<usize> = Vec::new();
        let pattern: Vec<usize> = args
            .iter()
            .map(|a| match distinct.iter().position(|d| d == a) {
                Some(i) => i,
                None => {
                    distinct.push(*a);
                    distinct.len() - 1
                }
            })
            .collect();
        let theta = match self.renamed.get(&(r, pattern.clone())) {
            Some(t) => t.clone(),
            None => {
                let map: Vec<(Var, Var)> =
                    nr.vars.iter().zip(&pattern).map(|(v, &i)| (v.clone(), format!("v{:03}", i))).collect();
                let t = Rc::new(nr.theta.rename(&map));
                self.renamed.insert((r, pattern), t.clone());
                t
            }
        };
        let fv = vars_of(&theta);
        let ix: Vec<usize> = fv.iter().map(|v| distinct[v[1..].parse::<usize>().unwrap()]).collect();
        let sub = p.restrict(&ix).restrict_rels(&self.relevant(&theta));
        let v = self.elim(&theta, &sub)?;
        Ok(v)
    }
}

enum Slot {
    Determined(Vec<Value>),
    Limit(Vec<(Value, Value)>),
}

fn truth(b: bool) -> Value {
    if b {
        Value::one()
    } else {
        Value::zero()
    }
}


#[cfg(test)]
mod tests;
