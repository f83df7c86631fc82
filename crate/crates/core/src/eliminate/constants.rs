use num_traits::{One, Zero};

use super::{Compiler, EliminationOptions};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::scalar::Value;
use crate::types::{completions, decompose, witness, ClosureType};

/// Where a constant comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Exact product of local θ values: the sequence is eventually constant.
    Exact,
    /// Product of limits of eliminated, non-local θ.
    LimitProduct,
}

/// A convergence or balance constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    pub value: Value,
    pub provenance: Provenance,
    /// The pair is unsatisfiable; the value 0 holds trivially.
    pub vacuous: bool,
}

fn provenance(net: &Network, rels: &[usize]) -> Provenance {
    if rels.iter().all(|&r| net.is_local(r)) {
        Provenance::Exact
    } else {
        Provenance::LimitProduct
    }
}

/// The limit of `P(E^{p(ā)} | E^{base(ā)})`: p and base are types in the same
/// variables; literals of p not fixed by base contribute θ_R or 1 − θ_R. An
/// incomplete p is summed over its completions.
pub fn convergence_constant(net: &Network, p: &ClosureType, base: &ClosureType, opts: &EliminationOptions) -> Result<Constant> {
    let rels = net.ancestors(p.rels_used().into_iter().chain(base.rels_used()));
    let prov = provenance(net, &rels);
    if !p.consistent_with(base) {
        return Ok(Constant { value: Value::zero(), provenance: prov, vacuous: true });
    }
    let mut lits = p.lits().clone();
    lits.extend(base.lits().iter().map(|(k, v)| (k.clone(), *v)));
    let merged = p.with_lits(lits);
    let mut c = Compiler::new(net, opts);
    let mut total = Value::zero();
    for full in completions(&merged, net.sig(), &rels, opts.max_extensions)? {
        let (st, _) = witness(&full, net.sig())?;
        let mut acc = Value::one();
        for ((r, args), v) in full.lits() {
            if base.lits().contains_key(&(*r, args.clone())) {
                continue;
            }
            let theta = c.theta_value(*r, &full, &st, args)?;
            acc = acc * if *v { theta } else { Value::one() - theta };
            if acc.is_zero() {
                break;
            }
        }
        total = total + acc;
    }
    Ok(Constant { value: total, provenance: prov, vacuous: false })
}

/// The limit proportion of ȳ with `p(ā, ȳ)` among ȳ with `χ(ā, ȳ)`, for ā of
/// complete type `q`. `p` and `chi` are types over x̄ȳ with ȳ the last `bound`
/// variables; q is complete over x̄.
pub fn balance_constant(
    net: &Network,
    p: &ClosureType,
    chi: &ClosureType,
    q: &ClosureType,
    bound: usize,
    opts: &EliminationOptions,
) -> Result<Constant> {
    let k = q.outer();
    if p.outer() != k + bound || chi.outer() != k + bound {
        return Err(Error::InvalidType("p and chi must have the variables of q followed by the bound ones".into()));
    }
    let rels = net.ancestors(p.rels_used().into_iter().chain(chi.rels_used()).chain(q.rels_used()));
    let prov = provenance(net, &rels);
    let mut c = Compiler::new(net, opts);
    let (base, new) = match c.extensions(q, chi, k, &rels)? {
        Some(x) => x,
        None => return Err(Error::NotPositive("chi has no witness under q".into())),
    };
    if bound > 0 && new.is_empty() {
        // rank 0: the witness is unique, so the proportion is 0 or 1
        let hit = base.consistent_with(p) && p.parents() == base.parents();
        return Ok(Constant { value: if hit { Value::one() } else { Value::zero() }, provenance: prov, vacuous: false });
    }
    let mut num = Value::zero();
    let mut den = Value::zero();
    for full in completions(&base, net.sig(), &rels, opts.max_extensions)? {
        let beta = c.theta_product(&full, Some(&new))?;
        if full.parents() == p.parents() && full.entails(&p.with_lits(p.lits().clone())) {
            num = num + beta.clone();
        }
        den = den + beta;
    }
    if den.is_zero() {
        return Err(Error::NotPositive("chi has limit proportion 0 under q".into()));
    }
    Ok(Constant { value: num / den, provenance: prov, vacuous: false })
}

/// The conditional probability of the literals of the complete type `p` that
/// involve cl(x̄ȳ)∖cl(x̄), computed as a chain of rank-1 steps: step j covers
/// the literals whose variables lie in cl(x̄) ∪ {u₁, …, u_j} and include u_j.
pub fn balance_chain(net: &Network, p: &ClosureType, bound: &[usize], opts: &EliminationOptions) -> Result<(Value, Vec<Value>)> {
    let chain = decompose(p, bound)?;
    let mut c = Compiler::new(net, opts);
    let (st, _) = witness(p, net.sig())?;
    let mut steps = Vec::new();
    let mut total = Value::one();
    for (j, &u) in chain.iter().enumerate() {
        let later = &chain[j + 1..];
        let mut acc = Value::one();
        for ((r, args), v) in p.lits() {
            if !args.contains(&u) || args.iter().any(|a| later.contains(a)) {
                continue;
            }
            let theta = c.theta_value(*r, p, &st, args)?;
            acc = acc * if *v { theta } else { Value::one() - theta };
        }
        total = total * acc.clone();
        steps.push(acc);
    }
    Ok((total, steps))
}
