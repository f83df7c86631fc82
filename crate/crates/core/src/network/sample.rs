use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Network;
use crate::error::Result;
use crate::logic::{check, evaluate_at, Formula, SigmaStructure, Valuation};
use crate::scalar::{ratio_to_f64, Scalar};
use crate::trees::Tree;

/// Seed for item `parts` of a run with base seed `base`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    // splitmix64 finalizer folded over the parts
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base.wrapping_add(0x9e3779b97f4a7c15)), |h, &p| mix(h ^ p.wrapping_add(0x9e3779b97f4a7c15)))
}

/// One world drawn from P_n.
///
/// Relation `R` reads ChaCha8 stream `R` of the seed, one 64-bit word per tuple in
/// lexicographic order, so the draw for (R, ā) depends only on (seed, R, ā).
pub fn sample(tree: &Arc<Tree>, net: &Network, seed: u64) -> Result<SigmaStructure> {
    let mut st = SigmaStructure::empty(tree.clone(), net.sig().clone())?;
    sample_with(&mut st, net, seed)?;
    Ok(st)
}

/// Resamples every relation of `st` in place.
pub fn sample_with(st: &mut SigmaStructure, net: &Network, seed: u64) -> Result<()> {
    let n = st.tree_arc().len();
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for &r in net.order() {
        let nr = net.relation(r);
        let val = Valuation::from_pairs(nr.vars.iter().map(|v| (v.as_str(), 0)));
        check(st, &nr.theta, &val)?;
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(r as u64);
        let constant = match &nr.theta {
            Formula::Const(q) => Some(ratio_to_f64(q)),
            _ => None,
        };
        let arity = net.sig().arity(r);
        let total = st.table(r).tuples();
        for idx in 0..total {
            let u = rng.next_u64();
            let p = match constant {
                Some(p) => p,
                None => {
                    let args = st.table(r).tuple(idx);
                    evaluate_at::<f64>(st, &nr.theta, &nr.vars, &args).clamp01()
                }
            };
            st.table_mut(r).set_index(idx, draw(u, p));
        }
        debug_assert_eq!(total, n.pow(arity as u32));
    }
    Ok(())
}

fn draw(u: u64, p: f64) -> bool {
    if p >= 1.0 {
        return true;
    }
    ((u >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(xs: &[f64]) -> Estimate {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        Estimate { mean, se: (var / k).sqrt(), samples: xs.len() }
    }
}

/// Estimates `E[A(φ(ā))]` (an event probability when φ is 0/1-valued) from
/// `samples` worlds; sample `i` uses seed `derive_seed(seed, [i])`.
pub fn estimate(tree: &Arc<Tree>, net: &Network, phi: &Formula, val: &Valuation, samples: usize, seed: u64) -> Result<Estimate> {
    let probe = SigmaStructure::empty(tree.clone(), net.sig().clone())?;
    check(&probe, phi, val)?;
    let vars: Vec<String> = val.0.keys().cloned().collect();
    let nodes: Vec<usize> = val.0.values().copied().collect();
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map_init(
            || probe.clone(),
            |st, i| -> Result<f64> {
                sample_with(st, net, derive_seed(seed, &[i as u64]))?;
                Ok(evaluate_at::<f64>(st, phi, &vars, &nodes))
            },
        )
        .collect::<Result<_>>()?;
    Ok(Estimate::from_values(&xs))
}
