use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::logic::{check, evaluate_at, Formula, SigmaStructure, Valuation, Var};
use crate::network::{derive_seed, sample_with, Network};
use crate::trees::{generate_tree, Tree, TreeGenConfig};
use crate::types::tuples;

/// Largest number of tuples compared per world before subsampling.
const ALL_TUPLES_MAX: usize = 10_000;
/// Subsample size for wide or large tuple spaces.
const SUBSAMPLE: usize = 256;

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub nodes: usize,
    pub samples: usize,
    /// Fraction of worlds with sup over ā of |φ(ā) − ψ(ā)| ≤ ε.
    pub fraction: f64,
    pub mean_sup: f64,
    pub tuples: usize,
    pub subsampled: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub epsilon: f64,
    pub rows: Vec<EquivalenceRow>,
}

/// Samples worlds on the trees `family.with_n(n)` and measures how often φ and
/// ψ agree within ε on every injective tuple (or a seeded subsample of 256).
pub fn check_asymptotic_equivalence(
    net: &Network,
    phi: &Formula,
    psi: &Formula,
    family: &TreeGenConfig,
    ns: &[usize],
    samples: usize,
    eps: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    let mut vars: Vec<Var> = phi.free_vars().into_iter().collect();
    vars.extend(psi.free_vars());
    vars.sort();
    vars.dedup();
    let mut rows = Vec::new();
    for &n in ns {
        let tree = Arc::new(generate_tree(&family.with_n(n))?);
        let probe = SigmaStructure::empty(tree.clone(), net.sig().clone())?;
        let zero = Valuation::from_pairs(vars.iter().map(|v| (v.as_str(), 0)));
        check(&probe, phi, &zero)?;
        check(&probe, psi, &zero)?;
        let (list, subsampled) = tuple_schedule(&tree, vars.len(), derive_seed(seed, &[n as u64, u64::MAX]));
        let sups: Vec<f64> = (0..samples)
            .into_par_iter()
            .map_init(
                || probe.clone(),
                |st, i| -> Result<f64> {
                    sample_with(st, net, derive_seed(seed, &[n as u64, i as u64]))?;
                    let mut sup: f64 = 0.0;
                    for a in &list {
                        let x = evaluate_at::<f64>(st, phi, &vars, a);
                        let y = evaluate_at::<f64>(st, psi, &vars, a);
                        sup = sup.max((x - y).abs());
                    }
                    Ok(sup)
                },
            )
            .collect::<Result<_>>()?;
        let ok = sups.iter().filter(|&&s| s <= eps).count();
        rows.push(EquivalenceRow {
            n,
            nodes: tree.len(),
            samples,
            fraction: ok as f64 / samples as f64,
            mean_sup: sups.iter().sum::<f64>() / samples as f64,
            tuples: list.len(),
            subsampled,
        });
    }
    Ok(EquivalenceReport { epsilon: eps, rows })
}

/// Injective tuples to compare: all of them when |x̄| ≤ 1 and the tree has at
/// most 10⁴ nodes, otherwise a seeded uniform subsample.
pub fn tuple_schedule(tree: &Tree, k: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    let n = tree.len();
    let injective = |t: &Vec<usize>| (1..t.len()).all(|i| !t[..i].contains(&t[i]));
    if k == 0 || (k == 1 && n <= ALL_TUPLES_MAX) {
        return (tuples(n, k).collect(), false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (n as u128).pow(k as u32);
    let mut out = Vec::new();
    if total <= 4 * SUBSAMPLE as u128 {
        let all: Vec<Vec<usize>> = tuples(n, k).filter(injective).collect();
        if all.len() <= SUBSAMPLE {
            return (all, false);
        }
        for i in sample_indices(&mut rng, all.len(), SUBSAMPLE) {
            out.push(all[i].clone());
        }
        return (out, true);
    }
    use rand::Rng;
    while out.len() < SUBSAMPLE {
        let t: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        if injective(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    (out, true)
}
