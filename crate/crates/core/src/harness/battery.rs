//! Convergence-testing probes over the built-in aggregation functions.

use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::logic::{ct_probe, Aggregation, CtParams};
use crate::scalar::ratio;

const LENGTHS: [usize; 3] = [100, 1000, 10_000];
const TRIALS: usize = 10;
const TOLERANCE: f64 = 0.02;
const RANDOM_PROBES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct BatteryRow {
    pub aggregation: String,
    pub probe: String,
    pub params: CtParams,
    /// Whether the discrepancy is expected to stay within the tolerance.
    pub expect_stable: bool,
    pub discrepancy: f64,
    pub ok: bool,
}

/// Random parameters with `k` components, every α positive and every c at least `c_min`.
fn random_params(rng: &mut ChaCha8Rng, k: usize, c_min: f64) -> CtParams {
    let mut w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let last = 1.0 - w[..k - 1].iter().sum::<f64>();
    w[k - 1] = last;
    vec![w.into_iter().map(|a| (rng.gen_range(c_min..=1.0), a)).collect()]
}

/// Runs the battery; the check passes when every row is `ok`.
pub fn check_battery(seed: u64) -> Result<Vec<BatteryRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<(Aggregation, String, CtParams, bool)> = vec![
        (Aggregation::Max, "continuity witness".into(), vec![vec![(0.0, 1.0), (1.0, 0.0)]], false),
        (Aggregation::Min, "continuity witness".into(), vec![vec![(1.0, 1.0), (0.0, 0.0)]], false),
        (Aggregation::NoisyOr, "positive-alpha witness".into(), vec![vec![(0.0, 1.0)]], false),
    ];
    let stable = [
        (Aggregation::Max, 0.0),
        (Aggregation::Min, 0.0),
        (Aggregation::Am, 0.0),
        // gm jumps to 0 when an entry is 0, so its probes keep c away from 0
        (Aggregation::Gm, 0.05),
        (Aggregation::LengthPow(BigRational::one()), 0.0),
        (Aggregation::LengthPow(ratio(1, 2)), 0.0),
    ];
    for (agg, c_min) in stable {
        for i in 0..RANDOM_PROBES {
            let k = 1 + i % 3;
            let label = if matches!(agg, Aggregation::Max | Aggregation::Min) { "admissibility" } else { "continuity" };
            probes.push((agg.clone(), format!("{} random {}", label, i), random_params(&mut rng, k, c_min), true));
        }
    }
    probes
        .into_iter()
        .enumerate()
        .map(|(i, (agg, probe, params, expect_stable))| {
            let d = ct_probe(&agg, &params, TRIALS, &LENGTHS, seed.wrapping_add(i as u64))?;
            Ok(BatteryRow {
                aggregation: agg.name().to_string(),
                probe,
                params,
                expect_stable,
                discrepancy: d,
                ok: (d <= TOLERANCE) == expect_stable,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let rows = check_battery(1).unwrap();
        for r in &rows {
            assert!(r.ok, "{:?}", r);
        }
        assert!(rows.iter().any(|r| r.aggregation == "max" && !r.expect_stable));
    }
}
