//! Randomized convergence-testing probes for aggregation functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::registry::Aggregation;
use crate::error::{Error, Result};

/// Per slot, the pairs `(cⱼ, αⱼ)`.
pub type CtParams = Vec<Vec<(f64, f64)>>;

fn validate(params: &CtParams, slots: usize) -> Result<()> {
    let bad = |m: &str| Err(Error::BadParameters(m.to_string()));
    if params.len() != slots {
        return bad("one parameter list per slot");
    }
    for slot in params {
        if slot.is_empty() {
            return bad("empty parameter list");
        }
        if slot.iter().any(|&(c, a)| !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&a)) {
            return bad("c and α must lie in [0, 1]");
        }
        let total: f64 = slot.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad("α must sum to 1");
        }
    }
    Ok(())
}

/// Largest-remainder apportionment of `len` entries by α.
fn apportion(slot: &[(f64, f64)], len: usize) -> Vec<usize> {
    let raw: Vec<f64> = slot.iter().map(|p| p.1 * len as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest = len - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..slot.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    for &j in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        if slot[j].1 > 0.0 {
            counts[j] += 1;
            rest -= 1;
        }
    }
    counts
}

/// Moves `k` entries into component `j` from the largest component.
fn shift(counts: &mut [usize], j: usize, k: usize) {
    let big = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
    let k = k.min(counts[big].saturating_sub(1));
    if big != j {
        counts[big] -= k;
        counts[j] += k;
    }
}

struct Gen<'a> {
    slot: &'a [(f64, f64)],
    len: usize,
}

impl Gen<'_> {
    fn exact(&self, extras: bool) -> Vec<f64> {
        let mut counts = apportion(self.slot, self.len);
        if extras {
            for j in 0..counts.len() {
                if self.slot[j].1 == 0.0 {
                    shift(&mut counts, j, 1);
                }
            }
        }
        self.fill(&counts, None)
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut counts = apportion(self.slot, self.len);
        let slack = (self.len as f64).cbrt().floor() as usize;
        for j in 0..counts.len() {
            if self.slot[j].1 == 0.0 {
                shift(&mut counts, j, rng.gen_range(0..=slack));
            } else {
                let k = rng.gen_range(0..=slack);
                if rng.gen::<bool>() {
                    shift(&mut counts, j, k);
                } else {
                    let take = k.min(counts[j].saturating_sub(1));
                    counts[j] -= take;
                    let other = (0..counts.len()).find(|&i| i != j && self.slot[i].1 > 0.0).unwrap_or(j);
                    counts[other] += take;
                }
            }
        }
        self.fill(&counts, Some(rng))
    }

    fn fill(&self, counts: &[usize], mut rng: Option<&mut ChaCha8Rng>) -> Vec<f64> {
        let w = 1.0 / self.len as f64;
        let mut out = Vec::with_capacity(self.len);
        for (j, &k) in counts.iter().enumerate() {
            let c = self.slot[j].0;
            for _ in 0..k {
                let x = match rng.as_deref_mut() {
                    Some(r) => c + r.gen_range(-w..=w),
                    None => c,
                };
                out.push(x.clamp(0.0, 1.0));
            }
        }
        out
    }
}

/// Largest `|F(p̄) − F(q̄)|` over `trials` pairs of convergence-testing sequences
/// with the given parameters, at each of the `lengths`.
///
/// Trial 0 compares exact sequences that differ only by single entries at
/// components with αⱼ = 0; odd trials compare an exact sequence with a jittered
/// one; even trials compare two jittered ones.
pub fn ct_probe_curve(f: &Aggregation, params: &CtParams, trials: usize, lengths: &[usize], seed: u64) -> Result<Vec<(usize, f64)>> {
    validate(params, f.slots())?;
    if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) || lengths[0] == 0 {
        return Err(Error::BadParameters("lengths must be positive and strictly increasing".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &len in lengths {
        let gens: Vec<Gen> = params.iter().map(|s| Gen { slot: s, len }).collect();
        let mut worst: f64 = 0.0;
        for t in 0..trials.max(1) {
            let (p, q): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match t {
                0 => (gens.iter().map(|g| g.exact(false)).collect(), gens.iter().map(|g| g.exact(true)).collect()),
                t if t % 2 == 1 => (
                    gens.iter().map(|g| g.exact(false)).collect(),
                    gens.iter().map(|g| g.random(&mut rng)).collect(),
                ),
                _ => (
                    gens.iter().map(|g| g.random(&mut rng)).collect(),
                    gens.iter().map(|g| g.random(&mut rng)).collect(),
                ),
            };
            let d = (f.apply::<f64>(&p) - f.apply::<f64>(&q)).abs();
            worst = worst.max(d);
        }
        out.push((len, worst));
    }
    Ok(out)
}

/// The discrepancy at the largest length of [`ct_probe_curve`].
pub fn ct_probe(f: &Aggregation, params: &CtParams, trials: usize, lengths: &[usize], seed: u64) -> Result<f64> {
    Ok(ct_probe_curve(f, params, trials, lengths, seed)?.last().unwrap().1)
}

/// F applied to one jittered convergence-testing sequence of length `len`.
pub fn ct_sample(f: &Aggregation, params: &CtParams, len: usize, seed: u64) -> Result<f64> {
    validate(params, f.slots())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs: Vec<Vec<f64>> = params.iter().map(|s| Gen { slot: s, len }.random(&mut rng)).collect();
    Ok(f.apply::<f64>(&seqs))
}
