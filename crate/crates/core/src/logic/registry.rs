//! Built-in connectives and aggregation functions.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{Scalar, Value};

pub type ConnFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type AggFn = dyn Fn(&[Vec<f64>]) -> f64 + Send + Sync;
pub type LimitFn = dyn Fn(&[Vec<(f64, f64)>]) -> f64 + Send + Sync;

pub struct CustomConnective {
    pub name: String,
    pub arity: usize,
    /// Declared by the caller; spot-checked by [`lipschitz_probe`].
    pub continuous: bool,
    pub f: Box<ConnFn>,
}

#[derive(Clone)]
pub enum Connective {
    Not,
    And,
    Or,
    Implies,
    Product,
    /// `clamp(Σ wᵢxᵢ + b)`.
    AffineClamp { weights: Vec<BigRational>, bias: BigRational },
    Custom(Arc<CustomConnective>),
}

impl PartialEq for Connective {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Connective::AffineClamp { weights: a, bias: b }, Connective::AffineClamp { weights: c, bias: d }) => {
                a == c && b == d
            }
            (Connective::Custom(a), Connective::Custom(b)) => a.name == b.name,
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}

impl fmt::Debug for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl Connective {
    pub fn name(&self) -> &str {
        match self {
            Connective::Not => "not",
            Connective::And => "and",
            Connective::Or => "or",
            Connective::Implies => "implies",
            Connective::Product => "product",
            Connective::AffineClamp { .. } => "affine",
            Connective::Custom(c) => &c.name,
        }
    }

    pub fn by_name(name: &str) -> Option<Connective> {
        Some(match name {
            "not" => Connective::Not,
            "and" => Connective::And,
            "or" => Connective::Or,
            "implies" => Connective::Implies,
            "product" => Connective::Product,
            _ => return None,
        })
    }

    /// `None` means any positive number of arguments.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Connective::Not => Some(1),
            Connective::Implies => Some(2),
            Connective::And | Connective::Or | Connective::Product => None,
            Connective::AffineClamp { weights, .. } => Some(weights.len()),
            Connective::Custom(c) => Some(c.arity),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            Connective::Custom(c) => c.continuous,
            _ => true,
        }
    }

    pub fn apply<T: Scalar>(&self, xs: &[T]) -> T {
        match self {
            Connective::Not => T::one() - xs[0].clone(),
            Connective::And => xs.iter().cloned().reduce(T::min_of).unwrap_or_else(T::one),
            Connective::Or => xs.iter().cloned().reduce(T::max_of).unwrap_or_else(T::zero),
            Connective::Implies => (T::one() - xs[0].clone() + xs[1].clone()).min_of(T::one()),
            Connective::Product => xs.iter().cloned().fold(T::one(), |a, b| a * b),
            Connective::AffineClamp { weights, bias } => weights
                .iter()
                .zip(xs)
                .fold(T::from_ratio(bias), |acc, (w, x)| acc + T::from_ratio(w) * x.clone())
                .clamp01(),
            Connective::Custom(c) => {
                let v: Vec<f64> = xs.iter().map(Scalar::to_f64).collect();
                T::from_f64((c.f)(&v).clamp(0.0, 1.0))
            }
        }
    }
}

/// Continuity class of an aggregation function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggClass {
    Continuous,
    Admissible,
    Neither,
}

pub struct CustomAggregation {
    pub name: String,
    pub slots: usize,
    pub class: AggClass,
    pub f: Box<AggFn>,
    pub limit: Option<Box<LimitFn>>,
}

#[derive(Clone)]
pub enum Aggregation {
    Max,
    Min,
    Am,
    Gm,
    /// `|p̄|^{-β}`.
    LengthPow(BigRational),
    TSum,
    NoisyOr,
    Custom(Arc<CustomAggregation>),
}

impl PartialEq for Aggregation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Aggregation::LengthPow(a), Aggregation::LengthPow(b)) => a == b,
            (Aggregation::Custom(a), Aggregation::Custom(b)) => a.name == b.name,
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}

impl fmt::Debug for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Largest sequence for which `gm` attempts an exact rational root.
const GM_EXACT_MAX: usize = 64;

impl Aggregation {
    pub fn name(&self) -> &str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Min => "min",
            Aggregation::Am => "am",
            Aggregation::Gm => "gm",
            Aggregation::LengthPow(_) => "lengthpow",
            Aggregation::TSum => "tsum",
            Aggregation::NoisyOr => "noisyor",
            Aggregation::Custom(c) => &c.name,
        }
    }

    pub fn by_name(name: &str) -> Option<Aggregation> {
        Some(match name {
            "max" => Aggregation::Max,
            "min" => Aggregation::Min,
            "am" => Aggregation::Am,
            "gm" => Aggregation::Gm,
            "lengthpow" => Aggregation::LengthPow(BigRational::one()),
            "tsum" => Aggregation::TSum,
            "noisyor" => Aggregation::NoisyOr,
            _ => return None,
        })
    }

    pub fn slots(&self) -> usize {
        match self {
            Aggregation::Custom(c) => c.slots,
            _ => 1,
        }
    }

    pub fn class(&self) -> AggClass {
        match self {
            Aggregation::Am | Aggregation::Gm | Aggregation::LengthPow(_) => AggClass::Continuous,
            Aggregation::Max | Aggregation::Min => AggClass::Admissible,
            Aggregation::TSum | Aggregation::NoisyOr => AggClass::Neither,
            Aggregation::Custom(c) => c.class,
        }
    }

    /// Applies the function to non-empty sequences, one per slot.
    pub fn apply<T: Scalar>(&self, slots: &[Vec<T>]) -> T {
        let xs = &slots[0];
        match self {
            Aggregation::Max => xs.iter().cloned().reduce(T::max_of).unwrap_or_else(T::zero),
            Aggregation::Min => xs.iter().cloned().reduce(T::min_of).unwrap_or_else(T::zero),
            Aggregation::Am => sum(xs) / T::from_usize(xs.len()),
            Aggregation::Gm => geometric_mean(xs),
            Aggregation::LengthPow(beta) => T::from_usize(xs.len()).pow_ratio(&-beta.clone()),
            Aggregation::TSum => sum(xs).min_of(T::one()),
            Aggregation::NoisyOr => T::one() - xs.iter().fold(T::one(), |acc, x| acc * (T::one() - x.clone())),
            Aggregation::Custom(c) => {
                let v: Vec<Vec<f64>> = slots.iter().map(|s| s.iter().map(Scalar::to_f64).collect()).collect();
                T::from_f64((c.f)(&v).clamp(0.0, 1.0))
            }
        }
    }

    /// The value every convergence-testing sequence with these parameters tends to.
    /// `params[i]` lists `(cⱼ, αⱼ)` for slot `i`. `None` for evaluation-only functions.
    pub fn ct_limit(&self, params: &[Vec<(Value, Value)>]) -> Option<Value> {
        let ps = &params[0];
        let positive = || ps.iter().filter(|(_, a)| !a.is_zero()).map(|(c, _)| c.clone());
        Some(match self {
            Aggregation::Am => ps.iter().fold(Value::zero(), |acc, (c, a)| acc + c.clone() * a.clone()),
            Aggregation::Gm => {
                if ps.iter().any(|(c, a)| c.is_zero() && !a.is_zero()) {
                    Value::zero()
                } else {
                    ps.iter().filter(|(_, a)| !a.is_zero()).fold(Value::one(), |acc, (c, a)| {
                        acc * match a.exact() {
                            Some(e) => c.pow_ratio(&e),
                            None => Value::Approx(c.to_f64().powf(a.to_f64())),
                        }
                    })
                }
            }
            Aggregation::LengthPow(_) => Value::zero(),
            Aggregation::Max => positive().reduce(Value::max_of)?,
            Aggregation::Min => positive().reduce(Value::min_of)?,
            Aggregation::TSum | Aggregation::NoisyOr => return None,
            Aggregation::Custom(c) => {
                let f = c.limit.as_ref()?;
                let v: Vec<Vec<(f64, f64)>> =
                    params.iter().map(|s| s.iter().map(|(c, a)| (c.to_f64(), a.to_f64())).collect()).collect();
                Value::Approx(f(&v))
            }
        })
    }
}

fn sum<T: Scalar>(xs: &[T]) -> T {
    xs.iter().cloned().fold(T::zero(), |a, b| a + b)
}

fn geometric_mean<T: Scalar>(xs: &[T]) -> T {
    let n = xs.len();
    if xs.iter().any(|x| x.is_zero()) {
        return T::zero();
    }
    if n <= GM_EXACT_MAX && xs.iter().all(|x| x.exact().is_some()) {
        let prod = xs.iter().cloned().fold(T::one(), |a, b| a * b);
        return prod.pow_ratio(&BigRational::new(1.into(), n.into()));
    }
    let mean_log = xs.iter().map(|x| x.to_f64().ln()).sum::<f64>() / n as f64;
    T::from_f64(mean_log.exp())
}

/// All built-in connectives and aggregation functions.
pub fn builtin_registry() -> (Vec<Connective>, Vec<Aggregation>) {
    let conns = vec![
        Connective::Not,
        Connective::And,
        Connective::Or,
        Connective::Implies,
        Connective::Product,
        Connective::AffineClamp { weights: vec![BigRational::one()], bias: BigRational::zero() },
    ];
    let aggs = vec![
        Aggregation::Max,
        Aggregation::Min,
        Aggregation::Am,
        Aggregation::Gm,
        Aggregation::LengthPow(BigRational::one()),
        Aggregation::TSum,
        Aggregation::NoisyOr,
    ];
    (conns, aggs)
}

/// Randomized Lipschitz spot check: the largest ratio `|C(x) − C(x+δ)| / |δ|∞`
/// over `trials` random points with perturbations of size `h`.
pub fn lipschitz_probe(c: &Connective, arity: usize, trials: usize, h: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x: Vec<f64> = (0..arity).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| (v + rng.gen_range(-h..=h)).clamp(0.0, 1.0)).collect();
        let d = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if d > 0.0 {
            let diff = (c.apply::<f64>(&x) - c.apply::<f64>(&y)).abs();
            worst = worst.max(diff / d);
        }
    }
    worst
}
