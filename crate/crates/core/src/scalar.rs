//! Truth-value scalars.
//!
//! Every evaluator is generic over [`Scalar`]. `f64` and `f32` are plain floats;
//! [`Value`] keeps exact rationals for as long as the arithmetic allows and drops
//! to `f64` only when a result is irrational (roots, non-integer powers).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_ratio(q: &BigRational) -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// `self^e` for `self >= 0`.
    fn pow_ratio(&self, e: &BigRational) -> Self;
    /// Exact rational value, when known.
    fn exact(&self) -> Option<BigRational>;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(n)))
    }

    fn clamp01(self) -> Self {
        if self < Self::zero() {
            Self::zero()
        } else if self > Self::one() {
            Self::one()
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(q: &BigRational) -> Self {
        ratio_to_f64(q)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pow_ratio(&self, e: &BigRational) -> Self {
        self.powf(ratio_to_f64(e))
    }
    fn exact(&self) -> Option<BigRational> {
        None
    }
}

impl Scalar for f32 {
    fn from_ratio(q: &BigRational) -> Self {
        ratio_to_f64(q) as f32
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn pow_ratio(&self, e: &BigRational) -> Self {
        self.powf(ratio_to_f64(e) as f32)
    }
    fn exact(&self) -> Option<BigRational> {
        None
    }
}

pub fn ratio_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    // Huge numerator or denominator: scale both down to a representable window.
    let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000) as usize;
    let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `3`, `1/3`, `0.25`, `-2.5e-3` into an exact rational.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{}{}", int, frac).parse().ok()?;
    let mut q = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    let ten = BigRational::from_integer(BigInt::from(10));
    for _ in 0..exp.unsigned_abs() {
        q = if exp > 0 { q * &ten } else { q / &ten };
    }
    Some(if neg { -q } else { q })
}

/// Exact `q^e` when the result is rational, `None` otherwise.
pub fn exact_pow(q: &BigRational, e: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return match e.cmp(&BigRational::zero()) {
            Ordering::Greater => Some(BigRational::zero()),
            Ordering::Equal => Some(BigRational::one()),
            Ordering::Less => None,
        };
    }
    let num = e.numer().abs().to_u32()?;
    let den = e.denom().to_u32()?;
    let base = if e.is_negative() { q.recip() } else { q.clone() };
    let n = nth_root_exact(base.numer(), den)?;
    let d = nth_root_exact(base.denom(), den)?;
    let root = BigRational::new(n, d);
    Some(num_traits::pow(root, num as usize))
}

fn nth_root_exact(x: &BigInt, n: u32) -> Option<BigInt> {
    if n == 1 {
        return Some(x.clone());
    }
    let r = x.nth_root(n);
    if num_traits::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

/// Exact-first truth value: rational while possible, `f64` afterwards.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }
}

impl From<BigRational> for Value {
    fn from(q: BigRational) -> Self {
        Value::Exact(q)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{}", q),
            Value::Approx(x) => write!(f, "{}", x),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! value_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Value {
            type Output = Value;
            fn $m(self, rhs: Value) -> Value {
                match (self, rhs) {
                    (Value::Exact(a), Value::Exact(b)) => Value::Exact(a $op b),
                    (a, b) => Value::Approx(a.to_f64() $op b.to_f64()),
                }
            }
        }
    };
}
value_op!(Add, add, +);
value_op!(Sub, sub, -);
value_op!(Mul, mul, *);

impl Div for Value {
    type Output = Value;
    fn div(self, rhs: Value) -> Value {
        match (self, rhs) {
            (Value::Exact(a), Value::Exact(b)) if !b.is_zero() => Value::Exact(a / b),
            (a, b) => Value::Approx(a.to_f64() / b.to_f64()),
        }
    }
}

impl Zero for Value {
    fn zero() -> Self {
        Value::Exact(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        match self {
            Value::Exact(q) => q.is_zero(),
            Value::Approx(x) => *x == 0.0,
        }
    }
}

impl One for Value {
    fn one() -> Self {
        Value::Exact(BigRational::one())
    }
}

impl Scalar for Value {
    fn from_ratio(q: &BigRational) -> Self {
        Value::Exact(q.clone())
    }
    fn from_f64(x: f64) -> Self {
        Value::Approx(x)
    }
    fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => ratio_to_f64(q),
            Value::Approx(x) => *x,
        }
    }
    fn pow_ratio(&self, e: &BigRational) -> Self {
        match self {
            Value::Exact(q) => match exact_pow(q, e) {
                Some(r) => Value::Exact(r),
                None => Value::Approx(ratio_to_f64(q).powf(ratio_to_f64(e))),
            },
            Value::Approx(x) => Value::Approx(x.powf(ratio_to_f64(e))),
        }
    }
    fn exact(&self) -> Option<BigRational> {
        match self {
            Value::Exact(q) => Some(q.clone()),
            Value::Approx(_) => None,
        }
    }
}
