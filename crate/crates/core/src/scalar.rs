//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Geometry never touches this type; only masses, densities and operator
/// values do.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pairwise (fixed binary tree) summation.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical for identical inputs regardless of how they were produced.
pub fn pairwise_sum<S: Scalar>(xs: &[S]) -> S {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(S::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleWord<S> {
    pub hi: S,
    pub lo: S,
}

impl<S: Scalar> DoubleWord<S> {
    pub fn zero() -> Self {
        Self {
            hi: S::zero(),
            lo: S::zero(),
        }
    }

    pub fn from_scalar(x: S) -> Self {
        Self {
            hi: x,
            lo: S::zero(),
        }
    }

    pub fn value(self) -> S {
        self.hi + self.lo
    }

    /// Error-free transformation based addition (Knuth two-sum on the high
    /// parts, low parts folded in afterwards).
    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + (self.lo + other.lo);
        let (hi, lo) = fast_two_sum(s, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    /// Multiplication by a power of two; exact barring under/overflow.
    pub fn scale_pow2(self, factor: S) -> Self {
        Self {
            hi: self.hi * factor,
            lo: self.lo * factor,
        }
    }
}

fn two_sum<S: Scalar>(a: S, b: S) -> (S, S) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn fast_two_sum<S: Scalar>(a: S, b: S) -> (S, S) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Relative difference `|a-b| / max(|a|,|b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
