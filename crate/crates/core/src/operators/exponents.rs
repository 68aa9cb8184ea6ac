use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the relation `1/q = 1/p - alpha/N`.
pub const HLS_TOLERANCE: f64 = 1e-12;

/// Conjugate exponent `p' = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Exponents of a fractional integral: `0 < alpha < N`, `1 < p < q < inf`
/// with `1/q = 1/p - alpha/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlsExponents {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub total_dim: usize,
}

impl HlsExponents {
    /// Derive `q` from `alpha`, `p` and `N`.
    pub fn from_alpha_p(alpha: f64, p: f64, total_dim: usize) -> Result<Self> {
        let n = total_dim as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::Exponent(format!(
                "0 < alpha < N fails: alpha = {alpha}, N = {n}"
            )));
        }
        let inv_q = 1.0 / p - alpha / n;
        if !(p > 1.0) || !(inv_q > 0.0) {
            return Err(Error::Exponent(format!(
                "1/q = 1/p - alpha/N must lie in (0,1): p = {p}, alpha = {alpha}, N = {n}"
            )));
        }
        Self::new(alpha, p, 1.0 / inv_q, total_dim)
    }

    pub fn new(alpha: f64, p: f64, q: f64, total_dim: usize) -> Result<Self> {
        let n = total_dim as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::Exponent(format!(
                "0 < alpha < N fails: alpha = {alpha}, N = {n}"
            )));
        }
        if !(1.0 < p && p < q && q.is_finite()) {
            return Err(Error::Exponent(format!(
                "1 < p < q < inf fails: p = {p}, q = {q}"
            )));
        }
        let gap = (1.0 / q - (1.0 / p - alpha / n)).abs();
        if gap > HLS_TOLERANCE {
            return Err(Error::Exponent(format!(
                "1/q = 1/p - alpha/N fails by {gap:e}: p = {p}, q = {q}, alpha = {alpha}, N = {n}"
            )));
        }
        Ok(Self {
            alpha,
            p,
            q,
            total_dim,
        })
    }

    /// Kernel exponent `alpha/N - 1`.
    pub fn kernel_power(&self) -> f64 {
        self.alpha / self.total_dim as f64 - 1.0
    }

    /// Exponents of the equivalent bilinear embedding: `(p, q')`.
    pub fn bilinear(&self) -> MultilinearExponents {
        MultilinearExponents {
            p: vec![self.p, conjugate(self.q)],
        }
    }
}

/// Exponents `p_1..p_M` of an `M`-linear embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearExponents {
    pub p: Vec<f64>,
}

impl MultilinearExponents {
    /// Requires every `p_k` in `(1, inf)` and `sum 1/p_k >= 1`.
    ///
    /// The sum may equal 1 (within `1e-12`): all constants are still
    /// defined there, only their equivalence is lost.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Exponent("at least one exponent required".into()));
        }
        if let Some(x) = p.iter().find(|&&x| !(x > 1.0 && x.is_finite())) {
            return Err(Error::Exponent(format!("1 < p_k < inf fails: p_k = {x}")));
        }
        let s: f64 = p.iter().map(|x| 1.0 / x).sum();
        if s < 1.0 - 1e-12 {
            return Err(Error::Exponent(format!("sum 1/p_k >= 1 fails: sum = {s}")));
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `1/p_k'` for each `k`.
    pub fn dual_reciprocals(&self) -> Vec<f64> {
        self.p.iter().map(|p| 1.0 - 1.0 / p).collect()
    }

    pub fn reciprocal_sum(&self) -> f64 {
        self.p.iter().map(|x| 1.0 / x).sum()
    }
}

/// Exponents of the Carleson embedding: `1 < p < q < inf`.
pub fn check_carleson(p: f64, q: f64) -> Result<()> {
    if !(1.0 < p && p < q && q.is_finite()) {
        return Err(Error::Exponent(format!(
            "1 < p < q < inf fails: p = {p}, q = {q}"
        )));
    }
    Ok(())
}
