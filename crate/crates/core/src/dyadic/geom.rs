//! Exact coordinates of the form `num / (3 * 2^scale)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};

use super::config::GridConfig;

/// Compare `a / (3 * 2^sa)` with `b / (3 * 2^sb)`.
pub(crate) fn cmp_scaled(a: i64, sa: i32, b: i64, sb: i32) -> Ordering {
    let e = sa.max(sb);
    let lhs = (a as i128) << (e - sa);
    let rhs = (b as i128) << (e - sb);
    lhs.cmp(&rhs)
}

/// `num` rewritten at a different scale; `None` when not an exact integer there.
pub(crate) fn rescale(num: i64, from: i32, to: i32) -> Option<i64> {
    if to >= from {
        let shift = (to - from) as u32;
        num.checked_mul(1i64.checked_shl(shift)?)
    } else {
        let div = 1i64 << (from - to);
        (num % div == 0).then_some(num / div)
    }
}

/// `floor(x * 2^k)` for `x = num / (3 * 2^s)`.
pub(crate) fn floor_index(num: i64, s: i32, k: i32) -> i64 {
    let d = k - s;
    if d >= 0 {
        (((num as i128) << d).div_euclid(3)) as i64
    } else {
        (num as i128).div_euclid(3i128 << (-d)) as i64
    }
}

/// Exact point of `R^d`; coordinate `a` is `coords[a] / (3 * 2^scale)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    coords: Vec<i64>,
    scale: i32,
}

impl Point {
    pub fn new(coords: Vec<i64>, scale: i32) -> Self {
        Self { coords, scale }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn coord_f64(&self, axis: usize) -> f64 {
        self.coords[axis] as f64 / (3.0 * 2f64.powi(self.scale))
    }

    /// Sub-point on a range of axes.
    pub fn slice(&self, axes: std::ops::Range<usize>) -> Point {
        Point::new(self.coords[axes].to_vec(), self.scale)
    }

    /// Nearest exact point at `scale` to the real coordinates `xs`.
    pub fn from_reals(xs: &[f64], scale: i32) -> Point {
        let unit = 3.0 * 2f64.powi(scale);
        Point::new(
            xs.iter().map(|x| (x * unit).round() as i64).collect(),
            scale,
        )
    }

    /// Whether every coordinate lies in `[0,1)`.
    pub fn in_unit_cube(&self) -> bool {
        let top = 3i64 << self.scale.max(0);
        self.scale >= 0 && self.coords.iter().all(|&c| (0..top).contains(&c))
    }

    /// Squared Euclidean distance, as a numerator over `(3 * 2^scale)^2`
    /// at the common scale of both points.
    pub fn dist2_scaled(&self, other: &Point) -> (i128, i32) {
        let e = self.scale.max(other.scale);
        let d2 = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| {
                let a = (a as i128) << (e - self.scale);
                let b = (b as i128) << (e - other.scale);
                (a - b) * (a - b)
            })
            .sum();
        (d2, e)
    }
}

/// Axis parallel box with exact corners at a common scale.
///
/// Half-open `[lo, hi)` per axis unless `closed` is set. The two agree for
/// every absolutely continuous measure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeoBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    scale: i32,
    closed: bool,
}

impl GeoBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, scale: i32) -> Self {
        assert_eq!(lo.len(), hi.len(), "corner dimension mismatch");
        Self {
            lo,
            hi,
            scale,
            closed: false,
        }
    }

    pub fn closed(lo: Vec<i64>, hi: Vec<i64>, scale: i32) -> Self {
        Self {
            closed: true,
            ..Self::new(lo, hi, scale)
        }
    }

    /// Box from real corners; each must be an exact multiple of the unit at `scale`.
    pub fn from_reals(lo: &[f64], hi: &[f64], scale: i32) -> Result<Self> {
        let unit = 3.0 * 2f64.powi(scale);
        let conv = |x: f64| {
            let v = x * unit;
            if v.fract() != 0.0 || !v.is_finite() {
                Err(Error::Alignment(format!(
                    "coordinate {x} is not a multiple of 1/{unit}"
                )))
            } else {
                Ok(v as i64)
            }
        };
        let lo = lo.iter().map(|&x| conv(x)).collect::<Result<Vec<_>>>()?;
        let hi = hi.iter().map(|&x| conv(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(lo, hi, scale))
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn lo_f64(&self, axis: usize) -> f64 {
        self.lo[axis] as f64 / (3.0 * 2f64.powi(self.scale))
    }

    pub fn hi_f64(&self, axis: usize) -> f64 {
        self.hi[axis] as f64 / (3.0 * 2f64.powi(self.scale))
    }

    /// The same box rewritten at `scale`.
    pub fn at_scale(&self, scale: i32) -> Result<GeoBox> {
        let conv = |v: &[i64]| {
            v.iter()
                .map(|&x| {
                    rescale(x, self.scale, scale).ok_or_else(|| {
                        Error::Alignment(format!(
                            "corner {x}/(3*2^{}) not representable at scale {scale}",
                            self.scale
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(GeoBox {
            lo: conv(&self.lo)?,
            hi: conv(&self.hi)?,
            scale,
            closed: self.closed,
        })
    }

    /// Corners in the global unit of `config`.
    pub fn in_units(&self, config: &GridConfig) -> Result<GeoBox> {
        if self.dim() != config.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: config.total_dim(),
                got: self.dim(),
            });
        }
        self.at_scale(config.unit_scale())
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|a| {
            let lo = cmp_scaled(self.lo[a], self.scale, p.coords()[a], p.scale());
            let hi = cmp_scaled(p.coords()[a], p.scale(), self.hi[a], self.scale);
            lo != Ordering::Greater
                && (hi == Ordering::Less || (self.closed && hi == Ordering::Equal))
        })
    }

    /// Whether `self` is a subset of `other`.
    pub fn is_subset_of(&self, other: &GeoBox) -> bool {
        (0..self.dim()).all(|a| {
            cmp_scaled(other.lo[a], other.scale, self.lo[a], self.scale) != Ordering::Greater
                && cmp_scaled(self.hi[a], self.scale, other.hi[a], other.scale) != Ordering::Greater
        })
    }

    /// Volume as a float.
    pub fn volume(&self) -> f64 {
        (0..self.dim())
            .map(|a| (self.hi_f64(a) - self.lo_f64(a)).max(0.0))
            .product()
    }

    /// Concatenate boxes over disjoint axis groups.
    pub fn product(parts: &[GeoBox]) -> GeoBox {
        let scale = parts.iter().map(|b| b.scale).max().unwrap_or(0);
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for b in parts {
            let b = b.at_scale(scale).expect("upscaling is exact");
            lo.extend(b.lo);
            hi.extend(b.hi);
        }
        GeoBox {
            lo,
            hi,
            scale,
            closed: parts.iter().all(|b| b.closed),
        }
    }
}
