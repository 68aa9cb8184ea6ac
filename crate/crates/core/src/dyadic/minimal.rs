//! Minimal cubes `Q(u,v)`, minimal rectangles `R(x,y)` and `R_0(x,y)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};

use super::config::GridConfig;
use super::cube::{DyadicCube, ProductRect};
use super::geom::{cmp_scaled, floor_index, GeoBox, Point};

/// Finest level `k` at which `v` lies in the triple of the level-`k`
/// interval containing `u` (single axis). `None` when `u == v`.
fn axis_level(u: i64, v: i64, scale: i32) -> Option<i32> {
    if u == v {
        return None;
    }
    // 3I_k(u) = [2^-k (m-1), 2^-k (m+2)); the predicate is monotone in k and
    // fails once 2^(1-k) <= |u - v|, i.e. well before k = scale + 3.
    let mut k = 0;
    loop {
        let next = k + 1;
        let m = floor_index(u, scale, next);
        let lo = 3 * (m - 1);
        let hi = 3 * (m + 2);
        let inside = cmp_scaled(lo, next, v, scale) != Ordering::Greater
            && cmp_scaled(v, scale, hi, next) == Ordering::Less;
        if !inside {
            return Some(k);
        }
        k = next;
    }
}

/// `Q(u,v)`: the smallest standard dyadic cube `Q` with `u in Q` and
/// `v in 3Q`. Both points must lie in `[0,1)^d` and differ.
pub fn minimal_cube(u: &Point, v: &Point) -> Result<DyadicCube> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    if !u.in_unit_cube() || !v.in_unit_cube() {
        return Err(Error::Parameter("points must lie in [0,1)^d".into()));
    }
    let scale = u.scale().max(v.scale());
    let at = |p: &Point, a: usize| p.coords()[a] << (scale - p.scale());
    let level = (0..u.dim())
        .filter_map(|a| axis_level(at(u, a), at(v, a), scale))
        .min()
        .ok_or(Error::DegeneratePair { axis: 0 })?;
    Ok(DyadicCube::standard_containing(u, level))
}

/// Exact check of `l(Q)/2 <= |u - v|` and `|u - v| < 2 sqrt(d) l(Q)` by
/// comparing squared integers.
pub fn cube_distance_bounds(u: &Point, v: &Point, q: &DyadicCube) -> (bool, bool) {
    let (d2, e) = u.dist2_scaled(v);
    // |u-v|^2 = d2 / (9 * 4^e), l(Q)^2 = 4^-k
    let k = q.level();
    let dim = u.dim() as i128;
    let (lhs, rhs) = if k >= 0 {
        (d2 << (2 * k), 9i128 << (2 * e))
    } else {
        (d2, 9i128 << (2 * (e - k)))
    };
    (4 * lhs >= rhs, lhs < 4 * dim * rhs)
}

/// `R(x,y)`: the closed axis-parallel box spanned by `x` and `y`.
///
/// Every coordinate must differ; the box is otherwise degenerate.
pub fn min_rect(x: &Point, y: &Point) -> Result<GeoBox> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let scale = x.scale().max(y.scale());
    let mut lo = Vec::with_capacity(x.dim());
    let mut hi = Vec::with_capacity(x.dim());
    for a in 0..x.dim() {
        let xa = x.coords()[a] << (scale - x.scale());
        let ya = y.coords()[a] << (scale - y.scale());
        if xa == ya {
            return Err(Error::DegeneratePair { axis: a });
        }
        lo.push(xa.min(ya));
        hi.push(xa.max(ya));
    }
    Ok(GeoBox::closed(lo, hi, scale))
}

/// `R_0(x,y) = prod_i Q(x_i, y_i)`; factor-wise `x_i != y_i` required.
pub fn product_minimal(config: &GridConfig, x: &Point, y: &Point) -> Result<ProductRect> {
    let n = config.total_dim();
    if x.dim() != n || y.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.dim().min(y.dim()),
        });
    }
    let mut factors = Vec::with_capacity(config.factors());
    for j in 0..config.factors() {
        let axes = config.factor_axes(j);
        let start = axes.start;
        let q = minimal_cube(&x.slice(axes.clone()), &y.slice(axes)).map_err(|e| match e {
            Error::DegeneratePair { .. } => Error::DegeneratePair { axis: start },
            other => other,
        })?;
        factors.push(q);
    }
    ProductRect::new(config, factors)
}
