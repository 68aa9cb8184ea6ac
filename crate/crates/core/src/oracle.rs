//! Brute-force references for tests.
//!
//! Nothing here touches the mass tree, the prefix table, the rectangle
//! enumerator or the minimal-cube search; every quantity is recomputed by
//! looping over finest cells and raw level/index tuples. Quadratic or
//! worse, so callers keep the depth small.

use crate::dyadic::{DyadicCube, GeoBox, Point, ProductRect, Shift};
use crate::error::{Error, Result};
use crate::measures::{GridFunction, Weight};
use crate::operators::Kernel;

/// Largest depth accepted by the enumeration oracles.
pub const ORACLE_MAX_DEPTH: u32 = 3;

/// Overlap of `[a0, a1)` (scale `sa`) with `[b0, b1)` (scale `sb`), as an
/// exact fraction of the second interval.
fn overlap_fraction(a0: i64, a1: i64, sa: i32, b0: i64, b1: i64, sb: i32) -> f64 {
    let e = sa.max(sb);
    let up = |x: i64, s: i32| (x as i128) << (e - s);
    let lo = up(a0, sa).max(up(b0, sb));
    let hi = up(a1, sa).min(up(b1, sb));
    if hi <= lo {
        return 0.0;
    }
    (hi - lo) as f64 / (up(b1, sb) - up(b0, sb)) as f64
}

fn cell_of(flat: usize, per_axis: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    let mut r = flat;
    for a in (0..dim).rev() {
        idx[a] = r % per_axis;
        r /= per_axis;
    }
    idx
}

/// `sigma(B ∩ [0,1)^N)` by summing every finest cell times its overlap.
pub fn mass_direct(w: &Weight<f64>, b: &GeoBox) -> f64 {
    let cfg = w.config();
    let l = cfg.cells_per_axis();
    let n = cfg.total_dim();
    // cells are [i, i+1) at scale K, i.e. [3i, 3i+3) in units 1/(3 * 2^K)
    let s = cfg.depth() as i32;
    let mut total = 0.0;
    for (flat, &m) in w.cell_masses().iter().enumerate() {
        let idx = cell_of(flat, l, n);
        let mut frac = 1.0;
        for a in 0..n {
            let c0 = idx[a] as i64;
            frac *= overlap_fraction(b.lo()[a], b.hi()[a], b.scale(), c0, c0 + 1, s);
            if frac == 0.0 {
                break;
            }
        }
        total += m * frac;
    }
    total
}

/// Product rectangle as raw per-axis `[lo, hi)` at scale `K`, in units of
/// one finest cell, from levels and indices.
fn raw_box(
    depth: u32,
    dims: &[usize],
    levels: &[u32],
    index: &[i64],
    inflate: i64,
) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut a = 0;
    for (j, &d) in dims.iter().enumerate() {
        let side = 3i64 << (depth - levels[j]);
        for _ in 0..d {
            out.push((
                index[a] * side - inflate * side,
                (index[a] + 1) * side + inflate * side,
            ));
            a += 1;
        }
    }
    out
}

fn raw_integral(w: &Weight<f64>, f: &[f64], bx: &[(i64, i64)]) -> f64 {
    let cfg = w.config();
    let l = cfg.cells_per_axis();
    let n = cfg.total_dim();
    let mut total = 0.0;
    for flat in 0..cfg.cell_count() {
        let idx = cell_of(flat, l, n);
        if idx
            .iter()
            .zip(bx)
            .all(|(&i, &(lo, hi))| lo <= i as i64 && (i as i64) < hi)
        {
            total += f[flat] * w.cell_masses()[flat];
        }
    }
    total
}

/// Every standard product rectangle as `(levels, index)`, by nested loops.
fn all_rects(depth: u32, dims: &[usize]) -> Vec<(Vec<u32>, Vec<i64>)> {
    let mut out = Vec::new();
    let n: usize = dims.iter().sum();
    let mut levels = vec![0u32; dims.len()];
    loop {
        let sizes: Vec<i64> = dims
            .iter()
            .enumerate()
            .flat_map(|(j, &d)| std::iter::repeat_n(1i64 << levels[j], d))
            .collect();
        let count: i64 = sizes.iter().product();
        for c in 0..count {
            let mut index = vec![0i64; n];
            let mut r = c;
            for a in (0..n).rev() {
                index[a] = r % sizes[a];
                r /= sizes[a];
            }
            out.push((levels.clone(), index));
        }
        let mut j = dims.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if levels[j] < depth {
                levels[j] += 1;
                for l in &mut levels[j + 1..] {
                    *l = 0;
                }
                break;
            }
        }
    }
}

fn to_rect(dims: &[usize], levels: &[u32], index: &[i64]) -> ProductRect {
    let mut a = 0;
    let factors = dims
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let q = DyadicCube::standard(levels[j] as i32, index[a..a + d].to_vec());
            a += d;
            q
        })
        .collect();
    ProductRect::from_factors_unchecked(factors)
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > ORACLE_MAX_DEPTH {
        return Err(Error::DepthExceeded(format!(
            "oracle limited to depth {ORACLE_MAX_DEPTH}, got {depth}"
        )));
    }
    Ok(())
}

/// `sum_R K(R) prod_k int_R f_k dsigma_k`, transcribed literally.
pub fn mlinear_direct(
    kernel: &Kernel<f64>,
    weights: &[&Weight<f64>],
    fs: &[&GridFunction<f64>],
) -> Result<f64> {
    let cfg = weights
        .first()
        .ok_or_else(|| Error::Parameter("no weights".into()))?
        .config();
    check_depth(cfg.depth())?;
    let dims = cfg.dims();
    let mut total = 0.0;
    for (levels, index) in all_rects(cfg.depth(), dims) {
        let k = kernel
            .get(&to_rect(dims, &levels, &index))
            .ok_or_else(|| Error::Parameter("kernel misses a rectangle".into()))?;
        let bx = raw_box(cfg.depth(), dims, &levels, &index, 0);
        let mut term = k;
        for (w, f) in weights.iter().zip(fs) {
            term *= raw_integral(w, f.values(), &bx);
        }
        total += term;
    }
    Ok(total)
}

/// `sum_R c(R) 1_R(x) int_{R or 3R} f dsigma` at every finest cell, with
/// `c(R)` given as a function of the rectangle's mass.
fn operator_direct(
    mu: &Weight<f64>,
    f: &[f64],
    coef: impl Fn(f64) -> f64,
    inflate: i64,
) -> Result<Vec<f64>> {
    let cfg = mu.config();
    check_depth(cfg.depth())?;
    let dims = cfg.dims();
    let l = cfg.cells_per_axis();
    let n = cfg.total_dim();
    let ones = vec![1.0; cfg.cell_count()];
    let mut out = vec![0.0; cfg.cell_count()];
    for (levels, index) in all_rects(cfg.depth(), dims) {
        let bx = raw_box(cfg.depth(), dims, &levels, &index, 0);
        let m = raw_integral(mu, &ones, &bx);
        if m <= 0.0 {
            continue;
        }
        let region = raw_box(cfg.depth(), dims, &levels, &index, inflate);
        let v = coef(m) * raw_integral(mu, f, &region);
        for (flat, o) in out.iter_mut().enumerate() {
            let idx = cell_of(flat, l, n);
            if idx
                .iter()
                .zip(&bx)
                .all(|(&i, &(lo, hi))| lo <= i as i64 && (i as i64) < hi)
            {
                *o += v;
            }
        }
    }
    Ok(out)
}

/// Dyadic fractional integral over the standard grid.
pub fn frac_dyadic_direct(mu: &Weight<f64>, alpha: f64, f: &GridFunction<f64>) -> Result<Vec<f64>> {
    let e = alpha / mu.config().total_dim() as f64 - 1.0;
    operator_direct(mu, f.values(), |m| m.powf(e), 0)
}

/// Pérez form with `int_{3R ∩ [0,1)^N}`.
pub fn perez_direct(mu: &Weight<f64>, alpha: f64, f: &GridFunction<f64>) -> Result<Vec<f64>> {
    let e = alpha / mu.config().total_dim() as f64 - 1.0;
    operator_direct(mu, f.values(), |m| m.powf(e), 1)
}

/// `floor(x * 2^k)` for `x = num / (3 * 2^s)`, any sign of `k - s`.
fn floor_at(num: i64, s: i32, k: i32) -> i64 {
    let num = num as i128;
    let v = if k >= s {
        (num << (k - s)).div_euclid(3)
    } else {
        num.div_euclid(3i128 << (s - k))
    };
    v as i64
}

/// `Q(u,v)` by scanning every level from coarse to fine and keeping the
/// finest standard cube containing `u` whose triple contains `v`.
pub fn minimal_cube_exhaustive(u: &Point, v: &Point) -> Result<DyadicCube> {
    if u.dim() != v.dim() || u.scale() != v.scale() {
        return Err(Error::Parameter(
            "points must share dimension and scale".into(),
        ));
    }
    if u == v {
        return Err(Error::DegeneratePair { axis: 0 });
    }
    let s = u.scale();
    let mut best = None;
    for k in 0..=s + 4 {
        let index: Vec<i64> = u.coords().iter().map(|&c| floor_at(c, s, k)).collect();
        // 3Q = [(m-1) 2^-k, (m+2) 2^-k); compare 3 * 2^s * v with 3 * 2^s * bounds
        let ok = index.iter().zip(v.coords()).all(|(&m, &c)| {
            let c = (c as i128) << k.max(0);
            let lo = (3 * (m as i128 - 1)) << s;
            let hi = (3 * (m as i128 + 2)) << s;
            lo <= c && c < hi
        });
        if ok {
            best = Some(DyadicCube::standard(k, index));
        }
    }
    best.ok_or_else(|| Error::Parameter("no cube found".into()))
}

/// Every `(tau, P)` with `P` in the `tau`-grid, `l(P) = 8 l(Q)` and
/// `3Q ⊆ P`, over all `tau in {0, ±1/3}^d`.
pub fn shift_cover_exhaustive(q: &DyadicCube) -> Vec<(Vec<Shift>, DyadicCube)> {
    let d = q.dim();
    let level = q.level() - 3;
    // in units of l(Q)/3: 3Q = [3q - 3, 3q + 6); a level-(k-3) cube with
    // shift t and index m is [8(3m + t), 8(3m + t + 3))
    let per_axis: Vec<Vec<(Shift, i64)>> = (0..d)
        .map(|a| {
            let qa = q.index()[a];
            let (lo, hi) = (3 * qa - 3, 3 * qa + 6);
            let mut ok = Vec::new();
            for t in [-1i64, 0, 1] {
                for m in qa.div_euclid(8) - 3..=qa.div_euclid(8) + 3 {
                    let (plo, phi) = (8 * (3 * m + t), 8 * (3 * m + t + 3));
                    if plo <= lo && hi <= phi {
                        let s = match t {
                            -1 => Shift::Minus,
                            0 => Shift::Zero,
                            _ => Shift::Plus,
                        };
                        ok.push((s, m));
                    }
                }
            }
            ok
        })
        .collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; d];
    if per_axis.iter().any(|v| v.is_empty()) {
        return out;
    }
    loop {
        let shift: Vec<Shift> = (0..d).map(|a| per_axis[a][pick[a]].0).collect();
        let index: Vec<i64> = (0..d).map(|a| per_axis[a][pick[a]].1).collect();
        out.push((shift.clone(), DyadicCube::new(level, index, shift)));
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if pick[a] + 1 < per_axis[a].len() {
                pick[a] += 1;
                for b in &mut pick[a + 1..] {
                    *b = 0;
                }
                break;
            }
        }
    }
}
