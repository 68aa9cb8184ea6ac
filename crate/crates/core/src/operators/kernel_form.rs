//! The fractional integral in kernel form and the dyadic kernel sum.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{min_rect, product_minimal, DyadicCube, GridConfig, Point, ProductRect};
use crate::error::{Error, Result};
use crate::measures::{cell_index, keyed_rng, GridFunction, Weight};
use crate::scalar::Scalar;

use super::forms::{check_alpha, Applied, Diagnostics};

/// Above this many cells the kernel rows are recomputed on every
/// application instead of stored.
pub const MATRIX_CACHE_CELLS: usize = 2304;

/// `k(x, y) mu(y-cell)` with `k(x, y) = mu(R(x, y))^(alpha/N - 1)` at
/// cell centres; pairs sharing a coordinate are zero.
#[derive(Clone, Debug)]
pub(crate) struct KernelMatrix<S> {
    config: GridConfig,
    cells: Vec<Vec<usize>>,
    cell_masses: Vec<S>,
    prefix: crate::measures::PrefixTable<S>,
    power: S,
    rows: Option<Vec<Vec<S>>>,
    zero_pairs: Vec<Vec<usize>>,
    excluded: usize,
}

impl<S: Scalar> KernelMatrix<S> {
    pub fn new(mu: &Weight<S>, alpha: f64) -> Result<Self> {
        check_alpha(alpha, mu.config())?;
        let config = mu.config().clone();
        let n = config.cell_count();
        let cells: Vec<Vec<usize>> = (0..n).map(|i| cell_index(&config, i)).collect();
        let l = config.cells_per_axis();
        let excluded = n * n - n * (l - 1).pow(config.total_dim() as u32);
        let mut m = Self {
            prefix: mu.measure().prefix().clone(),
            cell_masses: mu.cell_masses().to_vec(),
            power: S::from_f64_lossy(alpha / config.total_dim() as f64 - 1.0),
            config,
            cells,
            rows: None,
            zero_pairs: Vec::new(),
            excluded,
        };
        let zero_pairs: Vec<Vec<usize>> = (0..n).into_par_iter().map(|x| m.zero_row(x)).collect();
        m.zero_pairs = zero_pairs;
        if n <= MATRIX_CACHE_CELLS {
            m.rows = Some((0..n).into_par_iter().map(|x| m.row(x)).collect());
        }
        Ok(m)
    }

    fn shares_axis(&self, x: usize, y: usize) -> bool {
        self.cells[x]
            .iter()
            .zip(&self.cells[y])
            .any(|(a, b)| a == b)
    }

    fn pair_mass(&self, x: usize, y: usize) -> S {
        let (lo, hi): (Vec<i64>, Vec<i64>) = self.cells[x]
            .iter()
            .zip(&self.cells[y])
            .map(|(&a, &b)| {
                let (a, b) = (2 * a as i64 + 1, 2 * b as i64 + 1);
                (a.min(b), a.max(b))
            })
            .unzip();
        self.prefix.query_units(&lo, &hi)
    }

    fn entry(&self, x: usize, y: usize) -> S {
        if self.shares_axis(x, y) {
            return S::zero();
        }
        let m = self.pair_mass(x, y);
        if m > S::zero() {
            m.powf(self.power) * self.cell_masses[y]
        } else {
            S::zero()
        }
    }

    fn row(&self, x: usize) -> Vec<S> {
        (0..self.cells.len()).map(|y| self.entry(x, y)).collect()
    }

    fn zero_row(&self, x: usize) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&y| {
                !self.shares_axis(x, y)
                    && self.cell_masses[y] > S::zero()
                    && self.pair_mass(x, y) <= S::zero()
            })
            .collect()
    }

    /// `k(x, y)` itself, zero for excluded pairs.
    #[cfg(test)]
    pub fn kernel_value(&self, x: usize, y: usize) -> S {
        if self.shares_axis(x, y) {
            return S::zero();
        }
        let m = self.pair_mass(x, y);
        if m > S::zero() {
            m.powf(self.power)
        } else {
            S::zero()
        }
    }

    pub fn excluded_pairs(&self) -> usize {
        self.excluded
    }

    pub fn apply(&self, f: &[S]) -> (Vec<S>, usize) {
        let dot = |row: &[S]| {
            row.iter()
                .zip(f)
                .fold(S::zero(), |acc, (&k, &v)| acc + k * v)
        };
        let out = match &self.rows {
            Some(rows) => rows.par_iter().map(|r| dot(r)).collect(),
            None => (0..self.cells.len())
                .into_par_iter()
                .map(|x| dot(&self.row(x)))
                .collect(),
        };
        let skipped = self
            .zero_pairs
            .iter()
            .map(|ys| ys.iter().filter(|&&y| f[y] > S::zero()).count())
            .sum();
        (out, skipped)
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }
}

/// `R_alpha^mu f` by cell-centre quadrature.
pub fn apply_frac_kernel<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    f: &GridFunction<S>,
) -> Result<Applied<S>> {
    mu.check_config(f.config())?;
    let m = KernelMatrix::new(mu, alpha)?;
    let (values, skipped) = m.apply(f.values());
    Ok(Applied {
        output: GridFunction::new_unchecked(f.config(), values),
        diagnostics: Diagnostics {
            skipped_terms: skipped,
            excluded_pairs: m.excluded_pairs(),
            truncation_depth: m.config().depth(),
        },
    })
}

/// `mu(R(x, y))^(alpha/N - 1)` for coordinate-distinct points of the domain.
pub fn closed_kernel<S: Scalar>(mu: &Weight<S>, alpha: f64, x: &Point, y: &Point) -> Result<S> {
    check_alpha(alpha, mu.config())?;
    let m = mu.mass_box(&min_rect(x, y)?)?;
    let power = S::from_f64_lossy(alpha / mu.config().total_dim() as f64 - 1.0);
    Ok(if m > S::zero() {
        m.powf(power)
    } else {
        S::zero()
    })
}

/// `sum_R mu(R)^(alpha/N-1) 1_R(x) 1_{3R}(y)` over the standard product
/// cubes with factor levels `0..=K`.
pub fn kernel_sum<S: Scalar>(mu: &Weight<S>, alpha: f64, x: &Point, y: &Point) -> Result<S> {
    let config = mu.config();
    check_alpha(alpha, config)?;
    // per factor, the qualifying levels are 0..=level(Q(x_j, y_j))
    let minimal = product_minimal(config, x, y)?;
    let k = config.depth() as i32;
    let tops: Vec<i32> = minimal.levels().iter().map(|&l| l.min(k)).collect();
    let power = S::from_f64_lossy(alpha / config.total_dim() as f64 - 1.0);
    let mut levels = vec![0i32; tops.len()];
    let mut total = S::zero();
    loop {
        let factors: Vec<DyadicCube> = (0..config.factors())
            .map(|j| DyadicCube::standard_containing(&x.slice(config.factor_axes(j)), levels[j]))
            .collect();
        let m = mu.mass(&ProductRect::new(config, factors)?)?;
        if m > S::zero() {
            total = total + m.powf(power);
        }
        let mut j = levels.len();
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            if levels[j] < tops[j] {
                levels[j] += 1;
                levels[j + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
        }
    }
}

/// Range statistics for the pointwise kernel comparison.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceStats {
    pub pairs: usize,
    /// Level whose cell centres the pairs are drawn from.
    pub sample_level: u32,
    pub r_min: f64,
    pub r_max: f64,
    /// `|log(r_max / r_min)|`.
    pub log_width: f64,
    /// Range of `mu(R_0(x, y)) / mu(R(x, y))`.
    pub r0_min: f64,
    pub r0_max: f64,
    pub r0_log_width: f64,
}

/// Draw `pairs` coordinate-distinct pairs of centres of level-`sample_level`
/// cubes and compare [`kernel_sum`] with [`closed_kernel`].
///
/// Centres of cubes at level `L <= K` are exact lattice points and every
/// `Q(x_j, y_j)` lies at level `<= L`, so truncation at depth `K` never
/// cuts a qualifying cube.
pub fn kernel_equivalence<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    pairs: usize,
    sample_level: u32,
    seed: u64,
) -> Result<EquivalenceStats> {
    let config = mu.config();
    if sample_level > config.depth() || sample_level == 0 {
        return Err(Error::Parameter(format!(
            "sample level must lie in 1..={}, got {sample_level}",
            config.depth()
        )));
    }
    let n = config.total_dim();
    let side = 1i64 << sample_level;
    let unit = 3i64 << (config.unit_scale() as u32 - sample_level - 1);
    let mut rng = keyed_rng(seed, &[0x6b65_7271]);
    let mut r = (f64::INFINITY, f64::NEG_INFINITY);
    let mut r0 = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..pairs {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.random_range(0..side);
            let mut b = rng.random_range(0..side - 1);
            if b >= a {
                b += 1;
            }
            xs.push((2 * a + 1) * unit);
            ys.push((2 * b + 1) * unit);
        }
        let x = config.point(&xs);
        let y = config.point(&ys);
        let s = kernel_sum(mu, alpha, &x, &y)?.to_f64_lossy();
        let c = closed_kernel(mu, alpha, &x, &y)?.to_f64_lossy();
        let ratio = s / c;
        r = (r.0.min(ratio), r.1.max(ratio));
        let m0 = mu.mass(&product_minimal(config, &x, &y)?)?.to_f64_lossy();
        let m = mu.mass_box(&min_rect(&x, &y)?)?.to_f64_lossy();
        let ratio0 = m0 / m;
        r0 = (r0.0.min(ratio0), r0.1.max(ratio0));
    }
    Ok(EquivalenceStats {
        pairs,
        sample_level,
        r_min: r.0,
        r_max: r.1,
        log_width: (r.1 / r.0).ln().abs(),
        r0_min: r0.0,
        r0_max: r0.1,
        r0_log_width: (r0.1 / r0.0).ln().abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{gen_cascade, gen_uniform};

    fn pt(cfg: &GridConfig, xs: &[f64]) -> Point {
        Point::from_reals(xs, cfg.unit_scale())
    }

    #[test]
    fn uniform_pair_examples() {
        let cfg = GridConfig::new(vec![1], 3).unwrap();
        let mu: Weight<f64> = gen_uniform(&cfg).unwrap();
        let (x, y) = (pt(&cfg, &[0.25]), pt(&cfg, &[0.75]));
        let c = closed_kernel(&mu, 0.5, &x, &y).unwrap();
        assert!((c - 2f64.sqrt()).abs() < 1e-12);
        let s = kernel_sum(&mu, 0.5, &x, &y).unwrap();
        assert!((s - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((s / c - 1.7071067811865475).abs() < 1e-12);
        assert!(kernel_sum(&mu, 0.5, &x, &x).is_err());
    }

    #[test]
    fn kernel_is_symmetric_and_uses_product_mass() {
        let cfg = GridConfig::new(vec![1, 1], 2).unwrap();
        let mu: Weight<f64> = gen_cascade(&cfg, 3.0, 5).unwrap();
        let m = KernelMatrix::new(&mu, 1.0).unwrap();
        let n = cfg.cell_count();
        for x in 0..n {
            for y in 0..n {
                assert_eq!(m.kernel_value(x, y), m.kernel_value(y, x));
                if m.shares_axis(x, y) {
                    continue;
                }
                let cx = cfg.cell_center(&cell_index(&cfg, x));
                let cy = cfg.cell_center(&cell_index(&cfg, y));
                let want = closed_kernel(&mu, 1.0, &cx, &cy).unwrap();
                assert_eq!(m.kernel_value(x, y), want);
            }
        }
        let l = cfg.cells_per_axis();
        assert_eq!(m.excluded_pairs(), n * n - n * (l - 1) * (l - 1));
    }

    #[test]
    fn kernel_form_matches_direct_quadrature() {
        let cfg = GridConfig::new(vec![1], 2).unwrap();
        let mu: Weight<f64> = gen_cascade(&cfg, 2.0, 1).unwrap();
        let f = GridFunction::new(&cfg, (0..12).map(|i| (i % 4) as f64).collect()).unwrap();
        let out = apply_frac_kernel(&mu, 0.5, &f).unwrap();
        for x in 0..12usize {
            let mut want = 0.0;
            for y in 0..12usize {
                if x == y {
                    continue;
                }
                let (a, b) = (x.min(y), x.max(y));
                // centres to centres: half of each end cell plus the cells between
                let m: f64 = mu.cell_masses()[a] / 2.0
                    + mu.cell_masses()[b] / 2.0
                    + mu.cell_masses()[a + 1..b].iter().sum::<f64>();
                want += m.powf(-0.5) * f.values()[y] * mu.cell_masses()[y];
            }
            assert!((out.output.values()[x] - want).abs() <= 1e-12 * want);
        }
        assert_eq!(out.diagnostics.excluded_pairs, 12);
    }

    #[test]
    fn equivalence_is_bounded() {
        let cfg = GridConfig::new(vec![1, 1], 4).unwrap();
        let mu: Weight<f64> = gen_cascade(&cfg, 2.0, 3).unwrap();
        let s = kernel_equivalence(&mu, 1.0, 200, 3, 7).unwrap();
        assert!(s.r_min > 0.0 && s.r_max.is_finite());
        assert!(s.r_min <= s.r_max);
        assert!(s.r0_min > 0.0 && s.r0_max.is_finite());
    }
}
