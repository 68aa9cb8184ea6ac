use std::sync::Arc;

use serde_json::Value;

use crate::dyadic::{GeoBox, GridConfig, ProductRect};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

use super::field::{FieldLayout, RectField};
use super::prefix::PrefixTable;

/// Nonnegative cellwise constant measure on `[0,1)^N` with both mass
/// backends built.
#[derive(Clone, Debug)]
pub struct Measure<S> {
    config: GridConfig,
    cell_masses: Vec<S>,
    tree: RectField<S>,
    prefix: PrefixTable<S>,
}

impl<S: Scalar> Measure<S> {
    pub fn from_cell_masses(layout: &Arc<FieldLayout>, cell_masses: Vec<S>) -> Self {
        let config = layout.config().clone();
        let tree = RectField::aggregate(layout, &cell_masses);
        let prefix = PrefixTable::new(&cell_masses, config.cells_per_axis(), config.total_dim());
        Self {
            config,
            cell_masses,
            tree,
            prefix,
        }
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        self.tree.layout()
    }

    pub fn cell_masses(&self) -> &[S] {
        &self.cell_masses
    }

    /// Masses of every standard product cube, in enumeration order.
    pub fn tree(&self) -> &RectField<S> {
        &self.tree
    }

    pub fn prefix(&self) -> &PrefixTable<S> {
        &self.prefix
    }

    pub fn total(&self) -> S {
        self.tree.at(0)
    }

    /// Mass of `R ∩ [0,1)^N`. Standard cubes come from the tree, everything
    /// else from the summed-area table.
    pub fn mass_rect(&self, rect: &ProductRect) -> Result<S> {
        if let Some(v) = self.tree.get(rect) {
            return Ok(v);
        }
        self.mass_box(&rect.to_box())
    }

    /// Mass of `B ∩ [0,1)^N` for a box whose corners are multiples of the
    /// global unit.
    pub fn mass_box(&self, b: &GeoBox) -> Result<S> {
        let b = b.in_units(&self.config)?;
        Ok(self.prefix.query_box(&b))
    }
}

/// Provenance recorded alongside a weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMeta {
    pub kind: String,
    pub seed: Option<u64>,
    pub params: Value,
}

impl Default for WeightMeta {
    fn default() -> Self {
        Self {
            kind: "custom".into(),
            seed: None,
            params: Value::Null,
        }
    }
}

/// Rectangular weight: nonnegative density on the finest lattice.
#[derive(Clone, Debug)]
pub struct Weight<S> {
    density: Vec<S>,
    measure: Measure<S>,
    meta: WeightMeta,
}

impl<S: Scalar> Weight<S> {
    pub fn from_density(config: &GridConfig, density: Vec<S>, meta: WeightMeta) -> Result<Self> {
        Self::with_layout(&FieldLayout::new(config), density, meta)
    }

    pub fn with_layout(
        layout: &Arc<FieldLayout>,
        density: Vec<S>,
        meta: WeightMeta,
    ) -> Result<Self> {
        let config = layout.config();
        if density.len() != config.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: config.cell_count(),
                got: density.len(),
            });
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= S::zero())) {
            return Err(Error::Parameter(
                "density must be finite and nonnegative".into(),
            ));
        }
        let vol = cell_volume::<S>(config);
        let masses = density.iter().map(|&d| d * vol).collect();
        let measure = Measure::from_cell_masses(layout, masses);
        if measure.total() <= S::zero() {
            return Err(Error::Parameter("weight has zero total mass".into()));
        }
        Ok(Self {
            density,
            measure,
            meta,
        })
    }

    pub fn config(&self) -> &GridConfig {
        self.measure.config()
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        self.measure.layout()
    }

    pub fn density(&self) -> &[S] {
        &self.density
    }

    pub fn meta(&self) -> &WeightMeta {
        &self.meta
    }

    pub fn measure(&self) -> &Measure<S> {
        &self.measure
    }

    pub fn cell_masses(&self) -> &[S] {
        self.measure.cell_masses()
    }

    /// `sigma(R)` for every standard product cube, enumeration order.
    pub fn masses(&self) -> &RectField<S> {
        self.measure.tree()
    }

    pub fn total_mass(&self) -> S {
        self.measure.total()
    }

    /// `sigma(R ∩ [0,1)^N)`.
    pub fn mass(&self, rect: &ProductRect) -> Result<S> {
        self.measure.mass_rect(rect)
    }

    pub fn mass_box(&self, b: &GeoBox) -> Result<S> {
        self.measure.mass_box(b)
    }

    /// The measure `f dsigma`, answering `∫_R f dsigma` for any region.
    pub fn integrator(&self, f: &GridFunction<S>) -> Result<Measure<S>> {
        self.check_config(f.config())?;
        let masses = f
            .values()
            .iter()
            .zip(self.cell_masses())
            .map(|(&v, &m)| v * m)
            .collect();
        Ok(Measure::from_cell_masses(self.layout(), masses))
    }

    /// `∫_R f dsigma`.
    pub fn integrate(&self, f: &GridFunction<S>, rect: &ProductRect) -> Result<S> {
        self.integrator(f)?.mass_rect(rect)
    }

    /// `(∫ f^p dsigma)^(1/p)` for `p > 1`.
    pub fn lp_norm(&self, f: &GridFunction<S>, p: S) -> Result<S> {
        if !(p > S::one()) || !p.is_finite() {
            return Err(Error::Parameter(format!(
                "L^p norm needs 1 < p < inf, got {p}"
            )));
        }
        self.check_config(f.config())?;
        Ok(self.lp_norm_unchecked(f.values(), p))
    }

    pub(crate) fn lp_norm_unchecked(&self, values: &[S], p: S) -> S {
        let terms: Vec<S> = values
            .iter()
            .zip(self.cell_masses())
            .map(|(&v, &m)| {
                if m > S::zero() {
                    v.abs().powf(p) * m
                } else {
                    S::zero()
                }
            })
            .collect();
        pairwise_sum(&terms).powf(p.recip())
    }

    /// `∫ f g dsigma`.
    pub fn inner(&self, f: &[S], g: &[S]) -> S {
        let terms: Vec<S> = f
            .iter()
            .zip(g)
            .zip(self.cell_masses())
            .map(|((&a, &b), &m)| a * b * m)
            .collect();
        pairwise_sum(&terms)
    }

    pub(crate) fn check_config(&self, other: &GridConfig) -> Result<()> {
        if other != self.config() {
            return Err(Error::ConfigMismatch(format!(
                "expected dims {:?} depth {}, got dims {:?} depth {}",
                self.config().dims(),
                self.config().depth(),
                other.dims(),
                other.depth()
            )));
        }
        Ok(())
    }

    /// The same weight on a coarser lattice (cell masses summed).
    pub fn coarsen(&self, depth: u32) -> Result<Self> {
        let cfg = self.config();
        if depth > cfg.depth() {
            return Err(Error::Parameter(format!(
                "cannot coarsen depth {} to {depth}",
                cfg.depth()
            )));
        }
        let target = cfg.with_depth(depth)?;
        let factor = 1usize << (cfg.depth() - depth);
        let dim = cfg.total_dim();
        let fine = cfg.cells_per_axis();
        let coarse = target.cells_per_axis();
        let mut density = vec![S::zero(); target.cell_count()];
        let mut idx = vec![0usize; dim];
        let shape = vec![fine; dim];
        for &d in &self.density {
            let c = idx.iter().fold(0usize, |acc, &i| acc * coarse + i / factor);
            density[c] = density[c] + d;
            super::lattice::advance(&mut idx, &shape);
        }
        let scale = S::from_usize_lossy(factor).powi(dim as i32).recip();
        let density = density.into_iter().map(|d| d * scale).collect();
        Self::from_density(&target, density, self.meta.clone())
    }

    /// `lambda * sigma`.
    pub fn scaled(&self, lambda: S) -> Result<Self> {
        Self::with_layout(
            self.layout(),
            self.density.iter().map(|&d| d * lambda).collect(),
            self.meta.clone(),
        )
    }
}

pub(crate) fn cell_volume<S: Scalar>(config: &GridConfig) -> S {
    S::from_usize_lossy(config.cells_per_axis())
        .recip()
        .powi(config.total_dim() as i32)
}

/// Nonnegative cellwise constant function on the finest lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S> {
    config: GridConfig,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn new(config: &GridConfig, values: Vec<S>) -> Result<Self> {
        if values.len() != config.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: config.cell_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= S::zero())) {
            return Err(Error::Parameter(
                "grid function values must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            config: config.clone(),
            values,
        })
    }

    pub(crate) fn new_unchecked(config: &GridConfig, values: Vec<S>) -> Self {
        Self {
            config: config.clone(),
            values,
        }
    }

    pub fn constant(config: &GridConfig, c: S) -> Self {
        Self::new_unchecked(config, vec![c; config.cell_count()])
    }

    /// Indicator of a box (cells whose centre lies in it).
    pub fn indicator(config: &GridConfig, b: &GeoBox) -> Self {
        let values = (0..config.cell_count())
            .map(|i| {
                if b.contains(&config.cell_center(&cell_index(config, i))) {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        Self::new_unchecked(config, values)
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self::new_unchecked(&self.config, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        Self::new_unchecked(
            &self.config,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// The same function on the lattice of depth `K + 1`, each cell
    /// replicated into its `2^N` subcells.
    pub fn upsample(&self) -> Result<Self> {
        let target = self.config.with_depth(self.config.depth() + 1)?;
        let fine = target.cells_per_axis();
        let coarse = self.config.cells_per_axis();
        let dim = target.total_dim();
        let shape = vec![fine; dim];
        let mut idx = vec![0usize; dim];
        let mut values = Vec::with_capacity(target.cell_count());
        for _ in 0..target.cell_count() {
            let c = idx.iter().fold(0usize, |acc, &i| acc * coarse + i / 2);
            values.push(self.values[c]);
            super::lattice::advance(&mut idx, &shape);
        }
        Ok(Self::new_unchecked(&target, values))
    }
}

/// Multi-index of a flat finest-cell position.
pub fn cell_index(config: &GridConfig, mut flat: usize) -> Vec<usize> {
    let l = config.cells_per_axis();
    let mut idx = vec![0usize; config.total_dim()];
    for a in (0..idx.len()).rev() {
        idx[a] = flat % l;
        flat /= l;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicCube;

    fn uniform(dims: Vec<usize>, k: u32) -> Weight<f64> {
        let cfg = GridConfig::new(dims, k).unwrap();
        Weight::from_density(&cfg, vec![1.0; cfg.cell_count()], WeightMeta::default()).unwrap()
    }

    #[test]
    fn uniform_mass_example() {
        let w = uniform(vec![1, 1], 3);
        let cfg = w.config().clone();
        let r = ProductRect::new(
            &cfg,
            vec![
                DyadicCube::standard(1, vec![0]),
                DyadicCube::standard(2, vec![1]),
            ],
        )
        .unwrap();
        assert!((w.mass(&r).unwrap() - 0.125).abs() < 1e-14);
        assert!((w.mass(&ProductRect::top(&cfg)).unwrap() - w.total_mass()).abs() == 0.0);
        let b = GeoBox::from_reals(&[0.0, 0.25], &[0.5, 0.5], 4).unwrap();
        assert!((w.mass_box(&b).unwrap() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_density() {
        let cfg = GridConfig::new(vec![1], 2).unwrap();
        assert!(Weight::from_density(&cfg, vec![0.0; 12], WeightMeta::default()).is_err());
        let mut d = vec![1.0; 12];
        d[3] = -1.0;
        assert!(Weight::from_density(&cfg, d, WeightMeta::default()).is_err());
        assert!(Weight::from_density(&cfg, vec![1.0; 11], WeightMeta::default()).is_err());
    }

    #[test]
    fn overhanging_box_counts_intersection() {
        let w = uniform(vec![1], 3);
        let b = DyadicCube::unit(1).triple();
        assert!((w.mass_box(&b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fine_box_needs_alignment() {
        let w = uniform(vec![1], 2);
        let b = GeoBox::new(vec![1], vec![2], 6);
        assert!(matches!(w.mass_box(&b), Err(Error::Alignment(_))));
    }

    #[test]
    fn integrate_indicator_identity() {
        let w = uniform(vec![1, 1], 2);
        let cfg = w.config().clone();
        let one = GridFunction::constant(&cfg, 1.0);
        let r = ProductRect::new(
            &cfg,
            vec![DyadicCube::standard(1, vec![1]), DyadicCube::unit(1)],
        )
        .unwrap();
        assert_eq!(w.integrate(&one, &r).unwrap(), w.mass(&r).unwrap());
        let s = ProductRect::new(
            &cfg,
            vec![
                DyadicCube::standard(2, vec![2]),
                DyadicCube::standard(1, vec![0]),
            ],
        )
        .unwrap();
        let ind = GridFunction::indicator(&cfg, &s.to_box());
        assert!((w.integrate(&ind, &r).unwrap() - w.mass(&s).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_cases() {
        let w = uniform(vec![1, 1], 2);
        let cfg = w.config().clone();
        let c = GridFunction::constant(&cfg, 3.0);
        assert!((w.lp_norm(&c, 2.5).unwrap() - 3.0).abs() < 1e-13);
        assert!(w.lp_norm(&c, 1.0).is_err());
        let r = ProductRect::new(
            &cfg,
            vec![
                DyadicCube::standard(1, vec![1]),
                DyadicCube::standard(2, vec![3]),
            ],
        )
        .unwrap();
        let ind = GridFunction::indicator(&cfg, &r.to_box());
        let p = 3.0;
        let expect = w.mass(&r).unwrap().powf(1.0 / p);
        assert!((w.lp_norm(&ind, p).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn coarsen_preserves_dyadic_masses() {
        let cfg = GridConfig::new(vec![1, 1], 3).unwrap();
        let d: Vec<f64> = (0..cfg.cell_count())
            .map(|i| 1.0 + (i % 7) as f64)
            .collect();
        let w = Weight::from_density(&cfg, d, WeightMeta::default()).unwrap();
        let c = w.coarsen(2).unwrap();
        for r in crate::dyadic::RectFamily::standard(c.config()).iter() {
            let a = c.mass(&r).unwrap();
            let b = w.mass(&r).unwrap();
            assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn upsample_keeps_integrals() {
        let w = uniform(vec![1], 3);
        let cfg = w.config().clone();
        let f = GridFunction::new(&cfg, (0..24).map(|i| i as f64).collect()).unwrap();
        let up = f.upsample().unwrap();
        let w2 = uniform(vec![1], 4);
        let top = ProductRect::top(&cfg);
        assert!((w.integrate(&f, &top).unwrap() - w2.integrate(&up, &top).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let cfg = GridConfig::new(vec![1, 1], 2).unwrap();
        let w = Weight::<f32>::from_density(&cfg, vec![1.0; 144], WeightMeta::default()).unwrap();
        assert!((w.total_mass() - 1.0).abs() < 1e-6);
    }
}
