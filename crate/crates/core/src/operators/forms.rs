//! Positive dyadic operators over the standard and shifted product grids,
//! the Pérez form and the multilinear form.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{GridConfig, RectFamily, Shift};
use crate::error::{Error, Result};
use crate::measures::{GridFunction, RectField, Weight};
use crate::scalar::{pairwise_sum, Scalar};

use super::boxes::{cell_box, spread, CellBox, CellPrefix};
use super::kernel::Kernel;
use super::kernel_form::KernelMatrix;

/// Bookkeeping attached to every operator application.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Terms dropped because `mu(R) = 0` while the integral they multiply
    /// was positive.
    pub skipped_terms: usize,
    /// Cell pairs left out of the kernel form because they share a
    /// coordinate.
    pub excluded_pairs: usize,
    pub truncation_depth: u32,
}

/// Operator output with its diagnostics.
#[derive(Clone, Debug)]
pub struct Applied<S> {
    pub output: GridFunction<S>,
    pub diagnostics: Diagnostics,
}

/// The four realizations of the fractional integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorForm {
    /// `sum_R mu(R)^(alpha/N-1) 1_R int_R f dmu` over the standard grid.
    Dyadic,
    /// Same sum with `int_{3R}`.
    Perez,
    /// Cell-centre quadrature of `int mu(R(x,y))^(alpha/N-1) f(y) dmu(y)`.
    Kernel,
    /// Sum of the dyadic form over all `3^N` shifted grids.
    ShiftedSum,
}

impl OperatorForm {
    pub const ALL: [OperatorForm; 4] = [
        OperatorForm::Dyadic,
        OperatorForm::Perez,
        OperatorForm::Kernel,
        OperatorForm::ShiftedSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorForm::Dyadic => "dyadic",
            OperatorForm::Perez => "perez",
            OperatorForm::Kernel => "kernel",
            OperatorForm::ShiftedSum => "shifted-sum",
        }
    }
}

impl fmt::Display for OperatorForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown operator form {s:?}")))
    }
}

pub(crate) fn check_alpha(alpha: f64, config: &GridConfig) -> Result<()> {
    let n = config.total_dim() as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::Exponent(format!(
            "0 < alpha < N fails: alpha = {alpha}, N = {n}"
        )));
    }
    Ok(())
}

fn check_len<S>(config: &GridConfig, f: &[S]) -> Result<()> {
    if f.len() != config.cell_count() {
        return Err(Error::DimensionMismatch {
            expected: config.cell_count(),
            got: f.len(),
        });
    }
    Ok(())
}

/// `int_R f dsigma` for every standard product cube.
pub fn rect_integrals<S: Scalar>(sigma: &Weight<S>, f: &[S]) -> RectField<S> {
    let fm: Vec<S> = f
        .iter()
        .zip(sigma.cell_masses())
        .map(|(&a, &m)| a * m)
        .collect();
    RectField::aggregate(sigma.layout(), &fm)
}

/// `sum_R K(R) prod_k int_R f_k dsigma_k` over the standard product cubes.
pub fn mlinear_form<S: Scalar>(
    kernel: &Kernel<S>,
    weights: &[&Weight<S>],
    fs: &[&GridFunction<S>],
) -> Result<S> {
    if weights.len() != fs.len() {
        return Err(Error::Parameter(format!(
            "{} weights but {} functions",
            weights.len(),
            fs.len()
        )));
    }
    let config = kernel.layout().config();
    for (w, f) in weights.iter().zip(fs) {
        w.check_config(config)?;
        w.check_config(f.config())?;
    }
    let integrals: Vec<RectField<S>> = weights
        .iter()
        .zip(fs)
        .map(|(w, f)| rect_integrals(w, f.values()))
        .collect();
    Ok(mlinear_from_integrals(kernel, &integrals))
}

pub(crate) fn mlinear_from_integrals<S: Scalar>(
    kernel: &Kernel<S>,
    integrals: &[RectField<S>],
) -> S {
    let terms: Vec<S> = (0..kernel.layout().len())
        .map(|slot| {
            integrals
                .iter()
                .fold(kernel.values()[slot], |acc, a| acc * a.at(slot))
        })
        .collect();
    pairwise_sum(&terms)
}

/// `T_K^sigma f = sum_R K(R) 1_R int_R f dsigma`.
pub fn apply_positive<S: Scalar>(
    kernel: &Kernel<S>,
    sigma: &Weight<S>,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>> {
    sigma.check_config(kernel.layout().config())?;
    sigma.check_config(f.config())?;
    let values = positive_values(kernel.field(), sigma, f.values());
    Ok(GridFunction::new_unchecked(f.config(), values))
}

fn positive_values<S: Scalar>(kernel: &RectField<S>, sigma: &Weight<S>, f: &[S]) -> Vec<S> {
    rect_integrals(sigma, f)
        .zip_map(kernel, |a, k| a * k)
        .push_down()
}

/// One shifted grid: boxes of its cubes inside the domain and their
/// kernel values.
#[derive(Clone, Debug)]
struct ShiftedFamily<S> {
    shift: Vec<Shift>,
    boxes: Vec<CellBox>,
    coef: Vec<S>,
}

impl<S: Scalar> ShiftedFamily<S> {
    fn new(mu: &Weight<S>, shift: Vec<Shift>, power: S) -> Result<Self> {
        let config = mu.config();
        let fam = RectFamily::new(config, shift.clone())?;
        let prefix = CellPrefix::new(config, mu.cell_masses());
        let boxes: Vec<CellBox> = fam.iter().map(|r| cell_box(config, &r, 0)).collect();
        let coef = boxes
            .par_iter()
            .map(|b| mass_power(prefix.sum(b), power))
            .collect();
        Ok(Self { shift, boxes, coef })
    }

    fn apply(&self, config: &GridConfig, fm: &CellPrefix<S>) -> Vec<S> {
        let ints: Vec<S> = self.boxes.par_iter().map(|b| fm.sum(b)).collect();
        let terms: Vec<(&CellBox, S)> = self
            .boxes
            .iter()
            .zip(&self.coef)
            .zip(ints)
            .map(|((b, &c), a)| (b, c * a))
            .collect();
        spread(config, &terms)
    }
}

fn mass_power<S: Scalar>(m: S, power: S) -> S {
    if m > S::zero() {
        m.powf(power)
    } else {
        S::zero()
    }
}

#[derive(Clone, Debug)]
enum Body<S> {
    Tree,
    Shifted(ShiftedFamily<S>),
    ShiftedSum(Vec<ShiftedFamily<S>>),
    Perez(Vec<CellBox>),
    Kernel(KernelMatrix<S>),
}

/// A fractional integral `mu(.)^(alpha/N - 1)` in one of its forms,
/// prepared for repeated application.
#[derive(Clone, Debug)]
pub struct FracOperator<'a, S> {
    mu: &'a Weight<S>,
    alpha: f64,
    form: OperatorForm,
    kernel: Kernel<S>,
    body: Body<S>,
}

impl<'a, S: Scalar> FracOperator<'a, S> {
    pub fn new(mu: &'a Weight<S>, alpha: f64, form: OperatorForm) -> Result<Self> {
        check_alpha(alpha, mu.config())?;
        let kernel = Kernel::fractional(mu, alpha);
        let power = S::from_f64_lossy(alpha / mu.config().total_dim() as f64 - 1.0);
        let config = mu.config();
        let body = match form {
            OperatorForm::Dyadic => Body::Tree,
            OperatorForm::Perez => {
                let layout = mu.layout();
                Body::Perez(
                    (0..layout.len())
                        .map(|s| cell_box(config, &layout.rect(s), 1))
                        .collect(),
                )
            }
            OperatorForm::Kernel => Body::Kernel(KernelMatrix::new(mu, alpha)?),
            OperatorForm::ShiftedSum => Body::ShiftedSum(
                Shift::all_vectors(config.total_dim())
                    .into_iter()
                    .skip(1)
                    .map(|t| ShiftedFamily::new(mu, t, power))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self {
            mu,
            alpha,
            form,
            kernel,
            body,
        })
    }

    /// The dyadic form over a single shifted grid.
    pub fn shifted(mu: &'a Weight<S>, alpha: f64, shift: &[Shift]) -> Result<Self> {
        check_alpha(alpha, mu.config())?;
        let kernel = Kernel::fractional(mu, alpha);
        let body = if shift.iter().all(|&s| s == Shift::Zero) {
            if shift.len() != mu.config().total_dim() {
                return Err(Error::DimensionMismatch {
                    expected: mu.config().total_dim(),
                    got: shift.len(),
                });
            }
            Body::Tree
        } else {
            let power = S::from_f64_lossy(alpha / mu.config().total_dim() as f64 - 1.0);
            Body::Shifted(ShiftedFamily::new(mu, shift.to_vec(), power)?)
        };
        Ok(Self {
            mu,
            alpha,
            form: OperatorForm::Dyadic,
            kernel,
            body,
        })
    }

    pub fn weight(&self) -> &'a Weight<S> {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn form(&self) -> OperatorForm {
        self.form
    }

    /// The shift of a single-grid operator, zero for the other forms.
    pub fn shift(&self) -> Vec<Shift> {
        match &self.body {
            Body::Shifted(fam) => fam.shift.clone(),
            _ => vec![Shift::Zero; self.mu.config().total_dim()],
        }
    }

    fn config(&self) -> &GridConfig {
        self.mu.config()
    }

    fn fm(&self, f: &[S]) -> Vec<S> {
        f.iter()
            .zip(self.mu.cell_masses())
            .map(|(&a, &m)| a * m)
            .collect()
    }

    /// `Tf` on finest cells.
    pub fn apply(&self, f: &[S]) -> Vec<S> {
        self.apply_counted(f).0
    }

    fn apply_counted(&self, f: &[S]) -> (Vec<S>, usize) {
        let config = self.config();
        match &self.body {
            Body::Tree => (positive_values(self.kernel.field(), self.mu, f), 0),
            Body::Shifted(fam) => (fam.apply(config, &CellPrefix::new(config, &self.fm(f))), 0),
            Body::ShiftedSum(fams) => {
                let mut out = positive_values(self.kernel.field(), self.mu, f);
                let prefix = CellPrefix::new(config, &self.fm(f));
                for fam in fams {
                    for (o, v) in out.iter_mut().zip(fam.apply(config, &prefix)) {
                        *o = *o + v;
                    }
                }
                (out, 0)
            }
            Body::Perez(triples) => {
                let prefix = CellPrefix::new(config, &self.fm(f));
                let ints: Vec<S> = triples.par_iter().map(|b| prefix.sum(b)).collect();
                let masses = self.mu.masses().values();
                let mut skipped = 0;
                let coef: Vec<S> = ints
                    .iter()
                    .zip(self.kernel.values())
                    .zip(masses)
                    .map(|((&a, &k), &m)| {
                        if m <= S::zero() && a > S::zero() {
                            skipped += 1;
                        }
                        a * k
                    })
                    .collect();
                (
                    RectField::from_vec(self.mu.layout(), coef).push_down(),
                    skipped,
                )
            }
            Body::Kernel(matrix) => matrix.apply(f),
        }
    }

    /// `T^*g`, the adjoint with respect to `<f, g> = int f g dmu`.
    pub fn apply_adjoint(&self, g: &[S]) -> Vec<S> {
        match &self.body {
            Body::Perez(triples) => {
                let a = rect_integrals(self.mu, g);
                let terms: Vec<(&CellBox, S)> = triples
                    .iter()
                    .zip(self.kernel.values())
                    .zip(a.values())
                    .map(|((b, &k), &x)| (b, k * x))
                    .collect();
                spread(self.config(), &terms)
            }
            _ => self.apply(g),
        }
    }

    /// `Tf` with diagnostics, validated.
    pub fn apply_fn(&self, f: &GridFunction<S>) -> Result<Applied<S>> {
        self.mu.check_config(f.config())?;
        check_len(self.config(), f.values())?;
        let (values, skipped) = self.apply_counted(f.values());
        let excluded = match &self.body {
            Body::Kernel(m) => m.excluded_pairs(),
            _ => 0,
        };
        Ok(Applied {
            output: GridFunction::new_unchecked(f.config(), values),
            diagnostics: Diagnostics {
                skipped_terms: skipped,
                excluded_pairs: excluded,
                truncation_depth: self.config().depth(),
            },
        })
    }

    /// `<Tf, g>_mu`.
    pub fn bilinear(&self, f: &[S], g: &[S]) -> S {
        self.mu.inner(&self.apply(f), g)
    }
}

/// `T_alpha^{mu,tau} f`: the dyadic fractional integral over one shifted grid.
pub fn apply_frac_dyadic<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    f: &GridFunction<S>,
    shift: &[Shift],
) -> Result<Applied<S>> {
    FracOperator::shifted(mu, alpha, shift)?.apply_fn(f)
}

/// Pérez form `sum_R mu(R)^(alpha/N-1) 1_R int_{3R ∩ [0,1)^N} f dmu`.
pub fn apply_perez<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    f: &GridFunction<S>,
) -> Result<Applied<S>> {
    FracOperator::new(mu, alpha, OperatorForm::Perez)?.apply_fn(f)
}

/// `sum_tau T_alpha^{mu,tau} f` over all `3^N` shifts.
pub fn apply_shifted_sum<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    f: &GridFunction<S>,
) -> Result<Applied<S>> {
    FracOperator::new(mu, alpha, OperatorForm::ShiftedSum)?.apply_fn(f)
}

/// Pointwise domination constant of the Pérez form by the shifted sum.
#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    /// `max_x perez(x) / shifted_sum(x)`; infinite when the sum vanishes
    /// under a positive numerator.
    #[serde(serialize_with = "ser_inf")]
    pub value: f64,
    /// Finest cell attaining the maximum.
    pub witness_cell: Option<usize>,
    /// Cells where both sides vanish.
    pub skipped_cells: usize,
}

fn ser_inf<Ser: serde::Serializer>(x: &f64, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    crate::conditions::number_json(*x).serialize(s)
}

pub fn shift_bound_ratio<S: Scalar>(
    mu: &Weight<S>,
    alpha: f64,
    f: &GridFunction<S>,
) -> Result<DominationReport> {
    let num = apply_perez(mu, alpha, f)?.output;
    let den = apply_shifted_sum(mu, alpha, f)?.output;
    let mut best: Option<(f64, usize)> = None;
    let mut skipped = 0;
    for (i, (&a, &b)) in num.values().iter().zip(den.values()).enumerate() {
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        let r = if b > 0.0 {
            a / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            skipped += 1;
            continue;
        };
        if best.is_none_or(|x| r > x.0) {
            best = Some((r, i));
        }
    }
    Ok(DominationReport {
        value: best.map_or(0.0, |b| b.0),
        witness_cell: best.map(|b| b.1),
        skipped_cells: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ProductRect;
    use crate::measures::{cell_index, gen_cascade, gen_uniform};

    fn uniform(dims: Vec<usize>, k: u32) -> Weight<f64> {
        gen_uniform(&GridConfig::new(dims, k).unwrap()).unwrap()
    }

    #[test]
    fn mlinear_trivial_cases() {
        let w = uniform(vec![1, 1], 2);
        let one = GridFunction::constant(w.config(), 1.0);
        let zero = Kernel::zero(w.layout());
        assert_eq!(mlinear_form(&zero, &[&w, &w], &[&one, &one]).unwrap(), 0.0);
        let top = Kernel::indicator(w.layout(), &ProductRect::top(w.config())).unwrap();
        let v = mlinear_form(&top, &[&w, &w], &[&one, &one]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn positive_operator_top_kernel() {
        let w = uniform(vec![1], 3);
        let top = Kernel::indicator(w.layout(), &ProductRect::top(w.config())).unwrap();
        let one = GridFunction::constant(w.config(), 1.0);
        let t = apply_positive(&top, &w, &one).unwrap();
        assert!(t.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn duality_identity() {
        let cfg = GridConfig::new(vec![1, 1], 3).unwrap();
        let s: Weight<f64> = gen_cascade(&cfg, 2.0, 1).unwrap();
        let o: Weight<f64> = gen_cascade(&cfg, 3.0, 2).unwrap();
        let k = Kernel::random(s.layout(), 9);
        let f = GridFunction::new(
            &cfg,
            (0..cfg.cell_count()).map(|i| (i % 7) as f64).collect(),
        )
        .unwrap();
        let g = GridFunction::new(
            &cfg,
            (0..cfg.cell_count())
                .map(|i| (i % 5) as f64 + 0.5)
                .collect(),
        )
        .unwrap();
        let tf = apply_positive(&k, &s, &f).unwrap();
        let lhs = o.inner(tf.values(), g.values());
        let rhs = mlinear_form(&k, &[&s, &o], &[&f, &g]).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn frac_dyadic_uniform_series() {
        let w = uniform(vec![1], 5);
        let one = GridFunction::constant(w.config(), 1.0);
        let out = apply_frac_dyadic(&w, 0.5, &one, &[Shift::Zero]).unwrap();
        let want: f64 = (0..=5).map(|k| 2f64.powf(-k as f64 / 2.0)).sum();
        for &v in out.output.values() {
            assert!((v - want).abs() < 1e-12);
        }
        let two = GridFunction::constant(w.config(), 2.0);
        let out2 = apply_frac_dyadic(&w, 0.5, &two, &[Shift::Zero]).unwrap();
        for (a, b) in out.output.values().iter().zip(out2.output.values()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn shifted_family_matches_direct_sum() {
        let cfg = GridConfig::new(vec![1, 1], 2).unwrap();
        let w: Weight<f64> = gen_cascade(&cfg, 2.0, 4).unwrap();
        let f = GridFunction::new(
            &cfg,
            (0..cfg.cell_count())
                .map(|i| ((i * 7) % 11) as f64)
                .collect(),
        )
        .unwrap();
        let shift = vec![Shift::Minus, Shift::Plus];
        let got = apply_frac_dyadic(&w, 0.7, &f, &shift).unwrap().output;
        let fam = RectFamily::new(&cfg, shift).unwrap();
        let fw = w.integrator(&f).unwrap();
        for i in 0..cfg.cell_count() {
            let c = cfg.cell_center(&cell_index(&cfg, i));
            let want: f64 = fam
                .iter()
                .filter(|r| r.contains(&c))
                .map(|r| {
                    let m = w.mass(&r).unwrap();
                    m.powf(0.7 / 2.0 - 1.0) * fw.mass_rect(&r).unwrap()
                })
                .sum();
            assert!((got.values()[i] - want).abs() <= 1e-12 * want, "{i}");
        }
    }

    #[test]
    fn perez_dominates_dyadic_and_matches_closed_form() {
        let w = uniform(vec![1], 4);
        let one = GridFunction::constant(w.config(), 1.0);
        let d = apply_frac_dyadic(&w, 0.5, &one, &[Shift::Zero])
            .unwrap()
            .output;
        let p = apply_perez(&w, 0.5, &one).unwrap().output;
        let cfg = w.config();
        for i in 0..cfg.cell_count() {
            assert!(p.values()[i] >= d.values()[i]);
            let x = (i as f64 + 0.5) / cfg.cells_per_axis() as f64;
            let want: f64 = (0..=4)
                .map(|k| {
                    let side = 2f64.powi(-k);
                    let m = (x / side).floor();
                    let lo = ((m - 1.0) * side).max(0.0);
                    let hi = ((m + 2.0) * side).min(1.0);
                    side.powf(-0.5) * (hi - lo)
                })
                .sum();
            assert!((p.values()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoints_are_adjoint() {
        let cfg = GridConfig::new(vec![1, 1], 3).unwrap();
        let w: Weight<f64> = gen_cascade(&cfg, 2.0, 3).unwrap();
        let f: Vec<f64> = (0..cfg.cell_count())
            .map(|i| ((i * 3) % 13) as f64)
            .collect();
        let g: Vec<f64> = (0..cfg.cell_count())
            .map(|i| ((i * 5) % 7) as f64 + 1.0)
            .collect();
        for form in OperatorForm::ALL {
            let t = FracOperator::new(&w, 0.8, form).unwrap();
            let lhs = w.inner(&t.apply(&f), &g);
            let rhs = w.inner(&f, &t.apply_adjoint(&g));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs, "{form}");
        }
    }

    #[test]
    fn shift_domination_is_finite() {
        let w = uniform(vec![1], 4);
        let one = GridFunction::constant(w.config(), 1.0);
        let r = shift_bound_ratio(&w, 0.5, &one).unwrap();
        assert!(r.value.is_finite() && r.value > 0.0);
        let zero = GridFunction::constant(w.config(), 0.0);
        assert_eq!(shift_bound_ratio(&w, 0.5, &zero).unwrap().value, 0.0);
    }

    #[test]
    fn bad_alpha_rejected() {
        let w = uniform(vec![1], 2);
        assert!(FracOperator::new(&w, 1.5, OperatorForm::Dyadic).is_err());
        assert_eq!(
            "shifted-sum".parse::<OperatorForm>().unwrap(),
            OperatorForm::ShiftedSum
        );
    }
}
