//! Lower bounds for embedding and operator norms by multilinear power
//! iteration, and depth sweeps built on them.
//!
//! Every coordinate step maximizes a positive linear functional under an
//! `L^p` constraint exactly, so the recorded history never decreases. The
//! reported value is a certified lower bound, never a claim about the sup.

use std::ops::RangeInclusive;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conditions::{carleson_testing_constant, fp_constant, number_json};
use crate::dyadic::{GridConfig, ProductRect};
use crate::error::{Error, Result};
use crate::measures::{keyed_rng, GridFunction, RectField, Weight, WeightSpec};
use crate::operators::{
    check_carleson, conjugate, mlinear_from_integrals, rect_integrals, FracOperator, HlsExponents,
    Kernel, KernelSpec, MultilinearExponents, OperatorForm,
};
use crate::scalar::{pairwise_sum, Scalar};

/// Stopping rule of the ascent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    /// Stop once a sweep gains less than `tol` relative.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 200,
        }
    }
}

/// A lower bound on a norm with the functions attaining it.
#[derive(Clone, Debug)]
pub struct NormEstimate<S> {
    pub value: f64,
    pub maximizers: Vec<GridFunction<S>>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep; entry 0 is the starting point.
    pub history: Vec<f64>,
    pub seed: u64,
    /// Which start produced the reported run.
    pub start: String,
    pub params: Value,
}

impl<S: Scalar> NormEstimate<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "value": number_json(self.value),
            "sweeps": self.sweeps,
            "converged": self.converged,
            "history": self.history.iter().map(|&h| number_json(h)).collect::<Vec<_>>(),
            "seed": self.seed,
            "start": self.start,
            "params": self.params,
        })
    }

    fn zero(config: &GridConfig, count: usize, seed: u64, params: Value) -> Self {
        Self {
            value: 0.0,
            maximizers: vec![GridFunction::constant(config, S::zero()); count],
            sweeps: 0,
            converged: true,
            history: vec![0.0],
            seed,
            start: "constant".into(),
            params,
        }
    }
}

struct Run<S> {
    value: f64,
    fs: Vec<Vec<S>>,
    history: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

/// `f / ||f||_{L^p(sigma)}`, zero on null cells; `None` if the norm vanishes.
fn normalize<S: Scalar>(sigma: &Weight<S>, f: &[S], p: S) -> Option<Vec<S>> {
    let f: Vec<S> = f
        .iter()
        .zip(sigma.cell_masses())
        .map(|(&v, &m)| if m > S::zero() { v } else { S::zero() })
        .collect();
    let n = sigma.lp_norm_unchecked(&f, p);
    (n > S::zero() && n.is_finite()).then(|| f.iter().map(|&v| v / n).collect())
}

fn powered<S: Scalar>(g: &[S], e: S) -> Vec<S> {
    g.iter()
        .map(|&v| if v > S::zero() { v.powf(e) } else { S::zero() })
        .collect()
}

fn random_start<S: Scalar>(config: &GridConfig, seed: u64, stream: u64) -> Vec<S> {
    let mut rng = keyed_rng(seed, &[0x7374_6172, stream]);
    (0..config.cell_count())
        .map(|_| S::from_f64_lossy(0.5 + rng.random::<f64>()))
        .collect()
}

fn indicator_of<S: Scalar>(config: &GridConfig, rect: &ProductRect) -> Vec<S> {
    GridFunction::<S>::indicator(config, &rect.to_box()).into_values()
}

/// Record one sweep; returns true when the run should stop.
fn record(history: &mut Vec<f64>, value: f64, tol: f64) -> (bool, bool) {
    let last = *history.last().expect("history starts non-empty");
    if !(value >= last) {
        // a rounding-level drop: keep the previous iterate
        return (true, false);
    }
    history.push(value);
    let gain = value - last;
    (gain <= tol * value.abs(), true)
}

fn best_run<S>(runs: Vec<(String, Run<S>)>) -> (String, Run<S>) {
    let mut best: Option<(String, Run<S>)> = None;
    for (name, r) in runs {
        if best.as_ref().is_none_or(|b| r.value > b.1.value) {
            best = Some((name, r));
        }
    }
    best.expect("at least one start")
}

/// Least-constant lower bound for `Lambda(f_1..f_M) <= c prod ||f_k||_{p_k}`
/// with `Lambda = sum_R K(R) prod_k int_R f_k dsigma_k`.
///
/// Runs the ascent from `f_k = 1` (or `warm`), from the indicator of the
/// rectangle attaining the Fefferman-Phong constant, and from a seeded
/// random start; the best run is reported.
pub fn embed_norm_lower<S: Scalar>(
    kernel: &Kernel<S>,
    weights: &[&Weight<S>],
    exponents: &MultilinearExponents,
    seed: u64,
    opts: AscentOptions,
    warm: Option<&[GridFunction<S>]>,
) -> Result<NormEstimate<S>> {
    let fp = fp_constant(kernel, weights, exponents)?;
    let config = kernel.layout().config().clone();
    let params = json!({ "p": exponents.p, "tol": opts.tol, "max_sweeps": opts.max_sweeps });
    let m = weights.len();
    if kernel.is_zero() {
        return Ok(NormEstimate::zero(&config, m, seed, params));
    }
    let mut starts: Vec<(String, Vec<Vec<S>>)> = Vec::new();
    match warm {
        Some(w) => {
            if w.len() != m {
                return Err(Error::Parameter(format!(
                    "{} warm starts for {m} functions",
                    w.len()
                )));
            }
            for f in w {
                weights[0].check_config(f.config())?;
            }
            starts.push((
                "warm".into(),
                w.iter().map(|f| f.values().to_vec()).collect(),
            ));
        }
        None => starts.push((
            "constant".into(),
            vec![vec![S::one(); config.cell_count()]; m],
        )),
    }
    if let Some(wit) = &fp.witness {
        starts.push((
            "indicator".into(),
            vec![indicator_of(&config, &wit.rect); m],
        ));
    }
    starts.push((
        "random".into(),
        (0..m)
            .map(|k| random_start(&config, seed, k as u64))
            .collect(),
    ));
    let runs = starts
        .into_iter()
        .filter_map(|(name, s)| embed_run(kernel, weights, exponents, s, opts).map(|r| (name, r)))
        .collect::<Vec<_>>();
    if runs.is_empty() {
        return Ok(NormEstimate::zero(&config, m, seed, params));
    }
    let (start, run) = best_run(runs);
    Ok(NormEstimate {
        value: run.value,
        maximizers: run
            .fs
            .into_iter()
            .map(|f| GridFunction::new_unchecked(&config, f))
            .collect(),
        sweeps: run.sweeps,
        converged: run.converged,
        history: run.history,
        seed,
        start,
        params,
    })
}

fn embed_run<S: Scalar>(
    kernel: &Kernel<S>,
    weights: &[&Weight<S>],
    exponents: &MultilinearExponents,
    start: Vec<Vec<S>>,
    opts: AscentOptions,
) -> Option<Run<S>> {
    let ps: Vec<S> = exponents.p.iter().map(|&p| S::from_f64_lossy(p)).collect();
    let duals: Vec<S> = exponents
        .p
        .iter()
        .map(|&p| S::from_f64_lossy(conjugate(p) - 1.0))
        .collect();
    let mut fs: Vec<Vec<S>> = start
        .iter()
        .zip(weights)
        .zip(&ps)
        .map(|((f, w), &p)| normalize(w, f, p))
        .collect::<Option<_>>()?;
    let mut ints: Vec<RectField<S>> = weights
        .iter()
        .zip(&fs)
        .map(|(w, f)| rect_integrals(w, f))
        .collect();
    let mut history = vec![mlinear_from_integrals(kernel, &ints).to_f64_lossy()];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let mut next_fs = fs.clone();
        let mut next_ints = ints.clone();
        let mut degenerate = false;
        for j in 0..weights.len() {
            let coef = RectField::from_fn(kernel.layout(), |slot| {
                (0..weights.len())
                    .filter(|&k| k != j)
                    .fold(kernel.values()[slot], |acc, k| acc * next_ints[k].at(slot))
            });
            let g = coef.push_down();
            match normalize(weights[j], &powered(&g, duals[j]), ps[j]) {
                Some(f) => {
                    next_ints[j] = rect_integrals(weights[j], &f);
                    next_fs[j] = f;
                }
                None => degenerate = true,
            }
        }
        let value = mlinear_from_integrals(kernel, &next_ints).to_f64_lossy();
        let (stop, accepted) = record(&mut history, value, opts.tol);
        if accepted {
            fs = next_fs;
            ints = next_ints;
            sweeps += 1;
        }
        if stop || degenerate {
            converged = true;
            break;
        }
    }
    Some(Run {
        value: *history.last().expect("non-empty"),
        fs,
        history,
        sweeps,
        converged,
    })
}

/// Lower bound for `||T||_{L^p(mu) -> L^q(mu)}` of a fractional integral in
/// the chosen form, by alternating maximization of `<Tf, g>_mu` over
/// `||f||_p = ||g||_{q'} = 1`.
pub fn operator_norm_lower<S: Scalar>(
    mu: &Weight<S>,
    exponents: &HlsExponents,
    form: OperatorForm,
    seed: u64,
    opts: AscentOptions,
    warm: Option<&GridFunction<S>>,
) -> Result<NormEstimate<S>> {
    if exponents.total_dim != mu.config().total_dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.config().total_dim(),
            got: exponents.total_dim,
        });
    }
    let op = FracOperator::new(mu, exponents.alpha, form)?;
    bilinear_norm_lower(&op, exponents.p, exponents.q, seed, opts, warm)
}

/// Same ascent for an already prepared operator.
pub fn bilinear_norm_lower<S: Scalar>(
    op: &FracOperator<'_, S>,
    p: f64,
    q: f64,
    seed: u64,
    opts: AscentOptions,
    warm: Option<&GridFunction<S>>,
) -> Result<NormEstimate<S>> {
    let mu = op.weight();
    let config = mu.config().clone();
    let params = json!({
        "alpha": op.alpha(), "p": p, "q": q, "form": op.form().name(),
        "tol": opts.tol, "max_sweeps": opts.max_sweeps,
    });
    let mut starts: Vec<(String, Vec<S>)> = Vec::new();
    match warm {
        Some(f) => {
            mu.check_config(f.config())?;
            starts.push(("warm".into(), f.values().to_vec()));
        }
        None => starts.push(("constant".into(), vec![S::one(); config.cell_count()])),
    }
    starts.push(("random".into(), random_start(&config, seed, 0)));
    let runs: Vec<(String, Run<S>)> = starts
        .into_iter()
        .filter_map(|(name, f)| operator_run(op, p, q, f, opts).map(|r| (name, r)))
        .collect();
    if runs.is_empty() {
        return Ok(NormEstimate::zero(&config, 2, seed, params));
    }
    let (start, run) = best_run(runs);
    Ok(NormEstimate {
        value: run.value,
        maximizers: run
            .fs
            .into_iter()
            .map(|f| GridFunction::new_unchecked(&config, f))
            .collect(),
        sweeps: run.sweeps,
        converged: run.converged,
        history: run.history,
        seed,
        start,
        params,
    })
}

fn operator_run<S: Scalar>(
    op: &FracOperator<'_, S>,
    p: f64,
    q: f64,
    start: Vec<S>,
    opts: AscentOptions,
) -> Option<Run<S>> {
    let mu = op.weight();
    let (ps, qd) = (S::from_f64_lossy(p), S::from_f64_lossy(conjugate(q)));
    let (ep, eq) = (
        S::from_f64_lossy(conjugate(p) - 1.0),
        S::from_f64_lossy(q - 1.0),
    );
    let step_g = |f: &[S]| -> Option<(Vec<S>, f64)> {
        let tf = op.apply(f);
        let g = normalize(mu, &powered(&tf, eq), qd)?;
        let v = mu.inner(&tf, &g).to_f64_lossy();
        Some((g, v))
    };
    let mut f = normalize(mu, &start, ps)?;
    let (mut g, v0) = step_g(&f)?;
    let mut history = vec![v0];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let Some(nf) = normalize(mu, &powered(&op.apply_adjoint(&g), ep), ps) else {
            converged = true;
            break;
        };
        let Some((ng, value)) = step_g(&nf) else {
            converged = true;
            break;
        };
        let (stop, accepted) = record(&mut history, value, opts.tol);
        if accepted {
            f = nf;
            g = ng;
            sweeps += 1;
        }
        if stop {
            converged = true;
            break;
        }
    }
    Some(Run {
        value: *history.last().expect("non-empty"),
        fs: vec![f, g],
        history,
        sweeps,
        converged,
    })
}

/// Lower bound for the least `c` with
/// `sum_R sigma(R)^(q/p) (avg_R f)^q <= c ||f||_{L^p(sigma)}^q`.
pub fn carleson_norm_lower<S: Scalar>(
    sigma: &Weight<S>,
    p: f64,
    q: f64,
    seed: u64,
    opts: AscentOptions,
    warm: Option<&GridFunction<S>>,
) -> Result<NormEstimate<S>> {
    check_carleson(p, q)?;
    let config = sigma.config().clone();
    let testing = carleson_testing_constant(sigma, p, q)?;
    let params = json!({ "p": p, "q": q, "tol": opts.tol, "max_sweeps": opts.max_sweeps });
    let mut starts: Vec<(String, Vec<S>)> = Vec::new();
    match warm {
        Some(f) => {
            sigma.check_config(f.config())?;
            starts.push(("warm".into(), f.values().to_vec()));
        }
        None => starts.push(("constant".into(), vec![S::one(); config.cell_count()])),
    }
    if let Some(wit) = &testing.witness {
        starts.push(("indicator".into(), indicator_of(&config, &wit.rect)));
    }
    starts.push(("random".into(), random_start(&config, seed, 0)));
    let runs: Vec<(String, Run<S>)> = starts
        .into_iter()
        .filter_map(|(name, f)| carleson_run(sigma, p, q, f, opts).map(|r| (name, r)))
        .collect();
    let (start, run) = best_run(runs);
    Ok(NormEstimate {
        value: run.value,
        maximizers: run
            .fs
            .into_iter()
            .map(|f| GridFunction::new_unchecked(&config, f))
            .collect(),
        sweeps: run.sweeps,
        converged: run.converged,
        history: run.history,
        seed,
        start,
        params,
    })
}

/// `w_R = sigma(R)^(q/p - q)`, zero on null rectangles.
fn carleson_weights<S: Scalar>(sigma: &Weight<S>, p: f64, q: f64) -> RectField<S> {
    let e = S::from_f64_lossy(q / p - q);
    sigma
        .masses()
        .map(|m| if m > S::zero() { m.powf(e) } else { S::zero() })
}

fn carleson_value<S: Scalar>(w: &RectField<S>, ints: &RectField<S>, q: S) -> S {
    let terms: Vec<S> = w
        .values()
        .iter()
        .zip(ints.values())
        .map(|(&a, &i)| a * i.powf(q))
        .collect();
    pairwise_sum(&terms)
}

fn carleson_run<S: Scalar>(
    sigma: &Weight<S>,
    p: f64,
    q: f64,
    start: Vec<S>,
    opts: AscentOptions,
) -> Option<Run<S>> {
    let w = carleson_weights(sigma, p, q);
    let (ps, qs) = (S::from_f64_lossy(p), S::from_f64_lossy(q));
    let ep = S::from_f64_lossy(conjugate(p) - 1.0);
    let qm1 = S::from_f64_lossy(q - 1.0);
    let mut f = normalize(sigma, &start, ps)?;
    let mut ints = rect_integrals(sigma, &f);
    let mut history = vec![carleson_value(&w, &ints, qs).to_f64_lossy()];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let g = ints.zip_map(&w, |i, a| a * i.powf(qm1)).push_down();
        let Some(nf) = normalize(sigma, &powered(&g, ep), ps) else {
            converged = true;
            break;
        };
        let nints = rect_integrals(sigma, &nf);
        let value = carleson_value(&w, &nints, qs).to_f64_lossy();
        let (stop, accepted) = record(&mut history, value, opts.tol);
        if accepted {
            f = nf;
            ints = nints;
            sweeps += 1;
        }
        if stop {
            converged = true;
            break;
        }
    }
    Some(Run {
        value: *history.last().expect("non-empty"),
        fs: vec![f],
        history,
        sweeps,
        converged,
    })
}

/// What a depth sweep measures at each depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum SweepTask {
    /// `c2` = Fefferman-Phong constant, `c1_hat` = embedding lower bound.
    Embed {
        kernel: KernelSpec,
        weights: Vec<WeightSpec>,
        p: Vec<f64>,
    },
    /// `c2` = Fefferman-Phong constant of the fractional kernel with
    /// exponents `(p, q')`, `c1_hat` = operator norm lower bound.
    Hls {
        weight: WeightSpec,
        alpha: f64,
        p: f64,
        form: OperatorForm,
    },
    /// `c2` = testing constant, `c1_hat` = Carleson lower bound.
    Carleson { weight: WeightSpec, p: f64, q: f64 },
}

/// One depth of a sweep. CSV column order: `K, c2, c1_hat, ratio, seconds`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub depth: u32,
    pub c2: f64,
    pub c1_hat: f64,
    pub ratio: f64,
    pub seconds: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str = "K,c2,c1_hat,ratio,seconds";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{}",
            self.depth,
            self.c2,
            self.c1_hat,
            self.ratio,
            self.seconds.map(|s| format!("{s:.6}")).unwrap_or_default()
        )
    }
}

/// Run `task` at every depth of `depths`, warm-starting each depth from
/// the upsampled maximizers of the previous one.
pub fn depth_sweep<S: Scalar>(
    task: &SweepTask,
    dims: &[usize],
    depths: RangeInclusive<u32>,
    seed: u64,
    opts: AscentOptions,
    timing: bool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut warm: Option<Vec<GridFunction<S>>> = None;
    for k in depths {
        let clock = Instant::now();
        let config = GridConfig::new(dims.to_vec(), k)?;
        let up = |w: &Option<Vec<GridFunction<S>>>| -> Result<Option<Vec<GridFunction<S>>>> {
            w.as_ref()
                .filter(|fs| fs.iter().all(|f| f.config().depth() + 1 == k))
                .map(|fs| fs.iter().map(|f| f.upsample()).collect())
                .transpose()
        };
        let start = up(&warm)?;
        let (c2, est) = match task {
            SweepTask::Embed { kernel, weights, p } => {
                let ws: Vec<Weight<S>> = weights
                    .iter()
                    .map(|s| s.build(&config))
                    .collect::<Result<_>>()?;
                let refs: Vec<&Weight<S>> = ws.iter().collect();
                let kern = kernel.build(&refs)?;
                let ex = MultilinearExponents::new(p.clone())?;
                let c2 = fp_constant(&kern, &refs, &ex)?.value;
                let est = embed_norm_lower(&kern, &refs, &ex, seed, opts, start.as_deref())?;
                (c2, est)
            }
            SweepTask::Hls {
                weight,
                alpha,
                p,
                form,
            } => {
                let mu: Weight<S> = weight.build(&config)?;
                let ex = HlsExponents::from_alpha_p(*alpha, *p, config.total_dim())?;
                let kern = Kernel::fractional(&mu, *alpha);
                let c2 = fp_constant(&kern, &[&mu, &mu], &ex.bilinear())?.value;
                let warm_f = start.as_ref().map(|fs| &fs[0]);
                let est = operator_norm_lower(&mu, &ex, *form, seed, opts, warm_f)?;
                (c2, est)
            }
            SweepTask::Carleson { weight, p, q } => {
                let sigma: Weight<S> = weight.build(&config)?;
                let c2 = carleson_testing_constant(&sigma, *p, *q)?.value;
                let warm_f = start.as_ref().map(|fs| &fs[0]);
                let est = carleson_norm_lower(&sigma, *p, *q, seed, opts, warm_f)?;
                (c2, est)
            }
        };
        let ratio = if c2 > 0.0 { est.value / c2 } else { f64::NAN };
        rows.push(SweepRow {
            depth: k,
            c2,
            c1_hat: est.value,
            ratio,
            seconds: timing.then(|| clock.elapsed().as_secs_f64()),
        });
        warm = Some(est.maximizers);
    }
    Ok(rows)
}
