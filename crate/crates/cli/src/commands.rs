//! One function per subcommand.

use std::ops::RangeInclusive;

use anyhow::{bail, Context};
use prodyadic::conditions::{
    condition_d_constant, doubling_scan, fp_constant, implication_margins, ConstantReport,
};
use prodyadic::dyadic::{shift_cover as construct_cover, DyadicCube, GridConfig};
use prodyadic::estimators::{depth_sweep, AscentOptions, SweepRow, SweepTask, SWEEP_CSV_HEADER};
use prodyadic::measures::{gen_cascade, gen_power, gen_uniform, WeightSpec};
use prodyadic::operators::{
    kernel_equivalence, HlsExponents, KernelSpec, MultilinearExponents, OperatorForm,
};
use prodyadic::oracle::shift_cover_exhaustive;
use prodyadic::Weight64;
use serde_json::{json, Value};

use crate::report::{input_files, num, start, Check, Report};
use crate::{parse_forms, parse_range, parse_weight, Common, KernelKind, Kind, SweepArgs};

const MARGIN_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-9;

/// Largest cube count `shift-cover` will enumerate.
const MAX_COVER_CUBES: u64 = 1 << 24;

fn kernel_spec(kind: KernelKind, alpha: f64, beta: f64, seed: u64) -> KernelSpec {
    match kind {
        KernelKind::Fractional => KernelSpec::Fractional { alpha },
        KernelKind::Random => KernelSpec::Random { seed, beta },
        KernelKind::Zero => KernelSpec::Zero,
    }
}

/// Dims and native depth implied by the weights: taken from the first
/// stored file, else from `--dims` (default one factor of dimension 1).
fn layout_of(
    specs: &[WeightSpec],
    dims: Option<Vec<usize>>,
) -> anyhow::Result<(Vec<usize>, Option<u32>)> {
    for s in specs {
        if let WeightSpec::File { path } = s {
            let w = Weight64::load(path).with_context(|| format!("loading {path}"))?;
            let file_dims = w.config().dims().to_vec();
            if let Some(d) = &dims {
                if *d != file_dims {
                    bail!("--dims {d:?} disagrees with {path} (dims {file_dims:?})");
                }
            }
            return Ok((file_dims, Some(w.config().depth())));
        }
    }
    Ok((dims.unwrap_or_else(|| vec![1]), None))
}

fn depth_range(
    sweep: &SweepArgs,
    native: Option<u32>,
    default: Option<RangeInclusive<u32>>,
) -> anyhow::Result<RangeInclusive<u32>> {
    if let Some(r) = &sweep.depths {
        return parse_range(r);
    }
    if let Some(k) = sweep.depth.or(native) {
        return Ok(k..=k);
    }
    default.context("--depth or --depths is required for generated weights")
}

fn single_depth(depth: Option<u32>, native: Option<u32>) -> anyhow::Result<u32> {
    depth
        .or(native)
        .context("--depth is required for generated weights")
}

fn opts(sweep: &SweepArgs) -> AscentOptions {
    AscentOptions {
        tol: sweep.tol,
        max_sweeps: sweep.max_sweeps,
    }
}

fn rows_json(rows: &[SweepRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "K": r.depth,
                    "c2": r.c2,
                    "c1_hat": r.c1_hat,
                    "ratio": r.ratio,
                    "seconds": r.seconds,
                })
            })
            .collect(),
    )
}

fn rows_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// `c1_hat >= c2` at every depth.
fn lower_bound_checks(label: &str, rows: &[SweepRow]) -> Vec<Check> {
    rows.iter()
        .map(|r| {
            Check::new(
                format!("{label}c1_hat>=c2@K={}", r.depth),
                r.c1_hat >= r.c2 * (1.0 - RATIO_TOL),
                format!("c1_hat = {}, c2 = {}", r.c1_hat, r.c2),
            )
        })
        .collect()
}

pub fn gen_weight(
    kind: Kind,
    dims: Vec<usize>,
    depth: u32,
    rho: f64,
    exponents: Vec<f64>,
    center: Vec<f64>,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    let config = GridConfig::new(dims.clone(), depth)?;
    let (w, params): (Weight64, Value) = match kind {
        Kind::Uniform => (gen_uniform(&config)?, json!({ "kind": "uniform" })),
        Kind::Cascade => (
            gen_cascade(&config, rho, common.seed)?,
            json!({ "kind": "cascade", "rho": rho }),
        ),
        Kind::Power => {
            let axes = config.total_dim();
            let exponents = if exponents.is_empty() {
                vec![0.0; axes]
            } else {
                exponents
            };
            let center = if center.is_empty() {
                vec![0.5; axes]
            } else {
                center
            };
            (
                gen_power(&config, &exponents, &center)?,
                json!({ "kind": "power", "exponents": exponents, "center": center }),
            )
        }
    };
    let mut text = serde_json::to_string_pretty(&w.to_file())?;
    text.push('\n');
    let mut params = params;
    params["dims"] = json!(dims);
    params["depth"] = json!(depth);
    Report {
        subcommand: "gen-weight",
        params,
        result: Value::Null,
        csv: None,
        checks: Vec::new(),
        inputs: Vec::new(),
    }
    .write(common, text.as_bytes())
}

pub fn check_weight(weight: &str, eps: &[f64], common: &Common) -> anyhow::Result<bool> {
    start(common)?;
    let spec = parse_weight(weight)?;
    let w: Weight64 = match &spec {
        WeightSpec::File { path } => {
            Weight64::load(path).with_context(|| format!("loading {path}"))?
        }
        _ => bail!("check-weight needs a weight file"),
    };
    let dims = w.config().dims().to_vec();
    let scan = doubling_scan(&w);
    let margins = implication_margins(&scan, &dims);
    let cond_d: Vec<ConstantReport> = eps
        .iter()
        .map(|&e| condition_d_constant(&w, e))
        .collect::<Result<_, _>>()?;

    let mut checks = vec![Check::new(
        "doubling-finite",
        !scan.doubling.is_infinite(),
        format!("delta = {}", scan.doubling.value),
    )];
    for (j, m) in margins.forward.iter().enumerate() {
        checks.push(Check::new(
            format!("reverse-from-doubling[{}]", j + 1),
            *m >= -MARGIN_TOL,
            format!("relative margin {m:e}"),
        ));
    }
    if let Some(m) = margins.converse {
        checks.push(Check::new(
            "doubling-from-reverse",
            m >= -MARGIN_TOL,
            format!("relative margin {m:e}"),
        ));
    }
    for (e, r) in eps.iter().zip(&cond_d) {
        if let Some(t) = r.tail_bound {
            checks.push(Check::new(
                format!("condition-d-tail[eps={e}]"),
                r.value <= t * (1.0 + MARGIN_TOL),
                format!("C = {}, bound = {t}", r.value),
            ));
        }
    }

    let mut csv = String::from("quantity,param,value\n");
    csv.push_str(&format!("doubling,,{}\n", num(scan.doubling.value)));
    csv.push_str(&format!("reverse_doubling,,{}\n", num(scan.reverse.value)));
    for (j, (d, g)) in scan
        .doubling
        .per_factor
        .iter()
        .zip(&scan.reverse.per_factor)
        .enumerate()
    {
        csv.push_str(&format!("doubling_factor,{},{}\n", j + 1, num(*d)));
        csv.push_str(&format!("reverse_doubling_factor,{},{}\n", j + 1, num(*g)));
    }
    for (e, r) in eps.iter().zip(&cond_d) {
        csv.push_str(&format!("condition_d,{e},{}\n", num(r.value)));
        if let Some(t) = r.tail_bound {
            csv.push_str(&format!("condition_d_tail_bound,{e},{}\n", num(t)));
        }
    }
    for (j, m) in margins.forward.iter().enumerate() {
        csv.push_str(&format!("margin_forward,{},{}\n", j + 1, num(*m)));
    }
    if let Some(m) = margins.converse {
        csv.push_str(&format!("margin_converse,,{}\n", num(m)));
    }

    Report {
        subcommand: "check-weight",
        params: json!({ "weight": weight, "eps": eps }),
        result: json!({
            "dims": dims,
            "depth": w.config().depth(),
            "doubling": scan.doubling,
            "reverse_doubling": scan.reverse,
            "condition_d": cond_d,
            "margins": margins,
        }),
        csv: Some(csv),
        checks,
        inputs: input_files(&[spec]),
    }
    .emit(common)
}

#[allow(clippy::too_many_arguments)]
pub fn fp(
    weights: &[String],
    kernel: KernelKind,
    alpha: f64,
    beta: f64,
    p: &[f64],
    dims: Option<Vec<usize>>,
    depth: Option<u32>,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    let specs: Vec<WeightSpec> = weights
        .iter()
        .map(|w| parse_weight(w))
        .collect::<anyhow::Result<_>>()?;
    let (dims, native) = layout_of(&specs, dims)?;
    let config = GridConfig::new(dims, single_depth(depth, native)?)?;
    let mut ws: Vec<Weight64> = specs
        .iter()
        .map(|s| s.build(&config))
        .collect::<Result<_, _>>()?;
    let exponents = if p.len() == 1 && kernel == KernelKind::Fractional {
        if ws.len() == 1 {
            ws.push(ws[0].clone());
        }
        HlsExponents::from_alpha_p(alpha, p[0], config.total_dim())?.bilinear()
    } else {
        MultilinearExponents::new(p.to_vec())?
    };
    let refs: Vec<&Weight64> = ws.iter().collect();
    let kern = kernel_spec(kernel, alpha, beta, common.seed).build(&refs)?;
    let rep = fp_constant(&kern, &refs, &exponents)?;
    let checks = vec![Check::new(
        "c2-finite",
        rep.value.is_finite(),
        format!("c2 = {}", rep.value),
    )];
    Report {
        subcommand: "fp",
        params: json!({
            "weights": weights,
            "kernel": kernel_spec(kernel, alpha, beta, common.seed),
            "p": exponents.p,
            "depth": config.depth(),
        }),
        csv: Some(format!("quantity,value\nc2,{}\n", num(rep.value))),
        result: rep.to_json(),
        checks,
        inputs: input_files(&specs),
    }
    .emit(common)
}

#[allow(clippy::too_many_arguments)]
pub fn embed_norm(
    weights: &[String],
    kernel: KernelKind,
    alpha: f64,
    beta: f64,
    p: &[f64],
    dims: Option<Vec<usize>>,
    sweep: &SweepArgs,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    let specs: Vec<WeightSpec> = weights
        .iter()
        .map(|w| parse_weight(w))
        .collect::<anyhow::Result<_>>()?;
    MultilinearExponents::new(p.to_vec())?;
    if specs.len() != p.len() {
        bail!("{} weights but {} exponents", specs.len(), p.len());
    }
    let (dims, native) = layout_of(&specs, dims)?;
    let depths = depth_range(sweep, native, None)?;
    let task = SweepTask::Embed {
        kernel: kernel_spec(kernel, alpha, beta, common.seed),
        weights: specs.clone(),
        p: p.to_vec(),
    };
    let rows = depth_sweep::<f64>(
        &task,
        &dims,
        depths.clone(),
        common.seed,
        opts(sweep),
        common.timing,
    )?;
    Report {
        subcommand: "embed-norm",
        params: json!({
            "task": task,
            "dims": dims,
            "depths": [depths.start(), depths.end()],
            "tol": sweep.tol,
            "max_sweeps": sweep.max_sweeps,
        }),
        result: json!({ "rows": rows_json(&rows) }),
        csv: Some(rows_csv(&rows)),
        checks: lower_bound_checks("", &rows),
        inputs: input_files(&specs),
    }
    .emit(common)
}

#[allow(clippy::too_many_arguments)]
pub fn hls(
    weight: &str,
    dims: Option<Vec<usize>>,
    alpha: f64,
    p: f64,
    q: Option<f64>,
    form: &str,
    sweep: &SweepArgs,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    let spec = parse_weight(weight)?;
    let (dims, native) = layout_of(std::slice::from_ref(&spec), dims)?;
    let n: usize = dims.iter().sum();
    let exponents = match q {
        Some(q) => HlsExponents::new(alpha, p, q, n)?,
        None => HlsExponents::from_alpha_p(alpha, p, n)?,
    };
    let forms = parse_forms(form)?;
    let depths = depth_range(sweep, native, Some(3..=6))?;
    let mut result = Vec::new();
    let mut csv = format!("form,{SWEEP_CSV_HEADER}\n");
    let mut checks = Vec::new();
    for f in &forms {
        let task = SweepTask::Hls {
            weight: spec.clone(),
            alpha,
            p,
            form: *f,
        };
        let rows = depth_sweep::<f64>(
            &task,
            &dims,
            depths.clone(),
            common.seed,
            opts(sweep),
            common.timing,
        )?;
        for r in &rows {
            csv.push_str(&format!("{f},{}\n", r.csv_line()));
        }
        // the kernel form is not pointwise above the dyadic one
        if *f != OperatorForm::Kernel {
            checks.extend(lower_bound_checks(&format!("{f}:"), &rows));
        }
        result.push(json!({ "form": f, "rows": rows_json(&rows) }));
    }
    Report {
        subcommand: "hls",
        params: json!({
            "weight": spec,
            "dims": dims,
            "alpha": alpha,
            "p": exponents.p,
            "q": exponents.q,
            "forms": forms,
            "depths": [depths.start(), depths.end()],
            "tol": sweep.tol,
            "max_sweeps": sweep.max_sweeps,
        }),
        result: Value::Array(result),
        csv: Some(csv),
        checks,
        inputs: input_files(&[spec]),
    }
    .emit(common)
}

#[allow(clippy::too_many_arguments)]
pub fn kernel_equiv(
    weight: &str,
    dims: Option<Vec<usize>>,
    alpha: f64,
    pairs: usize,
    level: Option<u32>,
    depth: Option<u32>,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    let spec = parse_weight(weight)?;
    let (dims, native) = layout_of(std::slice::from_ref(&spec), dims)?;
    let config = GridConfig::new(dims, single_depth(depth, native)?)?;
    let mu: Weight64 = spec.build(&config)?;
    let level = level.unwrap_or(config.depth().saturating_sub(1).max(1));
    let stats = kernel_equivalence(&mu, alpha, pairs, level, common.seed)?;
    let checks = vec![Check::new(
        "ratio-range-finite",
        stats.r_min > 0.0 && stats.r_max.is_finite(),
        format!("[{}, {}]", stats.r_min, stats.r_max),
    )];
    let csv = format!(
        "pairs,sample_level,r_min,r_max,log_width,r0_min,r0_max,r0_log_width\n{},{},{},{},{},{},{},{}\n",
        stats.pairs,
        stats.sample_level,
        num(stats.r_min),
        num(stats.r_max),
        num(stats.log_width),
        num(stats.r0_min),
        num(stats.r0_max),
        num(stats.r0_log_width)
    );
    Report {
        subcommand: "kernel-equiv",
        params: json!({
            "weight": spec,
            "dims": config.dims(),
            "depth": config.depth(),
            "alpha": alpha,
            "pairs": pairs,
            "level": level,
        }),
        result: serde_json::to_value(&stats)?,
        csv: Some(csv),
        checks,
        inputs: input_files(&[spec]),
    }
    .emit(common)
}

/// All standard cubes of `[0,1)^dim` at one level, lexicographic.
fn cubes_at(dim: usize, level: u32) -> impl Iterator<Item = DyadicCube> {
    let side = 1i64 << level;
    let count = (side as u64).pow(dim as u32);
    (0..count).map(move |mut c| {
        let mut index = vec![0i64; dim];
        for a in (0..dim).rev() {
            index[a] = (c % side as u64) as i64;
            c /= side as u64;
        }
        DyadicCube::standard(level as i32, index)
    })
}

pub fn shift_cover(dim: usize, maxlevel: u32, common: &Common) -> anyhow::Result<bool> {
    start(common)?;
    if dim == 0 || dim > 4 {
        bail!("--dim must be in 1..=4");
    }
    let total: u64 = (0..=maxlevel)
        .map(|k| 1u64.checked_shl(k * dim as u32).unwrap_or(u64::MAX))
        .fold(0u64, u64::saturating_add);
    if total > MAX_COVER_CUBES {
        bail!("{total} cubes exceed the limit of {MAX_COVER_CUBES}");
    }
    let mut per_level = Vec::new();
    let mut failures_total = 0u64;
    let mut first_failure: Option<Value> = None;
    for k in 0..=maxlevel {
        let mut cubes = 0u64;
        let mut failures = 0u64;
        for q in cubes_at(dim, k) {
            let (tau, p) = construct_cover(&q);
            let valid = shift_cover_exhaustive(&q);
            let ok = p.level() == q.level() - 3
                && q.triple().is_subset_of(&p.to_box())
                && valid.iter().any(|(t, c)| *t == tau && *c == p);
            cubes += 1;
            if !ok {
                failures += 1;
                first_failure.get_or_insert_with(|| json!({ "level": k, "index": q.index() }));
            }
        }
        failures_total += failures;
        per_level.push((k, cubes, failures));
    }
    let summary = if failures_total == 0 {
        format!("all {total} cubes covered, 0 failures")
    } else {
        format!("{failures_total} of {total} cubes not covered")
    };
    let mut csv = String::from("level,cubes,failures\n");
    for (k, c, f) in &per_level {
        csv.push_str(&format!("{k},{c},{f}\n"));
    }
    Report {
        subcommand: "shift-cover",
        params: json!({ "dim": dim, "maxlevel": maxlevel }),
        result: json!({
            "cubes": total,
            "failures": failures_total,
            "summary": summary,
            "first_failure": first_failure,
            "levels": per_level
                .iter()
                .map(|(k, c, f)| json!({ "level": k, "cubes": c, "failures": f }))
                .collect::<Vec<_>>(),
        }),
        csv: Some(csv),
        checks: vec![Check::new("cover-valid", failures_total == 0, summary)],
        inputs: Vec::new(),
    }
    .emit(common)
}

pub fn carleson(
    weight: &str,
    dims: Option<Vec<usize>>,
    p: f64,
    q: f64,
    sweep: &SweepArgs,
    common: &Common,
) -> anyhow::Result<bool> {
    start(common)?;
    prodyadic::operators::check_carleson(p, q)?;
    let spec = parse_weight(weight)?;
    let (dims, native) = layout_of(std::slice::from_ref(&spec), dims)?;
    let depths = depth_range(sweep, native, None)?;
    let task = SweepTask::Carleson {
        weight: spec.clone(),
        p,
        q,
    };
    let rows = depth_sweep::<f64>(
        &task,
        &dims,
        depths.clone(),
        common.seed,
        opts(sweep),
        common.timing,
    )?;
    Report {
        subcommand: "carleson",
        params: json!({
            "task": task,
            "dims": dims,
            "depths": [depths.start(), depths.end()],
            "tol": sweep.tol,
            "max_sweeps": sweep.max_sweeps,
        }),
        result: json!({ "rows": rows_json(&rows) }),
        csv: Some(rows_csv(&rows)),
        checks: lower_bound_checks("", &rows),
        inputs: input_files(&[spec]),
    }
    .emit(common)
}
