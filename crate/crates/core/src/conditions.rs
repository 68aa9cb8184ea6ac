//! Finite-family estimators of the structural constants of a weight:
//! doubling, reverse doubling, the summability condition (D), the
//! Fefferman-Phong constant of a kernel and the Carleson testing constant.
//!
//! Every supremum and infimum ranges over the standard product cubes with
//! factor levels `0..=K`. Reports carry the depth and the number of tuples
//! scanned so the truncation is always visible.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::dyadic::{DyadicCube, ProductRect};
use crate::error::{Error, Result};
use crate::measures::{FieldLayout, Weight};
use crate::operators::{check_carleson, Kernel, MultilinearExponents};
use crate::scalar::Scalar;

/// Where an extremal ratio was attained.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub rect: ProductRect,
    /// Factor `j` (0-based) for one-direction quantities.
    pub factor: Option<usize>,
    /// The child `Q in D^(1)(P_j(R))` for doubling-type quantities.
    pub child: Option<DyadicCube>,
}

impl Serialize for Witness {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut st = s.serialize_struct("Witness", 3)?;
        st.serialize_field("rect", &self.rect.to_record())?;
        st.serialize_field("j", &self.factor)?;
        st.serialize_field(
            "child",
            &self.child.as_ref().map(|q| {
                json!({
                    "level": q.level(),
                    "index": q.index(),
                    "tau": q.shift().iter().map(|t| t.numerator()).collect::<Vec<_>>(),
                })
            }),
        )?;
        st.end()
    }
}

/// Serialize a float, writing infinities as `"inf"`.
pub fn number_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// An estimated constant together with its witness and provenance.
#[derive(Clone, Debug)]
pub struct ConstantReport {
    pub name: String,
    /// The extremal value; `f64::INFINITY` when a positive mass is compared
    /// with a zero one.
    pub value: f64,
    pub witness: Option<Witness>,
    pub depth: u32,
    pub family_size: usize,
    pub params: Value,
    /// Per-factor extremal values, when the quantity is one-directional.
    pub per_factor: Vec<f64>,
    /// Upper bound obtained from the reverse doubling constant, when known.
    pub tail_bound: Option<f64>,
}

impl ConstantReport {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "value": number_json(self.value),
            "witness": self.witness,
            "depth": self.depth,
            "family_size": self.family_size,
            "params": self.params,
        });
        if !self.per_factor.is_empty() {
            v["per_factor"] =
                Value::Array(self.per_factor.iter().map(|&x| number_json(x)).collect());
        }
        if let Some(t) = self.tail_bound {
            v["tail_bound"] = number_json(t);
        }
        v
    }
}

impl Serialize for ConstantReport {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Clone, Copy)]
struct Extremum {
    value: f64,
    slot: usize,
    factor: usize,
    child: usize,
}

/// Doubling and reverse doubling constants from one scan.
#[derive(Clone, Debug)]
pub struct DoublingScan {
    pub doubling: ConstantReport,
    pub reverse: ConstantReport,
}

/// Scan every `(R, j, Q)` with `Q in D^(1)(P_j(R))`, `P_j(R)` at level
/// `<= K - 1`, for `sigma(R) / sigma(<R;Q,j>)`.
pub fn doubling_scan<S: Scalar>(w: &Weight<S>) -> DoublingScan {
    let layout = w.layout();
    let cfg = layout.config();
    let masses = w.masses().values();
    let n = cfg.factors();
    let mut max_all: Option<Extremum> = None;
    let mut min_all: Option<Extremum> = None;
    let mut max_j = vec![0.0f64; n];
    let mut min_j = vec![f64::INFINITY; n];
    let mut family = 0usize;
    let mut slot = 0usize;
    for t in 0..layout.tuples().len() {
        for local in 0..layout.range(t).len() {
            let parent = masses[slot].to_f64_lossy();
            for j in 0..n {
                let Some(children) = layout.child_slots(t, local, j) else {
                    continue;
                };
                for (c, &cs) in children.iter().enumerate() {
                    family += 1;
                    let child = masses[cs].to_f64_lossy();
                    if parent == 0.0 && child == 0.0 {
                        continue;
                    }
                    let ratio = if child == 0.0 {
                        f64::INFINITY
                    } else {
                        parent / child
                    };
                    let e = Extremum {
                        value: ratio,
                        slot,
                        factor: j,
                        child: c,
                    };
                    if max_all.is_none_or(|m| ratio > m.value) {
                        max_all = Some(e);
                    }
                    if min_all.is_none_or(|m| ratio < m.value) {
                        min_all = Some(e);
                    }
                    max_j[j] = max_j[j].max(ratio);
                    min_j[j] = min_j[j].min(ratio);
                }
            }
            slot += 1;
        }
    }
    let witness = |e: Option<Extremum>| {
        e.map(|e| {
            let rect = layout.rect(e.slot);
            let child = rect.factor(e.factor).children_unbounded()[e.child].clone();
            Witness {
                rect,
                factor: Some(e.factor),
                child: Some(child),
            }
        })
    };
    let report = |name: &str, e: Option<Extremum>, per: Vec<f64>, empty: f64| ConstantReport {
        name: name.into(),
        value: e.map_or(empty, |e| e.value),
        witness: witness(e),
        depth: cfg.depth(),
        family_size: family,
        params: json!({}),
        per_factor: per,
        tail_bound: None,
    };
    DoublingScan {
        doubling: report("doubling", max_all, max_j, 0.0),
        reverse: report("reverse_doubling", min_all, min_j, f64::INFINITY),
    }
}

/// `delta = max sigma(R) / sigma(<R;Q,j>)`.
pub fn doubling_constant<S: Scalar>(w: &Weight<S>) -> ConstantReport {
    doubling_scan(w).doubling
}

/// `gamma = min sigma(R) / sigma(<R;Q,j>)`.
pub fn reverse_doubling_constant<S: Scalar>(w: &Weight<S>) -> ConstantReport {
    doubling_scan(w).reverse
}

/// `max_{R,j} sum_{Q in D(P_j(R)), level <= K} sigma(<R;Q,j>)^e / sigma(R)^e`.
///
/// The sum includes `Q = P_j(R)`. Built bottom-up per factor from
/// `S_j(R) = sigma(R)^e + sum_children S_j(<R;Q',j>)`.
fn subcube_power_sum<S: Scalar>(w: &Weight<S>, exponent: f64) -> (Option<Extremum>, usize) {
    let layout = w.layout();
    let cfg = layout.config();
    let masses = w.masses().values();
    let e = S::from_f64_lossy(exponent);
    let powered: Vec<S> = masses.iter().map(|&m| m.powf(e)).collect();
    let nt = layout.tuples().len();
    let mut best: Option<Extremum> = None;
    let mut family = 0usize;
    for j in 0..cfg.factors() {
        let mut sums = powered.clone();
        for t in (0..nt).rev() {
            let range = layout.range(t);
            for local in 0..range.len() {
                if let Some(children) = layout.child_slots(t, local, j) {
                    let s = children.iter().fold(S::zero(), |acc, &c| acc + sums[c]);
                    sums[range.start + local] = sums[range.start + local] + s;
                }
            }
        }
        for slot in 0..layout.len() {
            family += 1;
            if masses[slot] <= S::zero() {
                continue;
            }
            let ratio = (sums[slot] / powered[slot]).to_f64_lossy();
            if best.is_none_or(|b| ratio > b.value) {
                best = Some(Extremum {
                    value: ratio,
                    slot,
                    factor: j,
                    child: 0,
                });
            }
        }
    }
    (best, family)
}

fn sum_report<S: Scalar>(
    w: &Weight<S>,
    name: &str,
    exponent: f64,
    params: Value,
    tail_exponent: f64,
) -> ConstantReport {
    let (best, family) = subcube_power_sum(w, exponent);
    let gamma = reverse_doubling_constant(w).value;
    let depth = w.config().depth();
    let tail_bound = (gamma > 1.0).then(|| {
        (0..=depth)
            .map(|k| gamma.powf(-(k as f64) * tail_exponent))
            .sum()
    });
    ConstantReport {
        name: name.into(),
        value: best.map_or(0.0, |b| b.value),
        witness: best.map(|b| Witness {
            rect: w.layout().rect(b.slot),
            factor: Some(b.factor),
            child: None,
        }),
        depth,
        family_size: family,
        params,
        per_factor: Vec::new(),
        tail_bound,
    }
}

/// Constant of condition (D) with parameter `eps`, truncated at depth `K`.
///
/// `tail_bound` holds `sum_{k=0}^{K} gamma^(-k eps)`.
pub fn condition_d_constant<S: Scalar>(w: &Weight<S>, eps: f64) -> Result<ConstantReport> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!(
            "condition (D) needs eps > 0, got {eps}"
        )));
    }
    Ok(sum_report(
        w,
        "condition_d",
        1.0 + eps,
        json!({ "eps": eps }),
        eps,
    ))
}

/// Carleson testing constant with exponents `1 < p < q`.
///
/// `tail_bound` holds `sum_{k=0}^{K} gamma^(-k (q/p - 1))`.
pub fn carleson_testing_constant<S: Scalar>(
    w: &Weight<S>,
    p: f64,
    q: f64,
) -> Result<ConstantReport> {
    check_carleson(p, q)?;
    Ok(sum_report(
        w,
        "carleson_testing",
        q / p,
        json!({ "p": p, "q": q }),
        q / p - 1.0,
    ))
}

/// Fefferman-Phong constant `max_R K(R) prod_k sigma_k(R)^(1/p_k')`.
pub fn fp_constant<S: Scalar>(
    kernel: &Kernel<S>,
    weights: &[&Weight<S>],
    exponents: &MultilinearExponents,
) -> Result<ConstantReport> {
    if weights.len() != exponents.len() {
        return Err(Error::Parameter(format!(
            "{} weights but {} exponents",
            weights.len(),
            exponents.len()
        )));
    }
    let layout: &std::sync::Arc<FieldLayout> = kernel.layout();
    for w in weights {
        w.check_config(layout.config())?;
    }
    let duals: Vec<S> = exponents
        .dual_reciprocals()
        .into_iter()
        .map(S::from_f64_lossy)
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for slot in 0..layout.len() {
        let k = kernel.values()[slot];
        let v = weights
            .iter()
            .zip(&duals)
            .fold(k, |acc, (w, &d)| acc * w.masses().at(slot).powf(d))
            .to_f64_lossy();
        if best.is_none_or(|b| v > b.0) {
            best = Some((v, slot));
        }
    }
    Ok(ConstantReport {
        name: "fefferman_phong".into(),
        value: best.map_or(0.0, |b| b.0),
        witness: best.map(|b| Witness {
            rect: layout.rect(b.1),
            factor: None,
            child: None,
        }),
        depth: layout.config().depth(),
        family_size: layout.len(),
        params: json!({ "p": exponents.p }),
        per_factor: Vec::new(),
        tail_bound: None,
    })
}

/// Margins of the two doubling/reverse doubling implications on the
/// scanned family.
#[derive(Clone, Debug, Serialize)]
pub struct ImplicationMargins {
    /// `gamma_j - (1 + (2^{N_j} - 1)/delta_j)` per factor, relative.
    pub forward: Vec<f64>,
    /// `gamma/(gamma + 1 - 2^{max N_i}) - delta`, relative; `None` when
    /// `gamma <= 2^{max N_i} - 1`.
    pub converse: Option<f64>,
}

pub fn implication_margins(scan: &DoublingScan, dims: &[usize]) -> ImplicationMargins {
    let forward = dims
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let delta = scan.doubling.per_factor[j];
            let gamma = scan.reverse.per_factor[j];
            let bound = 1.0 + ((1u64 << d) - 1) as f64 / delta;
            (gamma - bound) / bound
        })
        .collect();
    let gamma = scan.reverse.value;
    let delta = scan.doubling.value;
    let top = (1u64 << dims.iter().copied().max().unwrap_or(1)) as f64;
    let converse = (gamma > top - 1.0).then(|| {
        let bound = gamma / (gamma + 1.0 - top);
        (bound - delta) / bound
    });
    ImplicationMargins { forward, converse }
}
