//! Test-weight factories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dyadic::GridConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::lattice::advance;
use super::measure::{Weight, WeightMeta};

/// Identifier of the keyed random stream used by every seeded generator.
pub const RNG_NAME: &str = "chacha8-splitmix64-v1";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator keyed by a seed and a path of integers.
///
/// Draws attached to a node depend only on the seed and the node's path,
/// never on traversal order or on how deep the lattice goes.
pub fn keyed_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let key = path
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)));
    ChaCha8Rng::seed_from_u64(key)
}

/// Density 1 everywhere.
pub fn gen_uniform<S: Scalar>(config: &GridConfig) -> Result<Weight<S>> {
    Weight::from_density(
        config,
        vec![S::one(); config.cell_count()],
        WeightMeta {
            kind: "uniform".into(),
            seed: None,
            params: json!({}),
        },
    )
}

/// Cell averages of `prod_a |t_a - c_a|^{e_a}`, computed from exact
/// antiderivatives; `e_a > -1`.
pub fn gen_power<S: Scalar>(
    config: &GridConfig,
    exponents: &[f64],
    center: &[f64],
) -> Result<Weight<S>> {
    let n = config.total_dim();
    if exponents.len() != n || center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: exponents.len().min(center.len()),
        });
    }
    if let Some(e) = exponents.iter().find(|&&e| !(e > -1.0) || !e.is_finite()) {
        return Err(Error::Parameter(format!(
            "power exponent {e} must exceed -1 for local integrability"
        )));
    }
    let l = config.cells_per_axis();
    let h = 1.0 / l as f64;
    let axis_avgs: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let (e, c) = (exponents[a], center[a]);
            let anti = |t: f64| {
                let d = t - c;
                d.signum() * d.abs().powf(e + 1.0) / (e + 1.0)
            };
            (0..l)
                .map(|i| (anti((i + 1) as f64 * h) - anti(i as f64 * h)) / h)
                .collect()
        })
        .collect();
    let density = tensorize(config, &axis_avgs);
    Weight::from_density(
        config,
        density.into_iter().map(S::from_f64_lossy).collect(),
        WeightMeta {
            kind: "power".into(),
            seed: None,
            params: json!({ "exponents": exponents, "center": center }),
        },
    )
}

/// Tensor product of per-axis multiplicative cascades.
///
/// On every axis each dyadic interval hands a fraction `theta` of its mass
/// to its left half and `1 - theta` to its right half, with `theta`
/// uniform on `[1/(1+rho), rho/(1+rho)]`. Parent/child mass ratios then lie
/// in `[(1+rho)/rho, 1+rho]`. Draws are keyed by `(axis, level, index)`, so
/// the same seed at a larger depth refines the same measure.
pub fn gen_cascade<S: Scalar>(config: &GridConfig, rho: f64, seed: u64) -> Result<Weight<S>> {
    if !(rho > 1.0 && rho <= 4.0) {
        return Err(Error::Parameter(format!(
            "cascade ratio bound rho = {rho} outside (1, 4]"
        )));
    }
    let k = config.depth();
    let lo = 1.0 / (1.0 + rho);
    let hi = rho / (1.0 + rho);
    let l = config.cells_per_axis();
    let axis_densities: Vec<Vec<f64>> = (0..config.total_dim())
        .map(|a| {
            let mut masses = vec![1.0f64];
            for level in 0..k {
                let mut next = Vec::with_capacity(masses.len() * 2);
                for (m, &mass) in masses.iter().enumerate() {
                    let mut rng = keyed_rng(seed, &[a as u64, level as u64, m as u64]);
                    let theta = lo + (hi - lo) * rng.random::<f64>();
                    next.push(mass * theta);
                    next.push(mass * (1.0 - theta));
                }
                masses = next;
            }
            // level-K interval of length 2^-K spread over its 3 cells
            let scale = (1u64 << k) as f64;
            (0..l).map(|i| masses[i / 3] * scale).collect()
        })
        .collect();
    let density = tensorize(config, &axis_densities);
    Weight::from_density(
        config,
        density.into_iter().map(S::from_f64_lossy).collect(),
        WeightMeta {
            kind: "cascade".into(),
            seed: Some(seed),
            params: json!({ "rho": rho, "rng": RNG_NAME }),
        },
    )
}

fn tensorize(config: &GridConfig, per_axis: &[Vec<f64>]) -> Vec<f64> {
    let dim = config.total_dim();
    let shape = vec![config.cells_per_axis(); dim];
    let mut idx = vec![0usize; dim];
    let mut out = Vec::with_capacity(config.cell_count());
    for _ in 0..config.cell_count() {
        out.push(
            idx.iter()
                .enumerate()
                .map(|(a, &i)| per_axis[a][i])
                .product(),
        );
        advance(&mut idx, &shape);
    }
    out
}

/// Recipe for a generated weight, reusable at any depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Uniform,
    Power {
        exponents: Vec<f64>,
        center: Vec<f64>,
    },
    Cascade {
        rho: f64,
        seed: u64,
    },
    /// A stored weight file, coarsened to the requested depth.
    File {
        path: String,
    },
}

impl WeightSpec {
    pub fn build<S: Scalar>(&self, config: &GridConfig) -> Result<Weight<S>> {
        match self {
            WeightSpec::Uniform => gen_uniform(config),
            WeightSpec::Power { exponents, center } => gen_power(config, exponents, center),
            WeightSpec::Cascade { rho, seed } => gen_cascade(config, *rho, *seed),
            WeightSpec::File { path } => {
                let w = Weight::<S>::load(path)?;
                if w.config().dims() != config.dims() || w.config().depth() < config.depth() {
                    return Err(Error::ConfigMismatch(format!(
                        "{path} has dims {:?} depth {}, requested dims {:?} depth {}",
                        w.config().dims(),
                        w.config().depth(),
                        config.dims(),
                        config.depth()
                    )));
                }
                if w.config().depth() == config.depth() {
                    Ok(w)
                } else {
                    w.coarsen(config.depth())
                }
            }
        }
    }
}
