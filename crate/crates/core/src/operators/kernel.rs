use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::ProductRect;
use crate::error::{Error, Result};
use crate::measures::{keyed_rng, FieldLayout, RectField, Weight};
use crate::scalar::Scalar;

/// Nonnegative map on the standard product cubes of one configuration.
#[derive(Clone, Debug)]
pub struct Kernel<S> {
    values: RectField<S>,
    zero_mass: usize,
}

impl<S: Scalar> Kernel<S> {
    pub fn from_field(values: RectField<S>) -> Result<Self> {
        if values
            .values()
            .iter()
            .any(|v| !(v.is_finite() && *v >= S::zero()))
        {
            return Err(Error::Parameter(
                "kernel values must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            values,
            zero_mass: 0,
        })
    }

    pub fn from_fn(layout: &Arc<FieldLayout>, f: impl Fn(&ProductRect) -> S) -> Result<Self> {
        Self::from_field(RectField::from_fn(layout, |i| f(&layout.rect(i))))
    }

    pub fn zero(layout: &Arc<FieldLayout>) -> Self {
        Self {
            values: RectField::zeros(layout),
            zero_mass: 0,
        }
    }

    /// `1_{R = rect}`.
    pub fn indicator(layout: &Arc<FieldLayout>, rect: &ProductRect) -> Result<Self> {
        let slot = layout
            .slot(rect)
            .ok_or_else(|| Error::Parameter("rectangle outside the standard family".into()))?;
        let mut values = RectField::zeros(layout);
        values.values_mut()[slot] = S::one();
        Ok(Self {
            values,
            zero_mass: 0,
        })
    }

    /// `mu(R)^(alpha/N - 1)`; rectangles of zero mass get 0 and are counted.
    pub fn fractional(mu: &Weight<S>, alpha: f64) -> Self {
        let power = S::from_f64_lossy(alpha / mu.config().total_dim() as f64 - 1.0);
        Self::mass_power(mu, power)
    }

    /// `mu(R)^power`, zero where `mu(R) = 0`.
    pub fn mass_power(mu: &Weight<S>, power: S) -> Self {
        let mut zero_mass = 0;
        let values = mu.masses().map(|m| {
            if m > S::zero() {
                m.powf(power)
            } else {
                S::zero()
            }
        });
        for &m in mu.masses().values() {
            if m <= S::zero() {
                zero_mass += 1;
            }
        }
        Self { values, zero_mass }
    }

    /// Independent uniform values in `(0, 1]`, keyed by each rectangle's
    /// levels and indices so that nested depths share values.
    pub fn random(layout: &Arc<FieldLayout>, seed: u64) -> Self {
        let values = RectField::from_fn(layout, |i| {
            let r = layout.rect(i);
            let mut path: Vec<u64> = r.levels().iter().map(|&l| l as u64).collect();
            path.extend(
                r.factors()
                    .iter()
                    .flat_map(|q| q.index().iter().map(|&m| m as u64)),
            );
            let u: f64 = keyed_rng(seed, &path).random();
            S::from_f64_lossy(1.0 - u)
        });
        Self {
            values,
            zero_mass: 0,
        }
    }

    /// Pointwise product with `mu(R)^power` (zero where `mu(R) = 0`).
    pub fn times_mass_power(&self, mu: &Weight<S>, power: S) -> Self {
        let other = Self::mass_power(mu, power);
        Self {
            values: self.values.zip_map(&other.values, |a, b| a * b),
            zero_mass: self.zero_mass + other.zero_mass,
        }
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        self.values.layout()
    }

    pub fn field(&self) -> &RectField<S> {
        &self.values
    }

    pub fn values(&self) -> &[S] {
        self.values.values()
    }

    pub fn get(&self, rect: &ProductRect) -> Option<S> {
        self.values.get(rect)
    }

    /// Rectangles whose value was forced to 0 because of zero mass.
    pub fn zero_mass_rects(&self) -> usize {
        self.zero_mass
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|&v| v == S::zero())
    }
}

/// Recipe for a kernel, reusable across depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Zero,
    /// `mu(R)^(alpha/N - 1)` against the first weight.
    Fractional {
        alpha: f64,
    },
    /// Uniform random factor times `sigma_1(R)^(-beta)`.
    Random {
        seed: u64,
        beta: f64,
    },
}

impl KernelSpec {
    pub fn build<S: Scalar>(&self, weights: &[&Weight<S>]) -> Result<Kernel<S>> {
        let first = weights
            .first()
            .ok_or_else(|| Error::Parameter("kernel needs at least one weight".into()))?;
        Ok(match self {
            KernelSpec::Zero => Kernel::zero(first.layout()),
            KernelSpec::Fractional { alpha } => Kernel::fractional(first, *alpha),
            KernelSpec::Random { seed, beta } => Kernel::random(first.layout(), *seed)
                .times_mass_power(first, S::from_f64_lossy(-*beta)),
        })
    }
}
