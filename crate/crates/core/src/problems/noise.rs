use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::norm2;

/// Perturbation applied to each oracle sample.
///
/// `Gaussian` adds iid `N(0, sigma^2)` noise to every coordinate, so one
/// sample has total variance `d * sigma^2`. `ClippedGaussian` additionally
/// rescales the perturbed sample onto the `bound` ball when it leaves it;
/// the estimator is then biased, but only in the clipping tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    ClippedGaussian {
        sigma: f64,
        bound: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { sigma } if sigma >= 0.0 && sigma.is_finite() => Ok(()),
            NoiseModel::ClippedGaussian { sigma, bound }
                if sigma >= 0.0 && sigma.is_finite() && bound > 0.0 && bound.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!(
                "noise parameters out of range: {self:?}"
            ))),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, NoiseModel::None)
    }

    /// Whether every sample is guaranteed to have norm at most `g`.
    pub fn bounded_by(&self, g: f64) -> bool {
        match *self {
            NoiseModel::None => true,
            NoiseModel::Gaussian { sigma } => sigma == 0.0,
            NoiseModel::ClippedGaussian { bound, .. } => bound <= g,
        }
    }

    /// Perturbs `sample` in place.
    pub fn perturb<R: Rng + ?Sized>(&self, sample: &mut [f64], rng: &mut R) {
        match *self {
            NoiseModel::None => {}
            NoiseModel::Gaussian { sigma } => add_gaussian(sample, sigma, rng),
            NoiseModel::ClippedGaussian { sigma, bound } => {
                add_gaussian(sample, sigma, rng);
                let n = norm2(sample);
                if n > bound {
                    let scale = bound / n;
                    sample.iter_mut().for_each(|v| *v *= scale);
                }
            }
        }
    }
}

fn add_gaussian<R: Rng + ?Sized>(sample: &mut [f64], sigma: f64, rng: &mut R) {
    for v in sample.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sigma * e;
    }
}
