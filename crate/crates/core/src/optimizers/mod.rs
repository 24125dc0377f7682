//! Iterative schemes for `min_x max_y phi(x, y)`, each written as a single
//! step over explicit state, plus the [`run`] driver.

mod adagrad;
mod adaptive;
mod run;
mod simple;

pub use adagrad::{aeg_drd_step, aeg_step, AdaGradState, AegState};
pub use adaptive::{
    adam_gda_step, amsgrad_eg_drd_step, amsgrad_eg_step, amsgrad_gda_step, MomentumIterate,
};
pub use run::{run, step_size_warnings, MonotonicityAudit, RunOptions, RunResult};
pub use simple::{alt_sgda_step, og_step, seg_step, sgda_step, OgState};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precond::DiagonalPreconditioner;
use crate::problems::{sample_gradient, NoiseModel, ProblemSpec};
use crate::schedule::DualDecay;
use crate::vector::{FieldValue, SaddleVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgda,
    AltSgda,
    Og,
    Seg,
    AdamGda,
    AmsgradGda,
    AmsgradEg,
    AmsgradEgDrd,
    Aeg,
    AegDrd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 10] = [
        OptimizerKind::Sgda,
        OptimizerKind::AltSgda,
        OptimizerKind::Og,
        OptimizerKind::Seg,
        OptimizerKind::AdamGda,
        OptimizerKind::AmsgradGda,
        OptimizerKind::AmsgradEg,
        OptimizerKind::AmsgradEgDrd,
        OptimizerKind::Aeg,
        OptimizerKind::AegDrd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgda => "sgda",
            OptimizerKind::AltSgda => "alt_sgda",
            OptimizerKind::Og => "og",
            OptimizerKind::Seg => "seg",
            OptimizerKind::AdamGda => "adam_gda",
            OptimizerKind::AmsgradGda => "amsgrad_gda",
            OptimizerKind::AmsgradEg => "amsgrad_eg",
            OptimizerKind::AmsgradEgDrd => "amsgrad_eg_drd",
            OptimizerKind::Aeg => "aeg",
            OptimizerKind::AegDrd => "aeg_drd",
        }
    }

    /// y-block rate decay applied when the schedule does not override it.
    pub fn default_dual_decay(self) -> DualDecay {
        match self {
            OptimizerKind::AmsgradEgDrd => DualDecay::InvSqrt,
            OptimizerKind::AegDrd => DualDecay::InvLinear,
            _ => DualDecay::None,
        }
    }

    /// Whether a schedule's `dual_decay` override is meaningful.
    pub fn supports_dual_decay(self) -> bool {
        matches!(
            self,
            OptimizerKind::AmsgradEg
                | OptimizerKind::AmsgradEgDrd
                | OptimizerKind::Aeg
                | OptimizerKind::AegDrd
        )
    }

    pub fn has_momentum(self) -> bool {
        matches!(
            self,
            OptimizerKind::AdamGda
                | OptimizerKind::AmsgradGda
                | OptimizerKind::AmsgradEg
                | OptimizerKind::AmsgradEgDrd
        )
    }

    pub fn is_adagrad(self) -> bool {
        matches!(self, OptimizerKind::Aeg | OptimizerKind::AegDrd)
    }

    /// Whether the preconditioner sequence is monotone by construction.
    pub fn has_monotone_preconditioner(self) -> bool {
        matches!(
            self,
            OptimizerKind::AmsgradGda
                | OptimizerKind::AmsgradEg
                | OptimizerKind::AmsgradEgDrd
                | OptimizerKind::Aeg
                | OptimizerKind::AegDrd
        )
    }

    /// Batched oracle evaluations per iteration (OG amortized, excluding its
    /// one-off bootstrap evaluation).
    pub fn evaluations_per_iter(self) -> u64 {
        match self {
            OptimizerKind::Sgda
            | OptimizerKind::Og
            | OptimizerKind::AdamGda
            | OptimizerKind::AmsgradGda => 1,
            _ => 2,
        }
    }

    /// Whether the step-size condition `eta <= delta / (3L)` is part of the
    /// method's convergence guarantee.
    pub fn has_step_size_condition(self) -> bool {
        matches!(
            self,
            OptimizerKind::AmsgradEg
                | OptimizerKind::AmsgradEgDrd
                | OptimizerKind::Aeg
                | OptimizerKind::AegDrd
        )
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidArgument(format!(
                "unknown optimizer `{s}`, expected one of {}",
                valid.join(", ")
            ))
        })
    }
}

/// Stochastic first-order oracle bound to one problem, one noise model and
/// one RNG stream. Counts every batched evaluation and every sample.
pub struct Oracle<'a, R> {
    problem: &'a ProblemSpec,
    noise: NoiseModel,
    rng: R,
    evaluations: u64,
    samples: u64,
    max_norm: f64,
}

impl<'a, R: Rng> Oracle<'a, R> {
    pub fn new(problem: &'a ProblemSpec, noise: NoiseModel, rng: R) -> Self {
        Self {
            problem,
            noise,
            rng,
            evaluations: 0,
            samples: 0,
            max_norm: 0.0,
        }
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Mean of `batch` samples at `z`.
    pub fn sample(&mut self, z: &SaddleVector, batch: usize) -> Result<FieldValue> {
        let g = sample_gradient(self.problem, &self.noise, z, batch, &mut self.rng)?;
        self.evaluations += 1;
        self.samples += batch as u64;
        self.max_norm = self.max_norm.max(g.norm());
        Ok(g)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Largest norm of any estimate handed out so far.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }
}

/// `z + rate * H^{-1} dir`, with the rate chosen per block.
pub(crate) fn preconditioned_move(
    z: &SaddleVector,
    dir: &[f64],
    h: &DiagonalPreconditioner,
    rate_x: f64,
    rate_y: f64,
) -> Result<SaddleVector> {
    let n1 = z.n1();
    let data = z
        .as_slice()
        .iter()
        .zip(dir)
        .enumerate()
        .map(|(i, (zi, di))| {
            let rate = if i < n1 { rate_x } else { rate_y };
            zi + rate * (di / h.entry(i))
        })
        .collect();
    SaddleVector::new(data, n1)
}

/// `z + rate * dir`.
pub(crate) fn plain_move(z: &SaddleVector, dir: &[f64], rate: f64) -> Result<SaddleVector> {
    let data = z
        .as_slice()
        .iter()
        .zip(dir)
        .map(|(zi, di)| zi + rate * di)
        .collect();
    SaddleVector::new(data, z.n1())
}
