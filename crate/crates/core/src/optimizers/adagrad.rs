//! Adaptive extra-gradient: AdaGrad-style preconditioning built from the
//! cumulative norms of every gradient seen so far (base and shadow).

use rand::Rng;

use super::{preconditioned_move, Oracle};
use crate::error::Result;
use crate::precond::DiagonalPreconditioner;
use crate::schedule::DualDecay;
use crate::vector::SaddleVector;

/// Per-coordinate running sums of squared gradients.
///
/// `sumsq[i]` is the squared norm of the concatenated history of coordinate
/// `i` over all base and shadow gradients so far; its square root is the
/// cumulative norm `s_i`. Accumulation is strictly sequential.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    /// After the latest shadow gradient (drives the real update).
    pub sumsq: Vec<f64>,
    /// After the latest base gradient (drives the shadow update).
    pub sumsq_at_shadow: Vec<f64>,
}

impl AdaGradState {
    pub fn zeros(d: usize) -> Self {
        Self {
            sumsq: vec![0.0; d],
            sumsq_at_shadow: vec![0.0; d],
        }
    }

    /// `max_i s_i` after the latest update.
    pub fn max_cumulative_norm(&self) -> f64 {
        self.sumsq.iter().fold(0.0f64, |a, b| a.max(b.sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AegState {
    pub z: SaddleVector,
    pub acc: AdaGradState,
}

impl AegState {
    pub fn new(z: SaddleVector) -> Self {
        let d = z.dim();
        Self {
            z,
            acc: AdaGradState::zeros(d),
        }
    }
}

fn accumulate(sumsq: &[f64], g: &[f64]) -> Vec<f64> {
    sumsq.iter().zip(g).map(|(s, gi)| s + gi * gi).collect()
}

/// One adaptive extra-gradient iteration with constant batch `batch`.
pub fn aeg_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &AegState,
    eta: f64,
    delta: f64,
    batch: usize,
) -> Result<AegState> {
    adaptive_extra_gradient(oracle, state, eta, delta, batch, 1.0)
}

/// As [`aeg_step`] with the y-block rate `eta / k`.
pub fn aeg_drd_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &AegState,
    eta: f64,
    delta: f64,
    batch: usize,
    k: usize,
) -> Result<AegState> {
    adaptive_extra_gradient(oracle, state, eta, delta, batch, DualDecay::InvLinear.factor(k))
}

pub(crate) fn adaptive_extra_gradient<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &AegState,
    eta: f64,
    delta: f64,
    batch: usize,
    y_factor: f64,
) -> Result<AegState> {
    let rate_y = eta * y_factor;

    let g = oracle.sample(&state.z, batch)?;
    let sumsq_at_shadow = accumulate(&state.acc.sumsq, g.as_slice());
    let h = DiagonalPreconditioner::from_second_moment(delta, &sumsq_at_shadow)?;
    let shadow = preconditioned_move(&state.z, g.as_slice(), &h, eta, rate_y)?;

    let g_shadow = oracle.sample(&shadow, batch)?;
    let sumsq = accumulate(&sumsq_at_shadow, g_shadow.as_slice());
    let s = DiagonalPreconditioner::from_second_moment(delta, &sumsq)?;
    let z = preconditioned_move(&state.z, g_shadow.as_slice(), &s, eta, rate_y)?;

    Ok(AegState {
        z,
        acc: AdaGradState {
            sumsq,
            sumsq_at_shadow,
        },
    })
}
