//! Non-adaptive baselines: simultaneous and alternating descent-ascent,
//! optimistic (Popov) gradient and projected extra-gradient.

use rand::Rng;

use super::{plain_move, Oracle};
use crate::error::Result;
use crate::problems::FeasibleSet;
use crate::vector::{FieldValue, SaddleVector};

/// `z + eta * V(z; xi)`.
pub fn sgda_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    z: &SaddleVector,
    eta: f64,
    batch: usize,
) -> Result<SaddleVector> {
    let g = oracle.sample(z, batch)?;
    plain_move(z, g.as_slice(), eta)
}

/// x moves first; y then uses the field at the intermediate point `(x', y)`.
pub fn alt_sgda_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    z: &SaddleVector,
    eta: f64,
    batch: usize,
) -> Result<SaddleVector> {
    let n1 = z.n1();
    let g = oracle.sample(z, batch)?;
    let mut data = z.as_slice().to_vec();
    for (zi, gi) in data[..n1].iter_mut().zip(g.x()) {
        *zi += eta * gi;
    }
    let mid = SaddleVector::new(data, n1)?;
    let h = oracle.sample(&mid, batch)?;
    let mut data = mid.into_vec();
    for (zi, hi) in data[n1..].iter_mut().zip(h.y()) {
        *zi += eta * hi;
    }
    SaddleVector::new(data, n1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgState {
    pub z: SaddleVector,
    /// Field estimate at the previous shadow point; `None` before the first
    /// step, in which case a fresh estimate at `z` is used.
    pub prev_shadow_grad: Option<FieldValue>,
}

impl OgState {
    pub fn new(z: SaddleVector) -> Self {
        Self {
            z,
            prev_shadow_grad: None,
        }
    }
}

/// Popov's extra-gradient: the shadow step reuses the last shadow gradient,
/// so each iteration costs one new oracle query.
pub fn og_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &OgState,
    eta: f64,
    batch: usize,
) -> Result<OgState> {
    let carried = match &state.prev_shadow_grad {
        Some(g) => g.clone(),
        None => oracle.sample(&state.z, batch)?,
    };
    let shadow = plain_move(&state.z, carried.as_slice(), eta)?;
    let g_shadow = oracle.sample(&shadow, batch)?;
    let z = plain_move(&state.z, g_shadow.as_slice(), eta)?;
    Ok(OgState {
        z,
        prev_shadow_grad: Some(g_shadow),
    })
}

/// Extra-gradient with batch `batch`, both moves projected onto `feasible`.
pub fn seg_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    z: &SaddleVector,
    eta: f64,
    batch: usize,
    feasible: &FeasibleSet,
) -> Result<SaddleVector> {
    let g = oracle.sample(z, batch)?;
    let shadow = project_move(z, g.as_slice(), eta, feasible)?;
    let g_shadow = oracle.sample(&shadow, batch)?;
    project_move(z, g_shadow.as_slice(), eta, feasible)
}

fn project_move(
    z: &SaddleVector,
    dir: &[f64],
    eta: f64,
    feasible: &FeasibleSet,
) -> Result<SaddleVector> {
    let moved = plain_move(z, dir, eta)?;
    if feasible.is_unconstrained() {
        return Ok(moved);
    }
    SaddleVector::new(feasible.project(moved.as_slice()), z.n1())
}
