use serde::{Deserialize, Serialize};

use super::ProblemSpec;
use crate::error::{Error, Result};
use crate::vector::SaddleVector;

pub const FD_REL_TOL: f64 = 1e-6;
/// Coordinates whose analytic and numeric values agree to this absolute
/// tolerance pass regardless of their relative error.
pub const FD_ABS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub pass: bool,
}

/// Compares the analytic field with a central-difference gradient of the
/// objective (sign-flipped on the x-block).
pub fn fd_check(p: &ProblemSpec, z: &SaddleVector, h: f64) -> Result<FdReport> {
    p.check_point(z)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let base = z.as_slice();
    if p.objective(base).is_none() {
        return Err(Error::MissingObjective(p.name().to_string()));
    }
    let analytic = p.field_vec(base);
    let mut probe = base.to_vec();
    let mut max_rel_err: f64 = 0.0;
    let mut max_abs_err: f64 = 0.0;
    let mut pass = true;
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        let up = p.objective(&probe).expect("objective checked above");
        probe[i] = base[i] - h;
        let down = p.objective(&probe).expect("objective checked above");
        probe[i] = base[i];

        let mut numeric = (up - down) / (2.0 * h);
        if i < p.n1() {
            numeric = -numeric;
        }
        let abs_err = (numeric - analytic[i]).abs();
        let scale = numeric.abs().max(analytic[i].abs());
        let rel_err = if scale > FD_ABS_TOL { abs_err / scale } else { 0.0 };
        max_abs_err = max_abs_err.max(abs_err);
        max_rel_err = max_rel_err.max(rel_err);
        if !(rel_err < FD_REL_TOL || abs_err < FD_ABS_TOL) {
            pass = false;
        }
    }
    Ok(FdReport {
        max_rel_err,
        max_abs_err,
        pass,
    })
}
