//! Per-iterate probes (field norms, MVI inner products, projected residual)
//! and post-hoc analyses over finished runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::RunResult;
use crate::problems::{evaluate_field, FeasibleSet, ProblemSpec};
use crate::vector::{norm2, SaddleVector};

/// One row of a run trace, evaluated on the noiseless field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: u64,
    pub norm_v: f64,
    pub norm_vx: f64,
    pub norm_vy: f64,
    pub mvi_total: f64,
    pub mvi_x: f64,
    pub mvi_y: f64,
    /// Mean of `|V(z_t)|^2` over iterates `0..=iter`.
    pub avg_sq_norm: f64,
    pub residual: f64,
    pub dist_to_ref: f64,
}

/// Point the MVI probes and `dist_to_ref` are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbeReference {
    /// The problem's known solution.
    #[default]
    Analytic,
    /// The last iterate of the run.
    Final,
    /// Analytic x-block, y-block taken from the last iterate.
    OneSided,
    Literal(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MviProbe {
    pub total: f64,
    pub x_sided: f64,
    pub y_sided: f64,
}

/// `<-V(z), z - zref>` split into its x and y parts; `total` is their sum.
pub fn mvi_probe(p: &ProblemSpec, z: &SaddleVector, zref: &SaddleVector) -> Result<MviProbe> {
    z.check_shape(zref)?;
    let v = evaluate_field(p, z)?;
    Ok(mvi_from_field(v.as_slice(), z.as_slice(), zref.as_slice(), p.n1()))
}

pub(crate) fn mvi_from_field(v: &[f64], z: &[f64], zref: &[f64], n1: usize) -> MviProbe {
    let side = |r: std::ops::Range<usize>| -> f64 {
        r.map(|i| -v[i] * (z[i] - zref[i])).sum()
    };
    let x_sided = side(0..n1);
    let y_sided = side(n1..z.len());
    MviProbe {
        total: x_sided + y_sided,
        x_sided,
        y_sided,
    }
}

/// `|z - proj(z + eta V(z))|`, which is `eta |V(z)|` when unconstrained.
pub fn residual(p: &ProblemSpec, z: &SaddleVector, eta: f64, feasible: &FeasibleSet) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let v = evaluate_field(p, z)?;
    Ok(residual_from_field(v.as_slice(), z.as_slice(), eta, feasible))
}

pub(crate) fn residual_from_field(v: &[f64], z: &[f64], eta: f64, feasible: &FeasibleSet) -> f64 {
    if feasible.is_unconstrained() {
        return eta * norm2(v);
    }
    let moved: Vec<f64> = z.iter().zip(v).map(|(zi, vi)| zi + eta * vi).collect();
    let projected = feasible.project(&moved);
    crate::vector::dist2(z, &projected)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(ln n, ln value)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points
        .iter()
        .find(|(n, v)| !(*n >= 1.0 && n.is_finite() && *v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs n >= 1 and positive values, got ({n}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub status: AuditStatus,
    /// Why the audit was skipped, when it was.
    pub reason: Option<String>,
    pub grad_bound: Option<f64>,
    pub momentum_max_norm: f64,
    pub velocity_max: Option<f64>,
    /// Largest excess over the bound (0 when within it).
    pub momentum_excess: f64,
    pub velocity_excess: f64,
    pub monotonicity_violations: u64,
}

const LEMMA_SLACK: f64 = 1e-12;

/// Checks the first/second-moment bounds `|m| <= G`, `v_i <= G^2` and the
/// preconditioner monotonicity chain, when the run satisfied the bounded-
/// oracle hypothesis. Otherwise reports `NotApplicable`, never `Fail`.
pub fn lemma_audit(result: &RunResult, p: &ProblemSpec) -> LemmaReport {
    let mut report = LemmaReport {
        status: AuditStatus::NotApplicable,
        reason: None,
        grad_bound: p.grad_bound(),
        momentum_max_norm: result.momentum_max_norm,
        velocity_max: result.velocity_max,
        momentum_excess: 0.0,
        velocity_excess: 0.0,
        monotonicity_violations: result.monotonicity.violations,
    };
    let Some(g) = p.grad_bound() else {
        report.reason = Some(format!("problem `{}` declares no gradient bound", p.name()));
        return report;
    };
    if !result.noise.bounded_by(g) {
        report.reason = Some("oracle noise is not bounded by G".into());
        return report;
    }
    if result.max_oracle_norm > g {
        report.reason = Some(format!(
            "realized oracle norm {} exceeds G = {g}",
            result.max_oracle_norm
        ));
        return report;
    }
    report.momentum_excess = (result.momentum_max_norm - g).max(0.0);
    report.velocity_excess = result.velocity_max.map_or(0.0, |v| (v - g * g).max(0.0));
    let ok = result.momentum_max_norm <= g + LEMMA_SLACK
        && result.velocity_max.is_none_or(|v| v <= g * g + LEMMA_SLACK)
        && result.monotonicity.violations == 0;
    report.status = if ok { AuditStatus::Pass } else { AuditStatus::Fail };
    report
}

/// Smallest `alpha >= 0` with `s_k <= 2 delta k^alpha` for every recorded
/// `k`, where `s_k` is the largest per-coordinate cumulative gradient norm
/// after iteration `k`.
pub fn cumulative_gradient_exponent(result: &RunResult, delta: f64) -> f64 {
    exponent_from_norms(&result.cumulative_norms, delta)
}

/// As [`cumulative_gradient_exponent`] over `norms[k - 1] = s_k`.
pub fn exponent_from_norms(norms: &[f64], delta: f64) -> f64 {
    norms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, s)| ((s / (2.0 * delta)).ln() / ((i + 1) as f64).ln()).max(0.0))
        .fold(0.0, f64::max)
}

/// Running mean of `f(row)^2` over consecutive rows.
pub fn running_mean_sq(rows: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
    let mut acc = 0.0;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            acc += f(r).powi(2);
            acc / (i + 1) as f64
        })
        .collect()
}

/// Residual of `mvi_total = mvi_x + mvi_y`, relative to the larger part.
pub fn decomposition_error(row: &TraceRow) -> f64 {
    let scale = row.mvi_x.abs().max(row.mvi_y.abs()).max(f64::MIN_POSITIVE);
    (row.mvi_total - (row.mvi_x + row.mvi_y)).abs() / scale
}

pub(crate) fn field_norms(v: &[f64], n1: usize) -> (f64, f64, f64) {
    (norm2(v), norm2(&v[..n1]), norm2(&v[n1..]))
}
