//! The iteration driver: steps any optimizer `N` times, records trace rows
//! on the noiseless field and audits the run online.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adagrad::adaptive_extra_gradient;
use super::{
    adam_gda_step, alt_sgda_step, amsgrad_eg_drd_step, amsgrad_eg_step, amsgrad_gda_step, og_step,
    seg_step, sgda_step, AegState, MomentumIterate, OgState, OptimizerKind, Oracle,
};
use crate::diagnostics::{field_norms, mvi_from_field, residual_from_field, ProbeReference, TraceRow};
use crate::error::{Error, Result};
use crate::problems::{NoiseModel, ProblemSpec};
use crate::rng::{stream, StreamPurpose};
use crate::schedule::{BatchSchedule, ScheduleSpec};
use crate::vector::{dist2, SaddleVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub n_iters: usize,
    pub seed: u64,
    pub run_id: u64,
    pub record_trajectory: bool,
    /// Keep every `trace_every`-th row (plus the last one).
    pub trace_every: usize,
    pub probe_reference: ProbeReference,
}

impl RunOptions {
    pub fn new(n_iters: usize, seed: u64) -> Self {
        Self {
            n_iters,
            seed,
            run_id: 0,
            record_trajectory: false,
            trace_every: 1,
            probe_reference: ProbeReference::Analytic,
        }
    }
}

/// Outcome of checking that the preconditioner sequence never decreased.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MonotonicityAudit {
    /// False for optimizers without a monotone preconditioner.
    pub checked: bool,
    pub violations: u64,
    /// Largest decrease observed in any coordinate.
    pub worst: f64,
}

impl MonotonicityAudit {
    fn observe(&mut self, before: &[f64], after: &[f64]) {
        for (b, a) in before.iter().zip(after) {
            if a < b {
                self.violations += 1;
                self.worst = self.worst.max(b - a);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub kind: OptimizerKind,
    pub noise: NoiseModel,
    /// Iterates `z_0 .. z_{N-1}` when requested.
    pub trajectory: Option<Vec<SaddleVector>>,
    pub trace: Vec<TraceRow>,
    /// The uniformly selected iterate `z_t`, `t = selected_index`.
    pub output: SaddleVector,
    pub selected_index: usize,
    /// `z_N`.
    pub last: SaddleVector,
    /// Iterate among `z_0 .. z_{N-1}` with the smallest field norm.
    pub min_grad_iterate: SaddleVector,
    pub min_grad_index: usize,
    pub reference: SaddleVector,
    /// Largest `|z_t|` over `t = 0..=N`.
    pub max_norm_seen: f64,
    /// Largest `|m|`, `|m_hat|` for Adam-type methods; for the others the
    /// largest oracle estimate norm, which plays the same role.
    pub momentum_max_norm: f64,
    /// Largest velocity coordinate (Adam-type methods only).
    pub velocity_max: Option<f64>,
    pub max_oracle_norm: f64,
    pub monotonicity: MonotonicityAudit,
    /// `max_i sqrt(sumsq_i)` after each iteration (AdaGrad methods only).
    pub cumulative_norms: Vec<f64>,
    pub evaluations: u64,
    pub samples: u64,
    pub warnings: Vec<String>,
}

enum Stepper {
    Plain(SaddleVector),
    Og(OgState),
    Momentum(MomentumIterate),
    AdaGrad(AegState),
}

impl Stepper {
    fn new(kind: OptimizerKind, z0: SaddleVector) -> Self {
        if kind.has_momentum() {
            Stepper::Momentum(MomentumIterate::new(z0))
        } else if kind.is_adagrad() {
            Stepper::AdaGrad(AegState::new(z0))
        } else if kind == OptimizerKind::Og {
            Stepper::Og(OgState::new(z0))
        } else {
            Stepper::Plain(z0)
        }
    }

    fn z(&self) -> &SaddleVector {
        match self {
            Stepper::Plain(z) => z,
            Stepper::Og(s) => &s.z,
            Stepper::Momentum(s) => &s.z,
            Stepper::AdaGrad(s) => &s.z,
        }
    }

    fn into_z(self) -> SaddleVector {
        match self {
            Stepper::Plain(z) => z,
            Stepper::Og(s) => s.z,
            Stepper::Momentum(s) => s.z,
            Stepper::AdaGrad(s) => s.z,
        }
    }
}

/// Guardrail messages for a configuration that leaves the analysed regime.
pub fn step_size_warnings(kind: OptimizerKind, p: &ProblemSpec, sched: &ScheduleSpec) -> Vec<String> {
    let mut out = Vec::new();
    if let (true, Some(l)) = (kind.has_step_size_condition(), p.lipschitz()) {
        let limit = sched.delta / (3.0 * l);
        if sched.eta > limit {
            out.push(format!(
                "eta = {} exceeds delta / (3L) = {limit:e} for {kind} on {}",
                sched.eta,
                p.name()
            ));
        }
    }
    out
}

pub fn run(
    kind: OptimizerKind,
    p: &ProblemSpec,
    noise: &NoiseModel,
    sched: &ScheduleSpec,
    z0: &SaddleVector,
    opts: &RunOptions,
) -> Result<RunResult> {
    let n = opts.n_iters;
    if n == 0 {
        return Err(Error::InvalidArgument("number of iterations must be at least 1".into()));
    }
    if opts.trace_every == 0 {
        return Err(Error::InvalidArgument("trace_every must be at least 1".into()));
    }
    sched.validate()?;
    noise.validate()?;
    p.check_point(z0)?;
    if kind.is_adagrad() && !matches!(sched.batch, BatchSchedule::Constant { .. }) {
        return Err(Error::InvalidArgument(format!("{kind} requires a constant batch size")));
    }
    let fixed_ref = match &opts.probe_reference {
        ProbeReference::Analytic => Some(analytic_reference(p)?.clone()),
        ProbeReference::OneSided => {
            analytic_reference(p)?;
            None
        }
        ProbeReference::Final => None,
        ProbeReference::Literal(v) => Some(SaddleVector::new(v.clone(), p.n1())?),
    };
    if let Some(r) = &fixed_ref {
        p.check_point(r)?;
    }

    let selected_index = stream(opts.seed, opts.run_id, StreamPurpose::OutputSelection)
        .random_range(0..n);
    let mut oracle = Oracle::new(p, *noise, stream(opts.seed, opts.run_id, StreamPurpose::Noise));
    let mut state = Stepper::new(kind, z0.clone());

    let mut monotonicity = MonotonicityAudit {
        checked: kind.has_monotone_preconditioner(),
        ..Default::default()
    };
    let mut momentum_max_norm: f64 = 0.0;
    let mut velocity_max: Option<f64> = kind.has_momentum().then_some(0.0);
    let mut cumulative_norms = Vec::new();
    let mut max_norm_seen = z0.norm();
    let mut trajectory = opts.record_trajectory.then(|| Vec::with_capacity(n));
    // Rows wait for their reference point, which may be the last iterate.
    let mut pending: Vec<(TraceRow, SaddleVector, Vec<f64>)> = Vec::new();
    let mut output = None;
    let mut min_grad = (f64::INFINITY, 0usize, z0.clone());
    let mut sq_sum = 0.0;

    for k in 1..=n {
        let t = k - 1;
        let z = state.z();
        let v = p.field_vec(z.as_slice());
        let (norm_v, norm_vx, norm_vy) = field_norms(&v, p.n1());
        sq_sum += norm_v * norm_v;
        if norm_v < min_grad.0 {
            min_grad = (norm_v, t, z.clone());
        }
        if t == selected_index {
            output = Some(z.clone());
        }
        if let Some(traj) = trajectory.as_mut() {
            traj.push(z.clone());
        }
        if t % opts.trace_every == 0 || t == n - 1 {
            let row = TraceRow {
                iter: t as u64,
                norm_v,
                norm_vx,
                norm_vy,
                mvi_total: 0.0,
                mvi_x: 0.0,
                mvi_y: 0.0,
                avg_sq_norm: sq_sum / k as f64,
                residual: residual_from_field(&v, z.as_slice(), sched.eta, p.feasible()),
                dist_to_ref: 0.0,
            };
            pending.push((row, z.clone(), v));
        }

        state = match state {
            Stepper::Plain(z) => {
                let batch = sched.eval_batch(k);
                Stepper::Plain(match kind {
                    OptimizerKind::Sgda => sgda_step(&mut oracle, &z, sched.eta, batch)?,
                    OptimizerKind::AltSgda => alt_sgda_step(&mut oracle, &z, sched.eta, batch)?,
                    OptimizerKind::Seg => {
                        seg_step(&mut oracle, &z, sched.eta, batch, p.feasible())?
                    }
                    _ => unreachable!("plain stepper for {kind}"),
                })
            }
            Stepper::Og(s) => Stepper::Og(og_step(&mut oracle, &s, sched.eta, sched.eval_batch(k))?),
            Stepper::Momentum(s) => {
                let next = match kind {
                    OptimizerKind::AdamGda => adam_gda_step(&mut oracle, &s, sched, k)?,
                    OptimizerKind::AmsgradGda => amsgrad_gda_step(&mut oracle, &s, sched, k)?,
                    OptimizerKind::AmsgradEg => amsgrad_eg_step(&mut oracle, &s, sched, k)?,
                    OptimizerKind::AmsgradEgDrd => amsgrad_eg_drd_step(&mut oracle, &s, sched, k)?,
                    _ => unreachable!("momentum stepper for {kind}"),
                };
                audit_momentum(kind, &s, &next, &mut monotonicity);
                let mm = &next.moments;
                momentum_max_norm = momentum_max_norm
                    .max(crate::vector::norm2(&mm.m))
                    .max(crate::vector::norm2(&mm.m_hat));
                let vmax = mm.v.iter().chain(&mm.v_hat).fold(0.0f64, |a, b| a.max(*b));
                velocity_max = velocity_max.map(|cur| cur.max(vmax));
                Stepper::Momentum(next)
            }
            Stepper::AdaGrad(s) => {
                let decay = sched.dual_decay.unwrap_or(kind.default_dual_decay());
                let next = adaptive_extra_gradient(
                    &mut oracle,
                    &s,
                    sched.eta,
                    sched.delta,
                    sched.eval_batch(k),
                    decay.factor(k),
                )?;
                monotonicity.observe(&s.acc.sumsq, &next.acc.sumsq_at_shadow);
                monotonicity.observe(&next.acc.sumsq_at_shadow, &next.acc.sumsq);
                cumulative_norms.push(next.acc.max_cumulative_norm());
                Stepper::AdaGrad(next)
            }
        };
        max_norm_seen = max_norm_seen.max(state.z().norm());
    }

    let last = state.into_z();
    let reference = match (&opts.probe_reference, fixed_ref) {
        (_, Some(r)) => r,
        (ProbeReference::OneSided, None) => {
            let analytic = analytic_reference(p)?;
            SaddleVector::from_blocks(analytic.x(), last.y())?
        }
        _ => last.clone(),
    };
    let trace = pending
        .into_iter()
        .map(|(mut row, z, v)| {
            let probe = mvi_from_field(&v, z.as_slice(), reference.as_slice(), p.n1());
            row.mvi_total = probe.total;
            row.mvi_x = probe.x_sided;
            row.mvi_y = probe.y_sided;
            row.dist_to_ref = dist2(z.as_slice(), reference.as_slice());
            row
        })
        .collect();

    if !kind.has_momentum() {
        momentum_max_norm = oracle.max_norm();
    }
    Ok(RunResult {
        kind,
        noise: *noise,
        trajectory,
        trace,
        output: output.expect("selected index lies in 0..N"),
        selected_index,
        last,
        min_grad_iterate: min_grad.2,
        min_grad_index: min_grad.1,
        reference,
        max_norm_seen,
        momentum_max_norm,
        velocity_max,
        max_oracle_norm: oracle.max_norm(),
        monotonicity,
        cumulative_norms,
        evaluations: oracle.evaluations(),
        samples: oracle.samples(),
        warnings: step_size_warnings(kind, p, sched),
    })
}

fn analytic_reference(p: &ProblemSpec) -> Result<&SaddleVector> {
    p.reference().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "problem `{}` has no analytic reference point; use `final` or a literal",
            p.name()
        ))
    })
}

/// Chains `..., v_hat_{k-1}, v_k, v_hat_k` (extra-gradient) or
/// `v_{k-1}, v_k` (simultaneous) through the audit.
fn audit_momentum(
    kind: OptimizerKind,
    prev: &MomentumIterate,
    next: &MomentumIterate,
    audit: &mut MonotonicityAudit,
) {
    match kind {
        OptimizerKind::AmsgradEg | OptimizerKind::AmsgradEgDrd => {
            audit.observe(&prev.moments.v_hat, &next.moments.v);
            audit.observe(&next.moments.v, &next.moments.v_hat);
        }
        OptimizerKind::AmsgradGda => audit.observe(&prev.moments.v, &next.moments.v),
        _ => {}
    }
}
