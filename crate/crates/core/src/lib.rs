//! Extra-gradient and adaptive (Adam/AMSGrad/AdaGrad-type) methods for
//! smooth min-max problems `min_x max_y phi(x, y)`.
//!
//! Everything works on the joint field `V(z) = (-grad_x phi, grad_y phi)`,
//! so every method is an ascent-style update `z' = z + rate * (...)`.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod optimizers;
pub mod precond;
pub mod problems;
pub mod rng;
pub mod schedule;
pub mod vector;

pub use diagnostics::{
    cumulative_gradient_exponent, lemma_audit, mvi_probe, rate_fit, residual, AuditStatus,
    LemmaReport, MviProbe, ProbeReference, RateFit, TraceRow,
};
pub use error::{Error, Result};
pub use optimizers::{run, OptimizerKind, RunOptions, RunResult};
pub use problems::{
    evaluate_field, fd_check, project, sample_gradient, FeasibleSet, MviClass, NoiseModel,
    ProblemSpec,
};
pub use schedule::{Beta1Schedule, BatchSchedule, DualDecay, ScheduleSpec};
pub use vector::{FieldValue, SaddleVector};
