//! Hyper-parameter schedules: first-moment decay, batch size and the
//! y-block rate decay used by the dual-rate variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Beta1Schedule {
    Constant { value: f64 },
    /// `beta1 * lambda^(t-1)`
    Exponential { beta1: f64, lambda: f64 },
    /// `1 / t`
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualDecay {
    None,
    /// y-block rate `eta / sqrt(k)`
    InvSqrt,
    /// y-block rate `eta / k`
    InvLinear,
}

impl DualDecay {
    pub fn factor(self, k: usize) -> f64 {
        match self {
            DualDecay::None => 1.0,
            DualDecay::InvSqrt => 1.0 / (k as f64).sqrt(),
            DualDecay::InvLinear => 1.0 / k as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSchedule {
    Constant { size: usize },
    /// `M_k = k + 1`
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub beta1: Beta1Schedule,
    pub beta2: f64,
    pub eta: f64,
    /// Preconditioner offset. Also the sup-norm bound of the oracle in the
    /// convergence analysis; both roles share this one parameter.
    pub delta: f64,
    /// y-block rate decay; `None` means the optimizer's own default.
    pub dual_decay: Option<DualDecay>,
    pub batch: BatchSchedule,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            beta1: Beta1Schedule::Constant { value: 0.9 },
            beta2: 0.99,
            eta: 0.1,
            delta: 1e-8,
            dual_decay: None,
            batch: BatchSchedule::Constant { size: 1 },
        }
    }
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        match self.beta1 {
            Beta1Schedule::Constant { value } if !(0.0..=1.0).contains(&value) => {
                return bad("beta1 must lie in [0, 1]")
            }
            Beta1Schedule::Exponential { beta1, lambda } => {
                if !(0.0..=1.0).contains(&beta1) {
                    return bad("beta1 must lie in [0, 1]");
                }
                if !(lambda > 0.0 && lambda < 1.0) {
                    return bad("lambda must lie in (0, 1)");
                }
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad("beta2 must lie in [0, 1)");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if let BatchSchedule::Constant { size: 0 } = self.batch {
            return bad("constant batch size must be at least 1");
        }
        Ok(())
    }

    pub fn eval_beta1(&self, t: usize) -> Result<f64> {
        eval_beta1(&self.beta1, t)
    }

    pub fn eval_batch(&self, k: usize) -> usize {
        eval_batch(&self.batch, k)
    }
}

/// First-moment coefficient for iteration `t >= 1`.
pub fn eval_beta1(schedule: &Beta1Schedule, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "beta1 schedule is indexed from t = 1".into(),
        ));
    }
    Ok(match *schedule {
        Beta1Schedule::Constant { value } => value,
        Beta1Schedule::Exponential { beta1, lambda } => beta1 * lambda.powi((t - 1) as i32),
        Beta1Schedule::Harmonic => 1.0 / t as f64,
    })
}

/// Batch size for iteration `k >= 1`.
pub fn eval_batch(schedule: &BatchSchedule, k: usize) -> usize {
    match *schedule {
        BatchSchedule::Constant { size } => size,
        BatchSchedule::Linear => k + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta1_examples() {
        let exp = Beta1Schedule::Exponential {
            beta1: 0.9,
            lambda: 0.9,
        };
        assert!((eval_beta1(&exp, 2).unwrap() - 0.81).abs() < 1e-15);
        assert_eq!(eval_beta1(&Beta1Schedule::Harmonic, 4).unwrap(), 0.25);
        assert!(eval_beta1(&Beta1Schedule::Harmonic, 0).is_err());
    }

    #[test]
    fn beta1_partial_sums_stay_below_geometric_limit() {
        let exp = Beta1Schedule::Exponential {
            beta1: 0.9,
            lambda: 0.9,
        };
        let mut sum = 0.0;
        for t in 1..=10_000 {
            let b = eval_beta1(&exp, t).unwrap();
            assert!((0.0..=1.0).contains(&b));
            sum += b;
            assert!(sum < 9.0);
        }
        assert!((sum - 9.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_stays_in_unit_interval() {
        for t in 1..1000 {
            let b = eval_beta1(&Beta1Schedule::Harmonic, t).unwrap();
            assert!(b > 0.0 && b <= 1.0);
        }
    }

    #[test]
    fn batch_examples() {
        assert_eq!(eval_batch(&BatchSchedule::Linear, 3), 4);
        for k in [1, 7, 1000] {
            assert_eq!(eval_batch(&BatchSchedule::Constant { size: 64 }, k), 64);
        }
        let total: usize = (1..=10).map(|k| eval_batch(&BatchSchedule::Linear, k)).sum();
        assert_eq!(total, 65);
    }

    #[test]
    fn validation() {
        let mut s = ScheduleSpec::default();
        assert!(s.validate().is_ok());
        s.beta2 = 1.0;
        assert!(s.validate().is_err());
        let mut s = ScheduleSpec {
            beta1: Beta1Schedule::Exponential {
                beta1: 0.9,
                lambda: 1.0,
            },
            ..ScheduleSpec::default()
        };
        assert!(s.validate().is_err());
        s.beta1 = Beta1Schedule::Harmonic;
        s.batch = BatchSchedule::Constant { size: 0 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn dual_decay_factors() {
        assert_eq!(DualDecay::None.factor(9), 1.0);
        assert_eq!(DualDecay::InvSqrt.factor(4), 0.5);
        assert_eq!(DualDecay::InvLinear.factor(5), 0.2);
        assert_eq!(DualDecay::InvSqrt.factor(1), 1.0);
    }
}
