//! Adam-type methods: the simultaneous Adam/AMSGrad descent-ascent
//! baselines and extra-gradient AMSGrad with optional dual rate decay.

use rand::Rng;

use super::{preconditioned_move, Oracle};
use crate::error::Result;
use crate::precond::{
    amsgrad_velocity_update, ema_velocity_update, momentum_update, DiagonalPreconditioner,
    MomentumState,
};
use crate::schedule::{DualDecay, ScheduleSpec};
use crate::vector::SaddleVector;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumIterate {
    pub z: SaddleVector,
    pub moments: MomentumState,
}

impl MomentumIterate {
    /// Starts at `z` with all moments zero.
    pub fn new(z: SaddleVector) -> Self {
        let d = z.dim();
        Self {
            z,
            moments: MomentumState::zeros(d),
        }
    }
}

/// Adam applied to the joint field, no bias correction:
/// `z' = z + eta * m' / (sqrt(v') + delta)`.
pub fn adam_gda_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
) -> Result<MomentumIterate> {
    gda_step(oracle, state, sched, k, false)
}

/// As [`adam_gda_step`] with the velocity kept at its running maximum.
pub fn amsgrad_gda_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
) -> Result<MomentumIterate> {
    gda_step(oracle, state, sched, k, true)
}

fn gda_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
    max_rule: bool,
) -> Result<MomentumIterate> {
    let beta1 = sched.eval_beta1(k)?;
    let g = oracle.sample(&state.z, sched.eval_batch(k))?;
    let m = momentum_update(&state.moments.m, g.as_slice(), beta1);
    let v = if max_rule {
        amsgrad_velocity_update(&state.moments.v, g.as_slice(), sched.beta2)
    } else {
        ema_velocity_update(&state.moments.v, g.as_slice(), sched.beta2)
    };
    let h = DiagonalPreconditioner::from_second_moment(sched.delta, &v)?;
    let z = preconditioned_move(&state.z, &m, &h, sched.eta, sched.eta)?;
    Ok(MomentumIterate {
        z,
        moments: MomentumState {
            m,
            m_hat: state.moments.m_hat.clone(),
            v,
            v_hat: state.moments.v_hat.clone(),
        },
    })
}

/// Extra-gradient AMSGrad, iteration `k >= 1`.
///
/// Uses `sched.dual_decay` for the y-block rate when set, otherwise none.
pub fn amsgrad_eg_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
) -> Result<MomentumIterate> {
    let decay = sched.dual_decay.unwrap_or(DualDecay::None);
    extra_gradient_amsgrad(oracle, state, sched, k, decay)
}

/// Extra-gradient AMSGrad with the y-block rate decayed to `eta / sqrt(k)`
/// (or `sched.dual_decay` when set). Moments are shared across both blocks.
pub fn amsgrad_eg_drd_step<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
) -> Result<MomentumIterate> {
    let decay = sched.dual_decay.unwrap_or(DualDecay::InvSqrt);
    extra_gradient_amsgrad(oracle, state, sched, k, decay)
}

fn extra_gradient_amsgrad<R: Rng>(
    oracle: &mut Oracle<'_, R>,
    state: &MomentumIterate,
    sched: &ScheduleSpec,
    k: usize,
    decay: DualDecay,
) -> Result<MomentumIterate> {
    let beta1 = sched.eval_beta1(k)?;
    let batch = sched.eval_batch(k);
    let rate_x = sched.eta;
    let rate_y = sched.eta * decay.factor(k);
    let prev = &state.moments;

    let g = oracle.sample(&state.z, batch)?;
    let m = momentum_update(&prev.m_hat, g.as_slice(), beta1);
    let v = amsgrad_velocity_update(&prev.v_hat, g.as_slice(), sched.beta2);
    let h = DiagonalPreconditioner::from_second_moment(sched.delta, &v)?;
    let shadow = preconditioned_move(&state.z, &m, &h, rate_x, rate_y)?;

    let g_shadow = oracle.sample(&shadow, batch)?;
    let m_hat = momentum_update(&m, g_shadow.as_slice(), beta1);
    let v_hat = amsgrad_velocity_update(&v, g_shadow.as_slice(), sched.beta2);
    let h_hat = DiagonalPreconditioner::from_second_moment(sched.delta, &v_hat)?;
    let z = preconditioned_move(&state.z, &m_hat, &h_hat, rate_x, rate_y)?;

    Ok(MomentumIterate {
        z,
        moments: MomentumState { m, m_hat, v, v_hat },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{NoiseModel, ProblemSpec};
    use crate::rng::{stream, StreamPurpose};
    use crate::schedule::Beta1Schedule;

    fn pt(v: &[f64]) -> SaddleVector {
        SaddleVector::new(v.to_vec(), 1).unwrap()
    }

    fn oracle(p: &ProblemSpec) -> Oracle<'_, rand_chacha::ChaCha8Rng> {
        Oracle::new(p, NoiseModel::None, stream(0, 0, StreamPurpose::Noise))
    }

    fn hand_sched() -> ScheduleSpec {
        ScheduleSpec {
            beta1: Beta1Schedule::Constant { value: 0.5 },
            beta2: 0.75,
            eta: 0.1,
            delta: 0.5,
            ..ScheduleSpec::default()
        }
    }

    #[test]
    fn adam_gda_first_step() {
        let p = ProblemSpec::bilinear_xy();
        let s = MomentumIterate::new(pt(&[1.0, 0.0]));
        let s1 = adam_gda_step(&mut oracle(&p), &s, &hand_sched(), 1).unwrap();
        assert_eq!(s1.moments.m, vec![0.0, 0.5]);
        assert_eq!(s1.moments.v, vec![0.0, 0.25]);
        assert_eq!(s1.z.as_slice(), &[1.0, 0.05]);
    }

    #[test]
    fn zero_gradients_never_move() {
        let q = ProblemSpec::quadratic_saddle(1, 1).unwrap();
        let mut o = oracle(&q);
        let z0 = pt(&[0.0, 0.0]);
        let sched = hand_sched();
        let mut a = MomentumIterate::new(z0.clone());
        let mut b = MomentumIterate::new(z0.clone());
        let mut c = MomentumIterate::new(z0.clone());
        for k in 1..50 {
            a = adam_gda_step(&mut o, &a, &sched, k).unwrap();
            b = amsgrad_gda_step(&mut o, &b, &sched, k).unwrap();
            c = amsgrad_eg_step(&mut o, &c, &sched, k).unwrap();
        }
        assert_eq!(a.z, z0);
        assert_eq!(b.z, z0);
        assert_eq!(c.z, z0);
    }

    #[test]
    fn amsgrad_gda_velocity_keeps_running_max() {
        // phi = xy: g = (0, 2) at (2, 0), then g = 0 at the origin.
        let p = ProblemSpec::bilinear_xy();
        let sched = hand_sched();
        let mut o = oracle(&p);
        let s = MomentumIterate::new(pt(&[2.0, 0.0]));
        let s1 = amsgrad_gda_step(&mut o, &s, &sched, 1).unwrap();
        assert_eq!(s1.moments.v, vec![0.0, 1.0]);
        let at_origin = MomentumIterate {
            z: pt(&[0.0, 0.0]),
            moments: s1.moments.clone(),
        };
        let s2 = amsgrad_gda_step(&mut o, &at_origin, &sched, 2).unwrap();
        assert_eq!(s2.moments.v, vec![0.0, 1.0]);
        let s2_adam = adam_gda_step(&mut o, &at_origin, &sched, 2).unwrap();
        assert_eq!(s2_adam.moments.v, vec![0.0, 0.75]);
    }

    #[test]
    fn amsgrad_eg_hand_trace() {
        let p = ProblemSpec::bilinear_xy();
        let sched = hand_sched();
        let s1 = amsgrad_eg_step(&mut oracle(&p), &MomentumIterate::new(pt(&[1.0, 0.0])), &sched, 1)
            .unwrap();
        let mm = &s1.moments;
        assert_eq!(mm.m, vec![0.0, 0.5]);
        assert_eq!(mm.v, vec![0.0, 0.25]);
        assert!((mm.m_hat[0] + 0.025).abs() < 1e-16 && (mm.m_hat[1] - 0.75).abs() < 1e-16);
        assert!((mm.v_hat[0] - 0.000625).abs() < 1e-18 && (mm.v_hat[1] - 0.4375).abs() < 1e-16);
        // H_hat = diag(0.525, 0.5 + sqrt(0.4375))
        let h1 = 0.5 + 0.4375f64.sqrt();
        assert!((h1 - 1.161_437_828).abs() < 1e-9);
        let expected = [1.0 + 0.1 * (-0.025 / 0.525), 0.1 * (0.75 / h1)];
        for (a, b) in s1.z.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn unit_beta1_freezes_iterate() {
        let p = ProblemSpec::bilinear_xy();
        let sched = ScheduleSpec {
            beta1: Beta1Schedule::Constant { value: 1.0 },
            ..hand_sched()
        };
        let mut o = oracle(&p);
        let z0 = pt(&[1.0, -0.4]);
        let mut s = MomentumIterate::new(z0.clone());
        for k in 1..20 {
            s = amsgrad_eg_step(&mut o, &s, &sched, k).unwrap();
        }
        assert_eq!(s.z, z0);
        assert!(s.moments.m.iter().chain(&s.moments.m_hat).all(|v| *v == 0.0));
    }

    #[test]
    fn drd_matches_plain_at_first_iteration() {
        let p = ProblemSpec::bilinear_xy();
        let sched = hand_sched();
        let s0 = MomentumIterate::new(pt(&[1.0, 0.0]));
        let a = amsgrad_eg_step(&mut oracle(&p), &s0, &sched, 1).unwrap();
        let b = amsgrad_eg_drd_step(&mut oracle(&p), &s0, &sched, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn drd_halves_y_displacement_at_k4() {
        let q = ProblemSpec::bilinear_xy();
        let sched = ScheduleSpec {
            beta1: Beta1Schedule::Constant { value: 0.0 },
            ..hand_sched()
        };
        let state = MomentumIterate {
            z: pt(&[1.0, 0.0]),
            moments: MomentumState {
                m: vec![0.1, 0.2],
                m_hat: vec![0.3, -0.1],
                v: vec![0.5, 0.5],
                v_hat: vec![1.0, 2.0],
            },
        };
        // beta1 = 0 on phi = xy: the y-moment of the real update is x_hat,
        // which both variants share, so only the rate differs.
        let plain = amsgrad_eg_step(&mut oracle(&q), &state, &sched, 4).unwrap();
        let drd = amsgrad_eg_drd_step(&mut oracle(&q), &state, &sched, 4).unwrap();
        let dy_plain = plain.z.y()[0] - state.z.y()[0];
        let dy_drd = drd.z.y()[0] - state.z.y()[0];
        assert!(dy_plain != 0.0);
        assert!((dy_drd - 0.5 * dy_plain).abs() <= 1e-16 * dy_plain.abs());
        assert_eq!(plain.moments.v_hat[1], drd.moments.v_hat[1]);
    }
}
