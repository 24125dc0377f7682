use proptest::prelude::*;
use saddle::*;

fn point(v: &[f64]) -> SaddleVector {
    SaddleVector::new(v.to_vec(), v.len() / 2).unwrap()
}

fn final_norm(kind: OptimizerKind, sched: &ScheduleSpec, z0: &SaddleVector, n: usize) -> f64 {
    let r = run(kind, &ProblemSpec::bilinear_xy(), &NoiseModel::None, sched, z0, &RunOptions::new(n, 0)).unwrap();
    r.last.norm()
}

fn unit_start(theta: f64) -> SaddleVector {
    point(&[theta.cos(), theta.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extragradient_family_contracts_on_bilinear(eta in 0.01f64..=0.2, theta in 0.0f64..std::f64::consts::TAU) {
        let z0 = unit_start(theta);
        let plain = ScheduleSpec { eta, ..Default::default() };
        for kind in [OptimizerKind::Seg, OptimizerKind::Og] {
            let n = final_norm(kind, &plain, &z0, 500);
            prop_assert!(n < 1.0, "{kind}: |z_N| = {n}");
        }
        // Heavy constant momentum makes AMSGrad-EG orbit outward here; without it, it contracts.
        let no_momentum = ScheduleSpec { eta, beta1: Beta1Schedule::Constant { value: 0.0 }, ..Default::default() };
        let n = final_norm(OptimizerKind::AmsgradEg, &no_momentum, &z0, 500);
        prop_assert!(n < 1.0, "amsgrad_eg: |z_N| = {n}");
    }

    #[test]
    fn simultaneous_gda_does_not_contract(eta in 0.01f64..=0.2, theta in 0.0f64..std::f64::consts::TAU) {
        let z0 = unit_start(theta);
        let s = ScheduleSpec { eta, ..Default::default() };
        let sgda = final_norm(OptimizerKind::Sgda, &s, &z0, 500);
        let expected = (1.0 + eta * eta).powf(250.0);
        prop_assert!((sgda / expected - 1.0).abs() < 1e-9);
        let adam = final_norm(OptimizerKind::AdamGda, &s, &z0, 500);
        prop_assert!(adam >= 1.0, "adam_gda: |z_N| = {adam}");
    }

    // Alternating GDA conserves x^2 + y^2 - eta*x*y on xy, so the norm neither
    // grows nor decays: it stays on that ellipse.
    #[test]
    fn alternating_gda_conserves_its_quadratic(eta in 0.01f64..=0.2, theta in 0.0f64..std::f64::consts::TAU) {
        let z0 = unit_start(theta);
        let s = ScheduleSpec { eta, ..Default::default() };
        let r = run(OptimizerKind::AltSgda, &ProblemSpec::bilinear_xy(), &NoiseModel::None, &s, &z0, &RunOptions::new(500, 0)).unwrap();
        let q = |z: &[f64]| z[0] * z[0] + z[1] * z[1] - eta * z[0] * z[1];
        prop_assert!((q(r.last.as_slice()) - q(z0.as_slice())).abs() < 1e-10);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), kind_ix in 0usize..OptimizerKind::ALL.len(), sigma in 0.0f64..0.5) {
        let kind = OptimizerKind::ALL[kind_ix];
        let p = ProblemSpec::dirac_gan();
        let noise = if sigma > 0.0 { NoiseModel::Gaussian { sigma } } else { NoiseModel::None };
        let s = ScheduleSpec { eta: 0.05, ..Default::default() };
        let z0 = point(&[0.5, 0.5]);
        let opts = RunOptions::new(60, seed);
        let a = run(kind, &p, &noise, &s, &z0, &opts).unwrap();
        let b = run(kind, &p, &noise, &s, &z0, &opts).unwrap();
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.selected_index, b.selected_index);
        prop_assert_eq!(a.last.as_slice(), b.last.as_slice());
    }

    #[test]
    fn momentum_stays_within_the_gradient_bound(
        seed in any::<u64>(),
        eta in 0.005f64..0.2,
        bound in 0.01f64..0.5,
        drd in any::<bool>(),
    ) {
        let p = ProblemSpec::dirac_gan().with_feasible(FeasibleSet::ball(3.0)).unwrap();
        prop_assert!(p.grad_bound().is_some());
        let kind = if drd { OptimizerKind::AmsgradEgDrd } else { OptimizerKind::AmsgradEg };
        let noise = NoiseModel::ClippedGaussian { sigma: 0.3, bound };
        let s = ScheduleSpec { eta, ..Default::default() };
        let r = run(kind, &p, &noise, &s, &point(&[0.5, -0.25]), &RunOptions::new(200, seed)).unwrap();
        let report = lemma_audit(&r, &p);
        let expected = if report.reason.is_some() { AuditStatus::NotApplicable } else { AuditStatus::Pass };
        prop_assert_eq!(report.status, expected, "{:?}", report);
        prop_assert!(r.max_oracle_norm > p.grad_bound().unwrap() || report.status == AuditStatus::Pass);
        prop_assert_eq!(r.monotonicity.violations, 0);
    }
}
