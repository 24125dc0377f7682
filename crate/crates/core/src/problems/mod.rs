//! Analytic saddle problems with a (possibly noisy) first-order oracle.

mod fd;
mod feasible;
mod noise;

pub use fd::{fd_check, FdReport, FD_ABS_TOL, FD_REL_TOL};
pub use feasible::{project, FeasibleSet};
pub use noise::NoiseModel;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{norm2, Blocks, FieldValue, SaddleVector};

/// Which variational-inequality condition the problem provably satisfies
/// at its reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MviClass {
    FullMvi,
    OneSidedMvi,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    /// `phi(u, v) = u^T A v + u^T a + v^T b`, `A` stored row-major `n1 x n2`.
    Bilinear {
        matrix: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `phi(x, y) = |x|^2 / 2 - |y|^2 / 2`
    QuadraticSaddle,
    /// `phi(theta, psi) = f(theta * psi)` with `f(t) = -log(1 + e^-t)`
    DiracGan,
    /// `phi(x, y) = x^2 (1 + sin^2(y) / 2)`
    OneSidedSynthetic,
}

/// Names accepted by [`ProblemSpec::by_name`].
pub const PROBLEM_NAMES: [&str; 4] = [
    "bilinear",
    "quadratic_saddle",
    "dirac_gan",
    "one_sided_synthetic",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    name: String,
    kind: ProblemKind,
    n1: usize,
    n2: usize,
    feasible: FeasibleSet,
    lipschitz: Option<f64>,
    grad_bound: Option<f64>,
    reference: Option<SaddleVector>,
    mvi_class: MviClass,
}

impl ProblemSpec {
    /// Bilinear game with `A` given as rows (`n1` rows of length `n2`).
    pub fn bilinear(matrix: &[Vec<f64>], a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n1 = matrix.len();
        let n2 = matrix.first().map_or(0, Vec::len);
        if n1 == 0 || n2 == 0 || matrix.iter().any(|r| r.len() != n2) {
            return Err(Error::InvalidArgument(
                "bilinear matrix must be a nonempty rectangular array".into(),
            ));
        }
        if a.len() != n1 || b.len() != n2 {
            return Err(Error::shape(
                format!("a: {n1}, b: {n2}"),
                format!("a: {}, b: {}", a.len(), b.len()),
            ));
        }
        let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
        if flat.iter().chain(&a).chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "bilinear coefficients".into(),
            });
        }
        let homogeneous = a.iter().chain(&b).all(|v| *v == 0.0);
        let reference = if homogeneous {
            Some(SaddleVector::zeros(n1, n2)?)
        } else {
            None
        };
        let mut p = Self {
            name: "bilinear".into(),
            kind: ProblemKind::Bilinear { matrix: flat, a, b },
            n1,
            n2,
            feasible: FeasibleSet::Unconstrained,
            lipschitz: None,
            grad_bound: None,
            reference,
            mvi_class: MviClass::FullMvi,
        };
        p.refresh_constants();
        Ok(p)
    }

    /// `phi = x y`.
    pub fn bilinear_xy() -> Self {
        Self::bilinear(&[vec![1.0]], vec![0.0], vec![0.0]).expect("valid constant problem")
    }

    pub fn quadratic_saddle(n1: usize, n2: usize) -> Result<Self> {
        let mut p = Self {
            name: "quadratic_saddle".into(),
            kind: ProblemKind::QuadraticSaddle,
            n1,
            n2,
            feasible: FeasibleSet::Unconstrained,
            lipschitz: None,
            grad_bound: None,
            reference: Some(SaddleVector::zeros(n1, n2)?),
            mvi_class: MviClass::FullMvi,
        };
        p.refresh_constants();
        Ok(p)
    }

    pub fn dirac_gan() -> Self {
        let mut p = Self {
            name: "dirac_gan".into(),
            kind: ProblemKind::DiracGan,
            n1: 1,
            n2: 1,
            feasible: FeasibleSet::Unconstrained,
            lipschitz: None,
            grad_bound: None,
            reference: Some(SaddleVector::zeros(1, 1).expect("1 + 1 blocks")),
            mvi_class: MviClass::FullMvi,
        };
        p.refresh_constants();
        p
    }

    pub fn one_sided_synthetic() -> Self {
        let mut p = Self {
            name: "one_sided_synthetic".into(),
            kind: ProblemKind::OneSidedSynthetic,
            n1: 1,
            n2: 1,
            feasible: FeasibleSet::Unconstrained,
            lipschitz: None,
            grad_bound: None,
            reference: Some(SaddleVector::zeros(1, 1).expect("1 + 1 blocks")),
            mvi_class: MviClass::OneSidedMvi,
        };
        p.refresh_constants();
        p
    }

    /// Built-in problem with default parameters (`phi = xy` for bilinear,
    /// `n1 = n2 = 1` for the quadratic saddle).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "bilinear" => Ok(Self::bilinear_xy()),
            "quadratic_saddle" => Self::quadratic_saddle(1, 1),
            "dirac_gan" => Ok(Self::dirac_gan()),
            "one_sided_synthetic" => Ok(Self::one_sided_synthetic()),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem `{other}`, expected one of {}",
                PROBLEM_NAMES.join(", ")
            ))),
        }
    }

    /// Restricts the problem to `feasible`, which also fixes the Lipschitz
    /// constant and gradient bound for problems that only have local ones.
    pub fn with_feasible(mut self, feasible: FeasibleSet) -> Result<Self> {
        feasible.validate(self.dim())?;
        self.feasible = feasible;
        self.refresh_constants();
        Ok(self)
    }

    pub fn with_reference(mut self, reference: SaddleVector) -> Result<Self> {
        reference.check_shape(&self.shape_probe())?;
        self.reference = Some(reference);
        Ok(self)
    }

    fn refresh_constants(&mut self) {
        let radius = self.feasible.max_norm();
        match &self.kind {
            ProblemKind::Bilinear { matrix, a, b } => {
                // Frobenius norm upper-bounds the spectral norm.
                let fro = norm2(matrix);
                let shift = (norm2(a).powi(2) + norm2(b).powi(2)).sqrt();
                self.lipschitz = Some(fro);
                self.grad_bound = radius.map(|r| fro * r + shift);
            }
            ProblemKind::QuadraticSaddle => {
                self.lipschitz = Some(1.0);
                self.grad_bound = radius;
            }
            ProblemKind::DiracGan => {
                // |f'| <= 1, |f''| <= 1/4; Jacobian bounded entrywise on the ball.
                self.lipschitz = radius.map(|r| {
                    let off = 1.0 + r * r / 8.0;
                    (r.powi(4) / 16.0 + 2.0 * off * off).sqrt()
                });
                self.grad_bound = radius;
            }
            ProblemKind::OneSidedSynthetic => {
                self.lipschitz = radius.map(|r| (9.0 + 2.0 * r * r + r.powi(4)).sqrt());
                self.grad_bound = radius.map(|r| (9.0 * r * r + r.powi(4) / 4.0).sqrt());
            }
        }
    }

    fn shape_probe(&self) -> ShapeOnly {
        ShapeOnly {
            n1: self.n1,
            d: self.n1 + self.n2,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn dim(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    /// Lipschitz constant of `V` over the feasible set, when one exists.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Bound `G` on `|V(z)|_2` over the feasible set, when one exists.
    pub fn grad_bound(&self) -> Option<f64> {
        self.grad_bound
    }

    pub fn reference(&self) -> Option<&SaddleVector> {
        self.reference.as_ref()
    }

    pub fn mvi_class(&self) -> MviClass {
        self.mvi_class
    }

    pub fn has_objective(&self) -> bool {
        true
    }

    pub(crate) fn check_point<T: Blocks>(&self, z: &T) -> Result<()> {
        if z.n1() == self.n1 && z.dim() == self.dim() {
            Ok(())
        } else {
            Err(Error::shape(
                format!("(n1, n2) = ({}, {})", self.n1, self.n2),
                format!("({}, {})", z.n1(), z.dim() - z.n1()),
            ))
        }
    }

    /// `phi(z)`.
    pub fn objective(&self, z: &[f64]) -> Option<f64> {
        let (x, y) = z.split_at(self.n1);
        Some(match &self.kind {
            ProblemKind::Bilinear { matrix, a, b } => {
                let mut acc = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    let row = &matrix[i * self.n2..(i + 1) * self.n2];
                    acc += xi * crate::vector::dot(row, y);
                }
                acc + crate::vector::dot(x, a) + crate::vector::dot(y, b)
            }
            ProblemKind::QuadraticSaddle => {
                0.5 * x.iter().map(|v| v * v).sum::<f64>()
                    - 0.5 * y.iter().map(|v| v * v).sum::<f64>()
            }
            ProblemKind::DiracGan => -softplus(-(x[0] * y[0])),
            ProblemKind::OneSidedSynthetic => {
                let s = y[0].sin();
                x[0] * x[0] * (1.0 + 0.5 * s * s)
            }
        })
    }

    /// Deterministic field `V(z) = (-grad_x phi, grad_y phi)` written into `out`.
    pub(crate) fn field_into(&self, z: &[f64], out: &mut [f64]) {
        let (x, y) = z.split_at(self.n1);
        let (vx, vy) = out.split_at_mut(self.n1);
        match &self.kind {
            ProblemKind::Bilinear { matrix, a, b } => {
                for (i, vxi) in vx.iter_mut().enumerate() {
                    let row = &matrix[i * self.n2..(i + 1) * self.n2];
                    *vxi = -(crate::vector::dot(row, y) + a[i]);
                }
                for (j, vyj) in vy.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (i, xi) in x.iter().enumerate() {
                        acc += matrix[i * self.n2 + j] * xi;
                    }
                    *vyj = acc + b[j];
                }
            }
            ProblemKind::QuadraticSaddle => {
                vx.iter_mut().zip(x).for_each(|(o, v)| *o = -v);
                vy.iter_mut().zip(y).for_each(|(o, v)| *o = -v);
            }
            ProblemKind::DiracGan => {
                let fp = dirac_slope(x[0] * y[0]);
                vx[0] = -fp * y[0];
                vy[0] = fp * x[0];
            }
            ProblemKind::OneSidedSynthetic => {
                let s = y[0].sin();
                vx[0] = -2.0 * x[0] * (1.0 + 0.5 * s * s);
                vy[0] = 0.5 * x[0] * x[0] * (2.0 * y[0]).sin();
            }
        }
    }

    pub(crate) fn field_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.field_into(z, &mut out);
        out
    }
}

struct ShapeOnly {
    n1: usize,
    d: usize,
}

impl Blocks for ShapeOnly {
    fn n1(&self) -> usize {
        self.n1
    }
    fn dim(&self) -> usize {
        self.d
    }
}

/// `f'(t)` for `f(t) = -log(1 + e^-t)`, i.e. `1 / (1 + e^t)`.
fn dirac_slope(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// `V(z)` for the noiseless oracle.
pub fn evaluate_field(p: &ProblemSpec, z: &SaddleVector) -> Result<FieldValue> {
    p.check_point(z)?;
    FieldValue::new(p.field_vec(z.as_slice()), p.n1)
}

/// Mean of `batch` iid oracle samples at `z`.
///
/// With [`NoiseModel::None`] this is exactly [`evaluate_field`].
pub fn sample_gradient<R: Rng + ?Sized>(
    p: &ProblemSpec,
    noise: &NoiseModel,
    z: &SaddleVector,
    batch: usize,
    rng: &mut R,
) -> Result<FieldValue> {
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    p.check_point(z)?;
    if noise.is_deterministic() {
        return evaluate_field(p, z);
    }
    let clean = p.field_vec(z.as_slice());
    let mut acc = vec![0.0; clean.len()];
    let mut sample = vec![0.0; clean.len()];
    for _ in 0..batch {
        sample.copy_from_slice(&clean);
        noise.perturb(&mut sample, rng);
        acc.iter_mut().zip(&sample).for_each(|(a, s)| *a += s);
    }
    let m = batch as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    FieldValue::new(acc, p.n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::{stream, StreamPurpose};
    use crate::vector::{dist2, dot};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pt(v: &[f64]) -> SaddleVector {
        SaddleVector::new(v.to_vec(), 1).unwrap()
    }

    #[test]
    fn field_examples() {
        let v = evaluate_field(&ProblemSpec::bilinear_xy(), &pt(&[1.0, 0.0])).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);

        let q = ProblemSpec::quadratic_saddle(1, 1).unwrap();
        let v = evaluate_field(&q, &pt(&[0.0, 0.0])).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0]);

        let v = evaluate_field(&ProblemSpec::one_sided_synthetic(), &pt(&[1.0, PI / 4.0])).unwrap();
        assert!((v.x()[0] + 2.5).abs() < 1e-15);
        assert!((v.y()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn field_rejects_wrong_shape() {
        let p = ProblemSpec::bilinear_xy();
        let z = SaddleVector::new(vec![1.0, 2.0, 3.0], 1).unwrap();
        assert!(matches!(evaluate_field(&p, &z), Err(Error::Shape { .. })));
    }

    #[test]
    fn deterministic_sampling_is_bitwise_field() {
        let p = ProblemSpec::dirac_gan();
        let z = pt(&[0.3, -0.7]);
        let mut rng = stream(1, 0, StreamPurpose::Noise);
        for batch in [1, 3, 64] {
            let g = sample_gradient(&p, &NoiseModel::None, &z, batch, &mut rng).unwrap();
            assert_eq!(g, evaluate_field(&p, &z).unwrap());
        }
    }

    #[test]
    fn bilinear_general_matrix_field() {
        let p = ProblemSpec::bilinear(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![0.5, 0.0, -0.5],
            vec![1.0, -1.0],
        )
        .unwrap();
        let z = SaddleVector::new(vec![1.0, 0.0, -1.0, 2.0, 3.0], 3).unwrap();
        let v = evaluate_field(&p, &z).unwrap();
        // -(A y + a), A^T x + b
        assert_eq!(v.x(), &[-(8.0 + 0.5), -(18.0), -(28.0 - 0.5)]);
        assert_eq!(v.y(), &[1.0 - 5.0 + 1.0, 2.0 - 6.0 - 1.0]);
        assert!(p.reference().is_none());
    }

    #[test]
    fn metadata() {
        let p = ProblemSpec::bilinear_xy().with_feasible(FeasibleSet::ball(2.0)).unwrap();
        assert_eq!(p.grad_bound(), Some(2.0));
        assert_eq!(p.lipschitz(), Some(1.0));
        assert_eq!(ProblemSpec::dirac_gan().lipschitz(), None);
        assert_eq!(ProblemSpec::one_sided_synthetic().mvi_class(), MviClass::OneSidedMvi);
        assert!(ProblemSpec::by_name("nope").is_err());
        for name in PROBLEM_NAMES {
            assert_eq!(ProblemSpec::by_name(name).unwrap().name(), name);
        }
    }

    #[test]
    fn dirac_gda_norm_identity() {
        let p = ProblemSpec::dirac_gan();
        let eta = 0.1;
        let mut z = vec![0.5, 0.5];
        for _ in 0..200 {
            let v = p.field_vec(&z);
            let fp = dirac_slope(z[0] * z[1]);
            let before = z[0] * z[0] + z[1] * z[1];
            z = vec![z[0] + eta * v[0], z[1] + eta * v[1]];
            let after = z[0] * z[0] + z[1] * z[1];
            let predicted = (1.0 + eta * eta * fp * fp) * before;
            assert!((after - predicted).abs() <= 1e-12 * predicted);
            assert!(after >= before);
        }
    }

    #[test]
    fn gaussian_mean_is_unbiased() {
        let p = ProblemSpec::quadratic_saddle(2, 1).unwrap();
        let z = SaddleVector::new(vec![1.0, -2.0, 0.5], 2).unwrap();
        let clean = evaluate_field(&p, &z).unwrap();
        let sigma = 2.0;
        let noise = NoiseModel::Gaussian { sigma };
        let (m, reps) = (10usize, 2000usize);
        let mut rng = stream(11, 0, StreamPurpose::Noise);
        let mut mean = [0.0; 3];
        for _ in 0..reps {
            let g = sample_gradient(&p, &noise, &z, m, &mut rng).unwrap();
            mean.iter_mut().zip(g.as_slice()).for_each(|(a, b)| *a += b / reps as f64);
        }
        let tol = 4.0 * sigma / ((m * reps) as f64).sqrt();
        for (a, b) in mean.iter().zip(clean.as_slice()) {
            assert!((a - b).abs() < tol, "{a} vs {b}, tol {tol}");
        }
    }

    #[test]
    fn mean_of_batch_variance_scales_with_batch() {
        let p = ProblemSpec::bilinear_xy();
        let z = pt(&[0.4, -0.3]);
        let clean = evaluate_field(&p, &z).unwrap();
        let noise = NoiseModel::Gaussian { sigma: 1.0 };
        let mut rng = stream(5, 0, StreamPurpose::Noise);
        let reps = 10_000;
        let mut total_var = 0.0;
        for _ in 0..reps {
            let g = sample_gradient(&p, &noise, &z, 100, &mut rng).unwrap();
            total_var += dist2(g.as_slice(), clean.as_slice()).powi(2);
        }
        total_var /= reps as f64;
        let d = 2.0;
        assert!(total_var > 0.008 * d && total_var < 0.012 * d, "{total_var}");
    }

    proptest! {
        #[test]
        fn xy_mvi_inner_product_vanishes(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let p = ProblemSpec::bilinear_xy();
            let z = [x, y];
            let v = p.field_vec(&z);
            prop_assert_eq!(-v[0] * z[0] + -v[1] * z[1], 0.0);
        }

        #[test]
        fn homogeneous_bilinear_mvi_inner_product_is_rounding_small(
            entries in prop::collection::vec(-2.0f64..2.0, 6),
            z in prop::collection::vec(-5.0f64..5.0, 5),
        ) {
            let rows: Vec<Vec<f64>> = entries.chunks(3).map(<[f64]>::to_vec).collect();
            let p = ProblemSpec::bilinear(&rows, vec![0.0; 2], vec![0.0; 3]).unwrap();
            let v = p.field_vec(&z);
            let inner = -dot(&v, &z);
            let scale: f64 = v.iter().zip(&z).map(|(a, b)| (a * b).abs()).sum();
            prop_assert!(inner.abs() <= 1e-14 * scale.max(1.0));
        }

        #[test]
        fn one_sided_x_mvi_is_nonnegative(x in -50.0f64..50.0, y in -1e3f64..1e3) {
            let p = ProblemSpec::one_sided_synthetic();
            let v = p.field_vec(&[x, y]);
            prop_assert!(-v[0] * x >= 0.0);
        }

        #[test]
        fn lipschitz_audit(
            which in 0usize..4,
            seed in any::<u64>(),
        ) {
            let radius = 3.0;
            let p = match which {
                0 => ProblemSpec::bilinear(&[vec![1.0, -2.0], vec![0.5, 3.0]], vec![1.0, 0.0], vec![0.0, 2.0]).unwrap(),
                1 => ProblemSpec::quadratic_saddle(2, 2).unwrap(),
                2 => ProblemSpec::dirac_gan(),
                _ => ProblemSpec::one_sided_synthetic(),
            }
            .with_feasible(FeasibleSet::ball(radius))
            .unwrap();
            let l = p.lipschitz().unwrap();
            let mut rng = stream(seed, 0, StreamPurpose::Probe);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                let raw: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-radius..radius)).collect();
                p.feasible().project(&raw)
            };
            for _ in 0..50 {
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                let lhs = dist2(&p.field_vec(&a), &p.field_vec(&b));
                prop_assert!(lhs <= l * dist2(&a, &b) * (1.0 + 1e-12) + 1e-15);
                if let Some(g) = p.grad_bound() {
                    prop_assert!(norm2(&p.field_vec(&a)) <= g * (1.0 + 1e-12));
                }
            }
        }
    }
}
