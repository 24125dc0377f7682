//! Diagonal preconditioners and the AMSGrad moment bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `H = offset * I + Diag(diag)`, stored as the two pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPreconditioner {
    offset: f64,
    diag: Vec<f64>,
}

impl DiagonalPreconditioner {
    pub fn new(offset: f64, diag: Vec<f64>) -> Result<Self> {
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "preconditioner offset must be positive and finite, got {offset}"
            )));
        }
        if let Some(bad) = diag.iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "preconditioner diagonal must be nonnegative, got {bad}"
            )));
        }
        Ok(Self { offset, diag })
    }

    /// `offset * I + Diag(sqrt(second_moment))`.
    pub fn from_second_moment(offset: f64, second_moment: &[f64]) -> Result<Self> {
        Self::new(offset, second_moment.iter().map(|v| v.sqrt()).collect())
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Effective diagonal entry `offset + diag[i]`.
    #[inline]
    pub fn entry(&self, i: usize) -> f64 {
        self.offset + self.diag[i]
    }

    /// `H^{-1} g`, elementwise.
    pub fn apply_inverse(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.diag.len() {
            return Err(Error::shape(self.diag.len(), g.len()));
        }
        Ok(g.iter()
            .enumerate()
            .map(|(i, gi)| gi / self.entry(i))
            .collect())
    }
}

/// First and second moments of the extra-gradient AMSGrad family.
///
/// `m`/`v` are the moments after the base-point gradient, `m_hat`/`v_hat`
/// after the shadow-point gradient. Baselines without a shadow step only
/// use `m`/`v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    pub m: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
}

impl MomentumState {
    pub fn zeros(d: usize) -> Self {
        Self {
            m: vec![0.0; d],
            m_hat: vec![0.0; d],
            v: vec![0.0; d],
            v_hat: vec![0.0; d],
        }
    }
}

/// `max(beta2 * v_prev + (1 - beta2) * g^2, v_prev)` elementwise.
pub fn amsgrad_velocity_update(v_prev: &[f64], g: &[f64], beta2: f64) -> Vec<f64> {
    debug_assert_eq!(v_prev.len(), g.len());
    v_prev
        .iter()
        .zip(g)
        .map(|(v, gi)| (beta2 * v + (1.0 - beta2) * gi * gi).max(*v))
        .collect()
}

/// Plain Adam second-moment EMA, without the max rule.
pub fn ema_velocity_update(v_prev: &[f64], g: &[f64], beta2: f64) -> Vec<f64> {
    v_prev
        .iter()
        .zip(g)
        .map(|(v, gi)| beta2 * v + (1.0 - beta2) * gi * gi)
        .collect()
}

/// `beta * prev + (1 - beta) * g` elementwise.
pub(crate) fn momentum_update(prev: &[f64], g: &[f64], beta: f64) -> Vec<f64> {
    prev.iter()
        .zip(g)
        .map(|(p, gi)| beta * p + (1.0 - beta) * gi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn apply_inverse_examples() {
        let h = DiagonalPreconditioner::new(0.5, vec![0.0, 0.5]).unwrap();
        assert_eq!(h.apply_inverse(&[1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
        assert_eq!(h.apply_inverse(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        let h = DiagonalPreconditioner::new(0.25, vec![0.0; 3]).unwrap();
        assert_eq!(
            h.apply_inverse(&[1.0, -2.0, 3.0]).unwrap(),
            vec![4.0, -8.0, 12.0]
        );
    }

    #[test]
    fn apply_inverse_rejects_length_mismatch() {
        let h = DiagonalPreconditioner::new(0.5, vec![0.0, 0.5]).unwrap();
        assert!(matches!(h.apply_inverse(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn rejects_bad_offset_or_diag() {
        assert!(DiagonalPreconditioner::new(0.0, vec![1.0]).is_err());
        assert!(DiagonalPreconditioner::new(1.0, vec![-1.0]).is_err());
        assert!(DiagonalPreconditioner::new(1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn velocity_update_examples() {
        assert_eq!(
            amsgrad_velocity_update(&[1.0, 0.0], &[0.0, 2.0], 0.5),
            vec![1.0, 2.0]
        );
        assert_eq!(
            amsgrad_velocity_update(&[0.3, 0.7], &[0.0, 0.0], 0.9),
            vec![0.3, 0.7]
        );
        assert_eq!(amsgrad_velocity_update(&[0.0], &[3.0], 0.0), vec![9.0]);
    }

    proptest! {
        #[test]
        fn inverse_is_bounded_by_one_over_offset(
            offset in 1e-3f64..10.0,
            pairs in prop::collection::vec((0.0f64..100.0, -100.0f64..100.0), 1..16),
        ) {
            let (diag, g): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let h = DiagonalPreconditioner::new(offset, diag).unwrap();
            let out = h.apply_inverse(&g).unwrap();
            let lhs = crate::vector::norm2(&out);
            let rhs = crate::vector::norm2(&g) / offset;
            prop_assert!(lhs <= rhs * (1.0 + 1e-15));
        }

        #[test]
        fn interleaved_velocity_chain_is_monotone(
            beta2 in 0.0f64..1.0,
            grads in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..40),
        ) {
            let mut v = vec![0.0; 3];
            for g in &grads {
                let next = amsgrad_velocity_update(&v, g, beta2);
                for (a, b) in v.iter().zip(&next) {
                    prop_assert!(b >= a);
                }
                v = next;
            }
        }
    }
}
