use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::norm2;

/// Closed convex feasible set with a cheap Euclidean projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeasibleSet {
    Unconstrained,
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl FeasibleSet {
    pub fn ball(radius: f64) -> Self {
        FeasibleSet::Ball {
            radius,
            center: None,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            FeasibleSet::Unconstrained => Ok(()),
            FeasibleSet::Ball { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                match center {
                    Some(c) if c.len() != d => Err(Error::shape(d, c.len())),
                    _ => Ok(()),
                }
            }
            FeasibleSet::Box { lo, hi } => {
                if lo.len() != d || hi.len() != d {
                    return Err(Error::shape(d, format!("lo {} / hi {}", lo.len(), hi.len())));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidArgument("box requires lo <= hi".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, FeasibleSet::Unconstrained)
    }

    /// Largest Euclidean norm of any feasible point, if the set is bounded.
    pub fn max_norm(&self) -> Option<f64> {
        match self {
            FeasibleSet::Unconstrained => None,
            FeasibleSet::Ball { radius, center } => {
                Some(radius + center.as_deref().map_or(0.0, norm2))
            }
            FeasibleSet::Box { lo, hi } => {
                let far: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l.abs().max(h.abs())).collect();
                Some(norm2(&far))
            }
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Ball { radius, center } => offset_norm(p, center.as_deref()) <= *radius,
            FeasibleSet::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained => p.to_vec(),
            FeasibleSet::Ball { radius, center } => {
                let r = offset_norm(p, center.as_deref());
                if r <= *radius {
                    return p.to_vec();
                }
                let scale = radius / r;
                match center {
                    None => p.iter().map(|v| v * scale).collect(),
                    Some(c) => p
                        .iter()
                        .zip(c)
                        .map(|(v, ci)| ci + (v - ci) * scale)
                        .collect(),
                }
            }
            FeasibleSet::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
        }
    }
}

fn offset_norm(p: &[f64], center: Option<&[f64]>) -> f64 {
    match center {
        None => norm2(p),
        Some(c) => crate::vector::dist2(p, c),
    }
}

/// Free-function form of [`FeasibleSet::project`].
pub fn project(set: &FeasibleSet, p: &[f64]) -> Vec<f64> {
    set.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::dist2;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let ball = FeasibleSet::ball(1.0);
        let p = ball.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(ball.project(&[0.1, 0.2]), vec![0.1, 0.2]);

        let bx = FeasibleSet::Box {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
        };
        assert_eq!(bx.project(&[2.0, -0.5]), vec![1.0, -0.5]);
        assert_eq!(FeasibleSet::Unconstrained.project(&[5.0]), vec![5.0]);
    }

    #[test]
    fn validation() {
        assert!(FeasibleSet::ball(0.0).validate(2).is_err());
        assert!(FeasibleSet::Box {
            lo: vec![1.0],
            hi: vec![0.0]
        }
        .validate(1)
        .is_err());
        assert!(FeasibleSet::Ball {
            radius: 1.0,
            center: Some(vec![0.0])
        }
        .validate(2)
        .is_err());
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        prop_oneof![
            Just(FeasibleSet::Unconstrained),
            (0.1f64..5.0, prop::collection::vec(-2.0f64..2.0, 3)).prop_map(|(r, c)| {
                FeasibleSet::Ball {
                    radius: r,
                    center: Some(c),
                }
            }),
            prop::collection::vec((-3.0f64..0.0, 0.0f64..3.0), 3).prop_map(|b| {
                let (lo, hi) = b.into_iter().unzip();
                FeasibleSet::Box { lo, hi }
            }),
        ]
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            set in arb_set(),
            p in prop::collection::vec(-10.0f64..10.0, 3),
            q in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            let pp = set.project(&p);
            let pq = set.project(&q);
            prop_assert!(set.contains(&pp) || dist2(&set.project(&pp), &pp) < 1e-12);
            let twice = set.project(&pp);
            prop_assert!(dist2(&twice, &pp) <= 1e-12);
            prop_assert!(dist2(&pp, &pq) <= dist2(&p, &q) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
