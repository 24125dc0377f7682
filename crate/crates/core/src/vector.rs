//! Points and field values of a saddle problem, each carrying the split
//! between the min-block `x` (first `n1` coordinates) and the max-block `y`
//! (remaining `n2` coordinates).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! split_vector {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            data: Vec<f64>,
            n1: usize,
        }

        impl $name {
            /// Wraps `data` with the first `n1` entries as the x-block.
            ///
            /// Both blocks must be nonempty and every entry finite.
            pub fn new(data: Vec<f64>, n1: usize) -> Result<Self> {
                if n1 == 0 || n1 >= data.len() {
                    return Err(Error::shape(
                        "n1 >= 1 and n2 >= 1",
                        format!("n1 = {}, d = {}", n1, data.len()),
                    ));
                }
                if let Some(i) = data.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: format!("{} coordinate {}", $what, i),
                    });
                }
                Ok(Self { data, n1 })
            }

            pub fn zeros(n1: usize, n2: usize) -> Result<Self> {
                Self::new(vec![0.0; n1 + n2], n1)
            }

            pub fn from_blocks(x: &[f64], y: &[f64]) -> Result<Self> {
                let mut data = Vec::with_capacity(x.len() + y.len());
                data.extend_from_slice(x);
                data.extend_from_slice(y);
                Self::new(data, x.len())
            }

            #[inline]
            pub fn n1(&self) -> usize {
                self.n1
            }

            #[inline]
            pub fn n2(&self) -> usize {
                self.data.len() - self.n1
            }

            #[inline]
            pub fn dim(&self) -> usize {
                self.data.len()
            }

            #[inline]
            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            #[inline]
            pub fn x(&self) -> &[f64] {
                &self.data[..self.n1]
            }

            #[inline]
            pub fn y(&self) -> &[f64] {
                &self.data[self.n1..]
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn norm(&self) -> f64 {
                norm2(&self.data)
            }

            pub fn same_shape<T: Blocks>(&self, other: &T) -> bool {
                self.n1 == other.n1() && self.dim() == other.dim()
            }

            #[allow(dead_code)]
            pub(crate) fn check_shape<T: Blocks>(&self, other: &T) -> Result<()> {
                if self.same_shape(other) {
                    Ok(())
                } else {
                    Err(Error::shape(
                        format!("(n1, n2) = ({}, {})", other.n1(), other.dim() - other.n1()),
                        format!("({}, {})", self.n1, self.n2()),
                    ))
                }
            }
        }

        impl Blocks for $name {
            fn n1(&self) -> usize {
                self.n1
            }
            fn dim(&self) -> usize {
                self.data.len()
            }
        }
    };
}

/// Anything with an `(n1, n2)` block layout.
pub trait Blocks {
    fn n1(&self) -> usize;
    fn dim(&self) -> usize;
}

split_vector!(
    /// A point `z = (x, y)`.
    SaddleVector,
    "point"
);

split_vector!(
    /// The update field `V(z) = (-grad_x phi, grad_y phi)` evaluated somewhere.
    FieldValue,
    "field value"
);

/// Returns copies of the x- and y-blocks.
pub fn split(z: &SaddleVector) -> (Vec<f64>, Vec<f64>) {
    (z.x().to_vec(), z.y().to_vec())
}

/// Inverse of [`split`].
pub fn join(x: &[f64], y: &[f64]) -> Result<SaddleVector> {
    SaddleVector::from_blocks(x, y)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}
