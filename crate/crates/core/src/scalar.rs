//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the operators are generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for structural checks such as "a mass function sums to one".
    const SUM_TOL: f64;

    /// Converts a literal or configured threshold into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits scalar type")
    }

    #[inline]
    fn sum_tol() -> Self {
        Self::lit(Self::SUM_TOL)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {
    const SUM_TOL: f64 = 1e-5;
}

impl Real for f64 {
    const SUM_TOL: f64 = 1e-12;
}

/// Sum of a slice.
#[inline]
pub(crate) fn sum<S: Real>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, &x| acc + x)
}

/// Inner product of two equally long slices.
#[inline]
pub(crate) fn dot<S: Real>(p: &[S], f: &[S]) -> S {
    p.iter().zip(f).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
}
