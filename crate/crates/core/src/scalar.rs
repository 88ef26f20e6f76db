//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
///
/// Panics only if `T` cannot represent finite `f64` values, which never
/// happens for `f32`/`f64`.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Converts an index or count into `T`.
#[inline]
pub fn from_usize<T: Real>(v: usize) -> T {
    T::from_usize(v).expect("count representable in scalar type")
}

/// Lossy conversion to `f64`, used for reporting.
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Numerical tolerances used by solvers and checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Relative tolerance for scalar root solves.
    pub root: T,
    /// Absolute tolerance for duality identities (Young, Fenchel equality at the resolvent).
    pub identity: T,
    /// Relative residual tolerance for linear solves.
    pub lin: T,
    /// Absolute tolerance for sub-Markov and Jensen checks.
    pub mark: T,
    /// Relative tolerance for estimate report margins.
    pub report: T,
}

impl<T: Real> Tolerances<T> {
    /// Defaults scaled to the precision of `T`.
    pub fn for_scalar() -> Self {
        let eps = T::epsilon();
        let scale = |base: f64, k: f64| lit::<T>(base).max(eps * lit(k));
        Self {
            root: scale(1e-12, 16.0),
            identity: scale(1e-9, 256.0),
            lin: scale(1e-12, 64.0),
            mark: scale(1e-10, 64.0),
            report: scale(1e-9, 256.0),
        }
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self::for_scalar()
    }
}

/// Sum using pairwise reduction, independent of how the slice was produced.
pub fn pairwise_sum<T: Real>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        n if n <= 8 => v.iter().fold(T::zero(), |a, &b| a + b),
        n => {
            let (l, r) = v.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
