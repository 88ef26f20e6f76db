//! Discrete time norms of state sequences on a uniform time grid.
//!
//! Time integrals use left-endpoint quadrature with weights `e^{-2 alpha t_n}`
//! (the squared weight of the norm of `t -> e^{-alpha t} f(t)`).

use crate::scalar::{from_usize, Real};
use crate::spatial_operator::DiscreteOperator;

fn weight<T: Real>(alpha: T, dt: T, n: usize) -> T {
    (-(alpha + alpha) * dt * from_usize(n)).exp()
}

/// `max_n e^{-2 alpha t_n} |Y^n|_H^2`.
pub fn sup_h_sq<T: Real>(op: &DiscreteOperator<T>, ys: &[Vec<T>], dt: T, alpha: T) -> T {
    ys.iter().enumerate().fold(T::zero(), |m, (n, y)| m.max(weight(alpha, dt, n) * op.norm_h_sq(y)))
}

/// `sum_{n < N} dt e^{-2 alpha t_n} |Y^n|_H^2`.
pub fn l2_h_sq<T: Real>(op: &DiscreteOperator<T>, ys: &[Vec<T>], dt: T, alpha: T) -> T {
    let last = ys.len().saturating_sub(1);
    ys[..last].iter().enumerate().fold(T::zero(), |s, (n, y)| s + dt * weight(alpha, dt, n) * op.norm_h_sq(y))
}

/// `sum_{n < N} dt e^{-2 alpha t_n} |Y^n|_V^2`.
pub fn l2_v_sq<T: Real>(op: &DiscreteOperator<T>, ys: &[Vec<T>], dt: T, alpha: T) -> T {
    let last = ys.len().saturating_sub(1);
    ys[..last].iter().enumerate().fold(T::zero(), |s, (n, y)| s + dt * weight(alpha, dt, n) * op.norm_v_sq(y))
}

/// Pathwise squared pieces of the `F_alpha` norm of `ys`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FAlphaParts<T> {
    pub sup_h_sq: T,
    pub l2_v_sq: T,
    pub l2_h_sq: T,
}

pub fn f_alpha_parts<T: Real>(op: &DiscreteOperator<T>, ys: &[Vec<T>], dt: T, alpha: T) -> FAlphaParts<T> {
    FAlphaParts {
        sup_h_sq: sup_h_sq(op, ys, dt, alpha),
        l2_v_sq: l2_v_sq(op, ys, dt, alpha),
        l2_h_sq: l2_h_sq(op, ys, dt, alpha),
    }
}

/// `F_alpha` norm from ensemble means of the squared pieces:
/// `sqrt(E sup) + sqrt(E L2(V)) + sqrt(alpha) sqrt(E L2(H))`.
pub fn f_alpha_norm<T: Real>(mean: FAlphaParts<T>, alpha: T) -> T {
    mean.sup_h_sq.sqrt() + mean.l2_v_sq.sqrt() + alpha.sqrt() * mean.l2_h_sq.sqrt()
}

/// Differences `a[n] - b[n]` of two state sequences.
pub fn diff<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| u - v).collect()).collect()
}
