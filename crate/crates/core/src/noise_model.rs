//! Finite-rank Hilbert-Schmidt diffusion coefficients driven by a truncated
//! cylindrical Wiener process.
//!
//! Column `k` of `B(t, x)` is `g_k` (additive) or `g_k * sigma(x)` pointwise
//! (multiplicative). Coefficients are time-homogeneous; `t` is accepted for
//! interface symmetry only.

use crate::error::{Error, Result};
use crate::rng::DrawSource;
use crate::scalar::Real;
use crate::spatial_operator::{DiscreteOperator, Grid};

/// Lipschitz scalar nonlinearity of the multiplicative kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma<T> {
    /// `u` clipped to `[-bound, bound]`.
    Clamp { bound: T },
    /// `scale * tanh(u)`.
    Tanh { scale: T },
    /// State-independent constant.
    Constant { value: T },
}

impl<T: Real> Sigma<T> {
    pub fn eval(&self, u: T) -> T {
        match *self {
            Sigma::Clamp { bound } => u.max(-bound).min(bound),
            Sigma::Tanh { scale } => scale * u.tanh(),
            Sigma::Constant { value } => value,
        }
    }

    pub fn lipschitz(&self) -> T {
        match *self {
            Sigma::Clamp { .. } => T::one(),
            Sigma::Tanh { scale } => scale.abs(),
            Sigma::Constant { .. } => T::zero(),
        }
    }

    pub fn at_zero(&self) -> T {
        self.eval(T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind<T> {
    Additive,
    Multiplicative(Sigma<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T> {
    grid: Grid<T>,
    columns: Vec<Vec<T>>,
    kind: NoiseKind<T>,
    epsilon: T,
    lip: T,
    growth: T,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(grid: Grid<T>, columns: Vec<Vec<T>>, kind: NoiseKind<T>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("noise needs K >= 1 modes".into()));
        }
        for c in &columns {
            if c.len() != grid.n() {
                return Err(Error::Dimension { expected: grid.n(), got: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("noise columns must be finite".into()));
            }
        }
        if let NoiseKind::Multiplicative(s) = kind {
            let ok = match s {
                Sigma::Clamp { bound } => bound > T::zero() && bound.is_finite(),
                Sigma::Tanh { scale } => scale.is_finite(),
                Sigma::Constant { value } => value.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidParameter("invalid sigma parameters".into()));
            }
        }
        let mut m = Self { grid, columns, kind, epsilon: T::zero(), lip: T::zero(), growth: T::zero() };
        m.certify();
        Ok(m)
    }

    /// Columns `g_k(x_i) = g(k, x_i)` for `k = 1..=K`.
    pub fn from_fn(grid: Grid<T>, k_modes: usize, g: impl Fn(usize, T) -> T, kind: NoiseKind<T>) -> Result<Self> {
        let nodes = grid.nodes();
        let columns = (1..=k_modes).map(|k| nodes.iter().map(|&x| g(k, x)).collect()).collect();
        Self::new(grid, columns, kind)
    }

    pub fn zero(grid: Grid<T>, k_modes: usize) -> Self {
        Self::new(grid, vec![vec![T::zero(); grid.n()]; k_modes.max(1)], NoiseKind::Additive)
            .expect("zero model is valid")
    }

    fn certify(&mut self) {
        let n = self.grid.n();
        let g_inf =
            (0..n).map(|i| self.columns.iter().fold(T::zero(), |s, c| s + c[i] * c[i])).fold(T::zero(), T::max).sqrt();
        let g_hs = self.columns.iter().fold(T::zero(), |s, c| s + self.grid.norm_h_sq(c)).sqrt();
        match self.kind {
            NoiseKind::Additive => {
                self.lip = T::zero();
                self.growth = g_hs;
            }
            NoiseKind::Multiplicative(s) => {
                self.lip = s.lipschitz() * g_inf;
                self.growth = (s.at_zero().abs() * g_hs).max(s.lipschitz() * g_inf);
            }
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn kind(&self) -> NoiseKind<T> {
        self.kind
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Certified Lipschitz constant `L_B` in HS norm.
    pub fn lipschitz(&self) -> T {
        self.lip
    }

    /// Certified growth constant `N_B`: `|B(x)|_HS <= N_B (1 + |x|_H)`.
    pub fn growth(&self) -> T {
        self.growth
    }

    /// True when `B(t, x)` does not depend on `x`.
    pub fn is_state_independent(&self) -> bool {
        matches!(self.kind, NoiseKind::Additive | NoiseKind::Multiplicative(Sigma::Constant { .. }))
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.kind, NoiseKind::Additive)
    }

    /// Same columns with every entry multiplied by `a`.
    pub fn scaled(&self, a: T) -> Self {
        let cols = self.columns.iter().map(|c| c.iter().map(|&v| v * a).collect()).collect();
        let mut m = Self::new(self.grid, cols, self.kind).expect("scaling keeps the model valid");
        m.epsilon = self.epsilon;
        m
    }

    /// The additive model obtained by freezing the state at `y`.
    pub fn frozen_at(&self, y: &[T]) -> Self {
        let cols = (0..self.modes()).map(|k| self.column(T::zero(), y, k)).collect();
        let mut m = Self::new(self.grid, cols, NoiseKind::Additive).expect("frozen model is valid");
        m.epsilon = self.epsilon;
        m
    }

    /// `B(t, x) e_k`.
    pub fn column(&self, _t: T, x: &[T], k: usize) -> Vec<T> {
        let g = &self.columns[k];
        match self.kind {
            NoiseKind::Additive => g.clone(),
            NoiseKind::Multiplicative(s) => g.iter().zip(x).map(|(&gi, &xi)| gi * s.eval(xi)).collect(),
        }
    }

    /// `|B(t, x)|_HS`.
    pub fn hs_norm(&self, t: T, x: &[T]) -> T {
        self.hs_norm_sq(t, x).sqrt()
    }

    pub fn hs_norm_sq(&self, t: T, x: &[T]) -> T {
        (0..self.modes()).fold(T::zero(), |s, k| s + self.grid.norm_h_sq(&self.column(t, x, k)))
    }

    /// `|B(t, x) - B(t, y)|_HS`.
    pub fn hs_distance(&self, t: T, x: &[T], y: &[T]) -> T {
        (0..self.modes())
            .fold(T::zero(), |s, k| {
                let d: Vec<T> = self.column(t, x, k).iter().zip(self.column(t, y, k)).map(|(&a, b)| a - b).collect();
                s + self.grid.norm_h_sq(&d)
            })
            .sqrt()
    }

    /// `|B_self(t, x) - B_other(t, x)|_HS` for two models on the same grid.
    pub fn hs_distance_to(&self, other: &Self, t: T, x: &[T]) -> T {
        let k = self.modes().max(other.modes());
        let zero = vec![T::zero(); self.grid.n()];
        (0..k)
            .fold(T::zero(), |s, i| {
                let a = if i < self.modes() { self.column(t, x, i) } else { zero.clone() };
                let b = if i < other.modes() { other.column(t, x, i) } else { zero.clone() };
                let d: Vec<T> = a.iter().zip(&b).map(|(&u, &v)| u - v).collect();
                s + self.grid.norm_h_sq(&d)
            })
            .sqrt()
    }

    /// `sum_k B(t, x) e_k dw_k`.
    pub fn increment(&self, t: T, x: &[T], dw: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.n()];
        for (k, &w) in dw.iter().enumerate().take(self.modes()) {
            if w == T::zero() {
                continue;
            }
            let col = self.column(t, x, k);
            out.iter_mut().zip(&col).for_each(|(o, &c)| *o = *o + c * w);
        }
        out
    }

    /// Draws `dW` for `step` from `source` and returns `(B(t, x) dW, dW)`.
    pub fn sample_increment(
        &self,
        t: T,
        x: &[T],
        dt: T,
        step: usize,
        source: &mut impl DrawSource<T>,
    ) -> (Vec<T>, Vec<T>) {
        let mut dw = vec![T::zero(); self.modes()];
        source.increments(step, dt, &mut dw);
        (self.increment(t, x, &dw), dw)
    }

    /// Replaces each column by `(I + epsilon A)^{-m} g_k` with `m = op.m_power()`.
    pub fn smooth(&self, op: &DiscreteOperator<T>, epsilon: T) -> Result<Self> {
        if epsilon < T::zero() || !epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be finite and >= 0".into()));
        }
        if epsilon == T::zero() {
            return Ok(self.clone());
        }
        let fac = op.resolvent_factor(epsilon)?;
        let cols = self
            .columns
            .iter()
            .map(|c| {
                let mut v = c.clone();
                for _ in 0..op.m_power() {
                    v = fac.solve(&v);
                }
                v
            })
            .collect();
        let mut m = Self::new(self.grid, cols, self.kind)?;
        m.epsilon = epsilon;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    use super::*;
    use crate::rng::{FixedDraws, PathStream};
    use crate::spatial_operator::OperatorKind;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(n, 1.0).unwrap()
    }

    #[test]
    fn hs_norm_examples() {
        let g = grid(3);
        assert_eq!(NoiseModel::zero(g, 4).hs_norm(0.0, &[1.0, 2.0, 3.0]), 0.0);
        // h = 1/4: |b|_H^2 = h * sum b_i^2
        let b1 = vec![2.0, 0.0, 0.0];
        let b2 = vec![0.0, 4.0, 0.0];
        let m = NoiseModel::new(g, vec![b1, b2], NoiseKind::Additive).unwrap();
        let direct = (0.25f64 * 4.0 + 0.25 * 16.0).sqrt();
        assert_relative_eq!(m.hs_norm(0.0, &[0.0; 3]), direct);
        assert_relative_eq!(direct, 5f64.sqrt());
        let mm = NoiseModel::new(g, vec![vec![1.0; 3]], NoiseKind::Multiplicative(Sigma::Tanh { scale: 1.0 })).unwrap();
        assert_eq!(mm.hs_norm(0.0, &[0.0; 3]), 0.0);
    }

    #[test]
    fn injected_unit_draw_returns_column() {
        let g = grid(4);
        let col = vec![0.1, -0.2, 0.3, 0.4];
        let m = NoiseModel::new(g, vec![col.clone()], NoiseKind::Additive).unwrap();
        let mut src = FixedDraws { rows: vec![vec![1.0]] };
        let (inc, _) = m.sample_increment(0.0, &[0.0; 4], 0.01, 0, &mut src);
        assert_eq!(inc, col);
        let z = NoiseModel::zero(g, 2);
        let (inc, _) = z.sample_increment(0.0, &[1.0; 4], 0.01, 0, &mut PathStream::new(1, 1));
        assert_eq!(inc, vec![0.0; 4]);
    }

    #[test]
    fn increment_second_moment_matches_hs_norm() {
        let g = grid(8);
        let m = NoiseModel::from_fn(
            g,
            4,
            |k, x| (-(k as f64)).exp() * (k as f64 * std::f64::consts::PI * x).sin(),
            NoiseKind::Additive,
        )
        .unwrap();
        let dt = 0.01;
        let x = vec![0.0; 8];
        let samples: Vec<f64> = (0..100_000u64)
            .map(|p| {
                let (inc, _) = m.sample_increment(0.0, &x, dt, 0, &mut PathStream::new(3, p));
                g.norm_h_sq(&inc) / dt
            })
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = m.hs_norm_sq(0.0, &x);
        assert!((mean - target).abs() <= 3.0 * (var / n).sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn smoothing_eigenvector_column() {
        let g = grid(5);
        let op = DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, g).unwrap();
        let a = op.matrix();
        let e = DMatrix::from_fn(5, 5, |i, j| a.get(i, j)).symmetric_eigen();
        let k = (0..5).min_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap()).unwrap();
        let v1: Vec<f64> = e.eigenvectors.column(k).iter().copied().collect();
        let m = NoiseModel::new(g, vec![v1.clone()], NoiseKind::Additive).unwrap();
        let s = m.smooth(&op, 1.0).unwrap();
        for i in 0..5 {
            assert_relative_eq!(s.columns()[0][i], v1[i] / (1.0 + e.eigenvalues[k]), epsilon = 1e-13);
        }
        assert!(s.hs_norm(0.0, &[0.0; 5]) <= m.hs_norm(0.0, &[0.0; 5]));
        let z = NoiseModel::zero(g, 3).smooth(&op, 0.5).unwrap();
        assert_eq!(z.hs_norm(0.0, &[0.0; 5]), 0.0);
    }

    #[test]
    fn smoothing_converges_at_first_order() {
        let g = grid(63);
        let op = DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, g).unwrap();
        let m = NoiseModel::from_fn(
            g,
            3,
            |k, x| (k as f64 * std::f64::consts::PI * x).sin() / k as f64,
            NoiseKind::Additive,
        )
        .unwrap();
        let eps: Vec<f64> = (12..18).map(|j| 2f64.powi(-j)).collect();
        let errs: Vec<f64> =
            eps.iter().map(|&e| m.smooth(&op, e).unwrap().hs_distance_to(&m, 0.0, &[0.0; 63])).collect();
        let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 6.0;
        let my = ys.iter().sum::<f64>() / 6.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        // exact slope is 1/(1 + eps mu) < 1, so the fit approaches 1 from below
        assert!(slope >= 0.99 && slope <= 1.0, "slope {slope}");
    }

    #[test]
    fn certified_constants_hold_on_samples() {
        let g = grid(16);
        let m = NoiseModel::from_fn(
            g,
            6,
            |k, x| (-(k as f64)).exp() * (k as f64 * 3.0 * x).sin(),
            NoiseKind::Multiplicative(Sigma::Tanh { scale: 0.8 }),
        )
        .unwrap();
        for s in 0..200 {
            let x: Vec<f64> = (0..16).map(|i| ((s * 31 + i * 7) as f64).sin() * 3.0).collect();
            let y: Vec<f64> = (0..16).map(|i| ((s * 17 + i * 5) as f64).cos() * 2.0).collect();
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            assert!(m.hs_distance(0.0, &x, &y) <= m.lipschitz() * g.norm_h(&d) * (1.0 + 1e-12));
            assert!(m.hs_norm(0.0, &x) <= m.growth() * (1.0 + g.norm_h(&x)));
        }
    }
}
