//! Finite-difference realizations of the linear operator `A` on a uniform 1-D grid.
//!
//! The H inner product is the `h`-weighted Euclidean product. The V norm is
//! `|v|_H^2 + <G v, v>_H` where `G` is the symmetric principal (diffusion) part
//! of `A`, and the V* norm is its dual with respect to the H pairing.

mod audit;

use std::fmt;
use std::sync::Arc;

pub use audit::{
    audit_assumption_a, jensen_check, ultracontractivity_fit, AuditReport, AuditRow, UltracontractivityFit,
};

use crate::error::{Error, Result};
use crate::linalg::{self, Dense, DenseLu, Tridiag, TridiagLu};
use crate::scalar::{from_usize, lit, Real};

/// Uniform grid of `n` interior nodes on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    n: usize,
    length: T,
    h: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("grid needs n >= 2 interior nodes".into()));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(Error::InvalidParameter("grid length must be finite and > 0".into()));
        }
        Ok(Self { n, length, h: length / from_usize(n + 1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Interior node coordinates `x_i = (i + 1) h`.
    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| from_usize::<T>(i + 1) * self.h).collect()
    }

    pub fn weights(&self) -> Vec<T> {
        vec![self.h; self.n]
    }

    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        self.h * linalg::dot(u, v)
    }

    pub fn norm_h_sq(&self, v: &[T]) -> T {
        self.inner(v, v)
    }

    pub fn norm_h(&self, v: &[T]) -> T {
        self.norm_h_sq(v).sqrt()
    }

    pub fn norm_l1(&self, v: &[T]) -> T {
        self.h * v.iter().fold(T::zero(), |s, x| s + x.abs())
    }

    pub fn norm_linf(&self, v: &[T]) -> T {
        linalg::max_abs(v)
    }

    /// Quadrature `∫ f(v(x)) dx`.
    pub fn integrate(&self, v: &[T], f: impl Fn(T) -> T) -> T {
        self.h * v.iter().fold(T::zero(), |s, &x| s + f(x))
    }

    /// A refined grid with `2n + 1` nodes on the same interval.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n + 1, self.length).expect("refinement keeps the grid valid")
    }
}

/// Scalar coefficient function of the spatial variable.
pub type CoefFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Coefficients of `-div(a grad u) + b . grad u - div(c u) + a0 u`.
#[derive(Clone)]
pub struct Coefficients<T> {
    pub a: CoefFn<T>,
    pub b: CoefFn<T>,
    pub c: CoefFn<T>,
    pub a0: CoefFn<T>,
}

impl<T: Real> Coefficients<T> {
    pub fn constant(a: T, b: T, c: T, a0: T) -> Self {
        Self { a: Arc::new(move |_| a), b: Arc::new(move |_| b), c: Arc::new(move |_| c), a0: Arc::new(move |_| a0) }
    }
}

impl<T> fmt::Debug for Coefficients<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Coefficients { .. }")
    }
}

/// Catalogued operator families.
#[derive(Debug, Clone)]
pub enum OperatorKind<T> {
    DirichletLaplacian,
    DivergenceForm(Coefficients<T>),
    /// Spectral power `(-Delta_h)^alpha`, `alpha ∈ (0, 1)`.
    Fractional {
        alpha: T,
    },
    /// The zero operator, a degenerate reference case.
    Zero,
}

impl<T> OperatorKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::DirichletLaplacian => "dirichlet_laplacian",
            OperatorKind::DivergenceForm(_) => "divergence_form",
            OperatorKind::Fractional { .. } => "fractional",
            OperatorKind::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone)]
enum Realization<T> {
    Local(Tridiag<T>),
    Spectral { vecs: Dense<T>, vals: Vec<T>, dense: Dense<T> },
    Zero,
}

/// Certified coercivity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity<T> {
    /// Largest `C` with `<Av, v>_H >= C |v|_V^2`; may be `<= 0` when condition (i) fails.
    pub c: T,
    /// `C1` of the shifted condition `<Av, v>_H >= C1 |v|_V^2 - C2 |v|_H^2`.
    pub c1: T,
    pub c2: T,
}

/// Matrix realization of `A` with its norm machinery.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    grid: Grid<T>,
    kind: OperatorKind<T>,
    real: Realization<T>,
    form_sym: Tridiag<T>,
    principal: Tridiag<T>,
    principal_eigs: Vec<T>,
    v_factor: TridiagLu<T>,
    m_power: usize,
    coercivity: Coercivity<T>,
}

/// Stiffness of the 1-D Dirichlet Laplacian with unit diffusion.
fn laplacian<T: Real>(grid: &Grid<T>) -> Tridiag<T> {
    let n = grid.n();
    let ih2 = (grid.h() * grid.h()).recip();
    let mut t = Tridiag::zeros(n);
    t.diag.iter_mut().for_each(|d| *d = lit::<T>(2.0) * ih2);
    t.sub.iter_mut().for_each(|d| *d = -ih2);
    t.sup.iter_mut().for_each(|d| *d = -ih2);
    t
}

/// Returns the full stencil and its symmetric diffusion part.
fn divergence_form<T: Real>(grid: &Grid<T>, co: &Coefficients<T>) -> Result<(Tridiag<T>, Tridiag<T>)> {
    let n = grid.n();
    let h = grid.h();
    let ih2 = (h * h).recip();
    let i2h = (lit::<T>(2.0) * h).recip();
    let half = lit::<T>(0.5);
    let x = |i: usize| from_usize::<T>(i + 1) * h;
    // a at midpoints x_{i - 1/2}, i = 0..=n
    let amid: Vec<T> = (0..=n).map(|i| (co.a)(from_usize::<T>(i) * h + half * h)).collect();
    for (i, &a) in amid.iter().enumerate() {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::NonElliptic { a_min: a.to_f64().unwrap_or(f64::NAN), node: i });
        }
    }
    let b: Vec<T> = (0..n).map(|i| (co.b)(x(i))).collect();
    let c: Vec<T> = (0..n).map(|i| (co.c)(x(i))).collect();
    let a0: Vec<T> = (0..n).map(|i| (co.a0)(x(i))).collect();
    if b.iter().chain(&c).chain(&a0).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("coefficients must be finite at every node".into()));
    }
    let mut m = Tridiag::zeros(n);
    let mut g = Tridiag::zeros(n);
    for i in 0..n {
        let (al, ar) = (amid[i], amid[i + 1]);
        g.diag[i] = (al + ar) * ih2;
        m.diag[i] = g.diag[i] + a0[i];
        if i + 1 < n {
            g.sup[i] = -ar * ih2;
            g.sub[i] = -ar * ih2;
            // row i couples to i+1; row i+1 couples to i
            m.sup[i] = -ar * ih2 + (b[i] - c[i + 1]) * i2h;
            m.sub[i] = -ar * ih2 - (b[i + 1] - c[i]) * i2h;
            for (node, drift, a) in [(i, b[i] - c[i + 1], ar), (i + 1, b[i + 1] - c[i], ar)] {
                let lhs = h * drift.abs();
                let rhs = lit::<T>(2.0) * a;
                if lhs > rhs {
                    return Err(Error::Peclet {
                        node,
                        lhs: lhs.to_f64().unwrap_or(f64::NAN),
                        rhs: rhs.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
    }
    Ok((m, g))
}

/// Negative-eigenvalue count of a symmetric tridiagonal matrix (Sturm sequence).
fn negative_count<T: Real>(diag: &[T], off: &[T]) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut d = T::one();
    for i in 0..diag.len() {
        let coupling = if i == 0 { T::zero() } else { off[i - 1] * off[i - 1] / d };
        d = diag[i] - coupling;
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
    }
    count
}

/// Largest `c` with `s - c (I + g)` positive semidefinite, by bisection on inertia.
fn coercivity_constant<T: Real>(s: &Tridiag<T>, g: &Tridiag<T>) -> T {
    let n = s.n();
    let bound = (0..n)
        .map(|i| {
            let mut r = s.diag[i].abs();
            if i > 0 {
                r = r + s.sub[i - 1].abs();
            }
            if i + 1 < n {
                r = r + s.sup[i].abs();
            }
            r
        })
        .fold(T::zero(), T::max)
        + T::one();
    let psd = |c: T| {
        let d: Vec<T> = (0..n).map(|i| s.diag[i] - c * (T::one() + g.diag[i])).collect();
        let o: Vec<T> = (0..n.saturating_sub(1)).map(|i| s.sub[i] - c * g.sub[i]).collect();
        negative_count(&d, &o) == 0
    };
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if psd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * lit::<T>(4.0) * bound {
            break;
        }
    }
    lo
}

impl<T: Real> DiscreteOperator<T> {
    /// Assembles the operator of `kind` on `grid`.
    pub fn assemble(kind: OperatorKind<T>, grid: Grid<T>) -> Result<Self> {
        let n = grid.n();
        let (real, form_sym, principal) = match &kind {
            OperatorKind::DirichletLaplacian => {
                let l = laplacian(&grid);
                (Realization::Local(l.clone()), l.clone(), l)
            }
            OperatorKind::DivergenceForm(co) => {
                let (m, g) = divergence_form(&grid, co)?;
                let s = m.symmetric_part();
                (Realization::Local(m), s, g)
            }
            OperatorKind::Fractional { alpha } => {
                if !(*alpha > T::zero() && *alpha < T::one()) {
                    return Err(Error::InvalidParameter("fractional alpha must lie in (0, 1)".into()));
                }
                let l = laplacian(&grid);
                let (base, vecs) = linalg::symmetric_tridiagonal_eigen(&l.diag, &l.sub, true)?;
                let vecs = vecs.ok_or(Error::Eigen)?;
                let vals: Vec<T> = base.iter().map(|&v| v.max(T::zero()).powf(*alpha)).collect();
                let dense = Dense::from_fn(n, |i, j| {
                    (0..n).fold(T::zero(), |s, k| s + vecs.get(i, k) * vals[k] * vecs.get(j, k))
                });
                // the tridiagonal slots of G are unused for the spectral kind
                (Realization::Spectral { vecs, vals, dense }, Tridiag::zeros(n), Tridiag::zeros(n))
            }
            OperatorKind::Zero => (Realization::Zero, Tridiag::zeros(n), Tridiag::zeros(n)),
        };
        let principal_eigs = match &real {
            Realization::Spectral { vals, .. } => vals.clone(),
            _ => linalg::symmetric_tridiagonal_eigen(&principal.diag, &principal.sub, false)?.0,
        };
        let v_factor = principal.shifted(T::one(), T::one()).factor()?;
        let mu_min = principal_eigs.first().copied().unwrap_or(T::zero()).max(T::zero());
        let c1 = mu_min / (T::one() + mu_min);
        let coercivity = match &real {
            Realization::Spectral { .. } => Coercivity { c: c1, c1, c2: T::zero() },
            Realization::Zero => Coercivity { c: T::zero(), c1: T::zero(), c2: T::zero() },
            Realization::Local(_) => {
                let shifted: Vec<T> = form_sym.diag.iter().zip(&principal.diag).map(|(&s, &g)| s - g).collect();
                let off: Vec<T> = form_sym.sub.iter().zip(&principal.sub).map(|(&s, &g)| s - g).collect();
                let (eigs, _) = linalg::symmetric_tridiagonal_eigen(&shifted, &off, false)?;
                let c2 = (-eigs[0]).max(T::zero());
                Coercivity { c: coercivity_constant(&form_sym, &principal), c1, c2 }
            }
        };
        let m_power = match &kind {
            OperatorKind::Fractional { alpha } => (lit::<T>(0.5) / *alpha).floor().to_usize().unwrap_or(1) + 1,
            _ => 1,
        };
        Ok(Self { grid, kind, real, form_sym, principal, principal_eigs, v_factor, m_power, coercivity })
    }

    /// Re-assembles the same kind on another grid.
    pub fn reassemble(&self, grid: Grid<T>) -> Result<Self> {
        let mut op = Self::assemble(self.kind.clone(), grid)?;
        op.m_power = self.m_power;
        Ok(op)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn kind(&self) -> &OperatorKind<T> {
        &self.kind
    }

    pub fn m_power(&self) -> usize {
        self.m_power
    }

    pub fn with_m_power(mut self, m: usize) -> Self {
        self.m_power = m.max(1);
        self
    }

    pub fn coercivity(&self) -> Coercivity<T> {
        self.coercivity
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.real, Realization::Zero)
    }

    /// Ascending eigenvalues of the principal part `G`.
    pub fn principal_eigenvalues(&self) -> &[T] {
        &self.principal_eigs
    }

    /// Dense copy of the matrix realizing `A`.
    pub fn matrix(&self) -> Dense<T> {
        match &self.real {
            Realization::Local(t) => t.to_dense(),
            Realization::Spectral { dense, .. } => dense.clone(),
            Realization::Zero => Dense::zeros(self.n()),
        }
    }

    /// Dense copy of the symmetric part of `A`.
    pub fn form_sym(&self) -> Dense<T> {
        match &self.real {
            Realization::Spectral { dense, .. } => dense.clone(),
            _ => self.form_sym.to_dense(),
        }
    }

    pub fn apply(&self, x: &[T], out: &mut [T]) {
        match &self.real {
            Realization::Local(t) => t.matvec(x, out),
            Realization::Spectral { dense, .. } => dense.matvec(x, out),
            Realization::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
        }
    }

    pub fn apply_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.apply(x, &mut out);
        out
    }

    fn apply_principal(&self, x: &[T]) -> Vec<T> {
        match &self.real {
            Realization::Spectral { dense, .. } => {
                let mut out = vec![T::zero(); x.len()];
                dense.matvec(x, &mut out);
                out
            }
            _ => {
                let mut out = vec![T::zero(); x.len()];
                self.principal.matvec(x, &mut out);
                out
            }
        }
    }

    /// `<A v, v>_H`.
    pub fn form(&self, v: &[T]) -> T {
        self.grid.inner(&self.apply_vec(v), v)
    }

    pub fn norm_h_sq(&self, v: &[T]) -> T {
        self.grid.norm_h_sq(v)
    }

    pub fn norm_h(&self, v: &[T]) -> T {
        self.grid.norm_h(v)
    }

    pub fn norm_v_sq(&self, v: &[T]) -> T {
        self.grid.norm_h_sq(v) + self.grid.inner(&self.apply_principal(v), v)
    }

    pub fn norm_v(&self, v: &[T]) -> T {
        self.norm_v_sq(v).max(T::zero()).sqrt()
    }

    /// Dual norm of `f` with respect to the H pairing, via one solve of `(I + G) w = f`.
    pub fn norm_vstar(&self, f: &[T]) -> T {
        let w = self.solve_v_riesz(f);
        self.grid.inner(f, &w).max(T::zero()).sqrt()
    }

    /// The maximizer `w = (I + G)^{-1} f` of the dual-norm quotient.
    pub fn solve_v_riesz(&self, f: &[T]) -> Vec<T> {
        match &self.real {
            Realization::Spectral { vecs, vals, .. } => spectral_apply(vecs, vals, f, |mu| (T::one() + mu).recip()),
            _ => self.v_factor.solve(f),
        }
    }

    /// Operator norm of `A` from V to V*.
    pub fn norm_v_to_vstar(&self) -> Result<T> {
        match &self.real {
            Realization::Zero => Ok(T::zero()),
            Realization::Spectral { vals, .. } => {
                Ok(vals.iter().fold(T::zero(), |m, &mu| m.max(mu.abs() / (T::one() + mu))))
            }
            Realization::Local(t) => {
                if let OperatorKind::DirichletLaplacian = self.kind {
                    let top = *self.principal_eigs.last().unwrap_or(&T::zero());
                    return Ok(top / (T::one() + top));
                }
                // B = L^{-1} M L^{-T} with I + G = L L^T; the norm is |B|_2
                let n = self.n();
                let ig = self.principal.shifted(T::one(), T::one());
                let chol = cholesky_tridiag(&ig)?;
                let mut b = Dense::zeros(n);
                let mut col = vec![T::zero(); n];
                let mut e = vec![T::zero(); n];
                for j in 0..n {
                    e.iter_mut().for_each(|v| *v = T::zero());
                    e[j] = T::one();
                    let y = chol.solve_lt(&e);
                    t.matvec(&y, &mut col);
                    let z = chol.solve_l(&col);
                    for i in 0..n {
                        b.set(i, j, z[i]);
                    }
                }
                let btb = b.transpose().matmul(&b);
                let top = *linalg::symmetric_eigenvalues(&btb)?.last().unwrap_or(&T::zero());
                Ok(top.max(T::zero()).sqrt())
            }
        }
    }

    /// Precomputes `(I + delta A)^{-1}`.
    pub fn resolvent_factor(&self, delta: T) -> Result<ResolventFactor<T>> {
        if !(delta > T::zero() && delta.is_finite()) {
            return Err(Error::InvalidParameter("resolvent delta must be finite and > 0".into()));
        }
        Ok(match &self.real {
            Realization::Local(t) => ResolventFactor::Local(t.shifted(T::one(), delta).factor()?),
            Realization::Spectral { vecs, vals, .. } => {
                let inv: Vec<T> = vals.iter().map(|&mu| (T::one() + delta * mu).recip()).collect();
                ResolventFactor::Spectral { vecs: vecs.clone(), inv }
            }
            Realization::Zero => ResolventFactor::Identity,
        })
    }

    /// `(I + delta A)^{-1} f`.
    pub fn resolvent_solve(&self, delta: T, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f)?;
        Ok(self.resolvent_factor(delta)?.solve(f))
    }

    /// `(I + delta A)^{-k} f`.
    pub fn resolvent_power(&self, delta: T, k: usize, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f)?;
        if k == 0 {
            return Err(Error::InvalidParameter("resolvent power k must be >= 1".into()));
        }
        let fac = self.resolvent_factor(delta)?;
        let mut x = f.to_vec();
        for _ in 0..k {
            x = fac.solve(&x);
        }
        Ok(x)
    }

    /// Solves `(diag(p) + delta A diag(q)) x = r`.
    pub fn solve_linearized(&self, p: &[T], delta: T, q: &[T], r: &[T]) -> Result<Vec<T>> {
        let n = self.n();
        match &self.real {
            Realization::Zero => Ok(r.iter().zip(p).map(|(&ri, &pi)| ri / pi).collect()),
            Realization::Local(t) => {
                let mut j = Tridiag::zeros(n);
                for i in 0..n {
                    j.diag[i] = p[i] + delta * t.diag[i] * q[i];
                    if i + 1 < n {
                        j.sup[i] = delta * t.sup[i] * q[i + 1];
                        j.sub[i] = delta * t.sub[i] * q[i];
                    }
                }
                Ok(j.factor()?.solve(r))
            }
            Realization::Spectral { dense, .. } => {
                let j = Dense::from_fn(n, |i, k| {
                    let d = if i == k { p[i] } else { T::zero() };
                    d + delta * dense.get(i, k) * q[k]
                });
                Ok(DenseLu::new(&j)?.solve(r))
            }
        }
    }

    fn check_len(&self, f: &[T]) -> Result<()> {
        if f.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: f.len() });
        }
        Ok(())
    }
}

/// A precomputed resolvent `(I + delta A)^{-1}`.
#[derive(Debug, Clone)]
pub enum ResolventFactor<T> {
    Local(TridiagLu<T>),
    Spectral { vecs: Dense<T>, inv: Vec<T> },
    Identity,
}

impl<T: Real> ResolventFactor<T> {
    pub fn solve(&self, f: &[T]) -> Vec<T> {
        match self {
            ResolventFactor::Local(lu) => lu.solve(f),
            ResolventFactor::Spectral { vecs, inv } => {
                let mut coef = vec![T::zero(); inv.len()];
                for (k, c) in coef.iter_mut().enumerate() {
                    *c = (0..f.len()).fold(T::zero(), |s, i| s + vecs.get(i, k) * f[i]) * inv[k];
                }
                (0..f.len()).map(|i| (0..inv.len()).fold(T::zero(), |s, k| s + vecs.get(i, k) * coef[k])).collect()
            }
            ResolventFactor::Identity => f.to_vec(),
        }
    }
}

fn spectral_apply<T: Real>(vecs: &Dense<T>, vals: &[T], f: &[T], phi: impl Fn(T) -> T) -> Vec<T> {
    let inv: Vec<T> = vals.iter().map(|&v| phi(v)).collect();
    ResolventFactor::Spectral { vecs: vecs.clone(), inv }.solve(f)
}

/// Cholesky factor of a symmetric positive definite tridiagonal matrix.
struct TridiagCholesky<T> {
    d: Vec<T>,
    l: Vec<T>,
}

fn cholesky_tridiag<T: Real>(m: &Tridiag<T>) -> Result<TridiagCholesky<T>> {
    let n = m.n();
    let mut d = vec![T::zero(); n];
    let mut l = vec![T::zero(); n.saturating_sub(1)];
    for i in 0..n {
        let mut v = m.diag[i];
        if i > 0 {
            l[i - 1] = m.sub[i - 1] / d[i - 1];
            v = v - l[i - 1] * l[i - 1];
        }
        if !(v > T::zero()) {
            return Err(Error::Singular { row: i, pivot: v.to_f64().unwrap_or(f64::NAN) });
        }
        d[i] = v.sqrt();
    }
    Ok(TridiagCholesky { d, l })
}

impl<T: Real> TridiagCholesky<T> {
    fn solve_l(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in 0..x.len() {
            if i > 0 {
                x[i] = x[i] - self.l[i - 1] * x[i - 1];
            }
            x[i] = x[i] / self.d[i];
        }
        x
    }

    fn solve_lt(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for i in (0..x.len()).rev() {
            if i + 1 < x.len() {
                x[i] = x[i] - self.l[i] * x[i + 1];
            }
            x[i] = x[i] / self.d[i];
        }
        x
    }
}
