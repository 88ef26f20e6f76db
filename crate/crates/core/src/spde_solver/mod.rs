//! Time stepping for `dX + A X dt + beta(X) dt ∋ B(t, X) dW`.
//!
//! Scheme S1 integrates the Yosida-regularized equation (drift `beta_lambda`),
//! scheme S2 the multivalued inclusion itself. Both are implicit in the drift
//! and explicit (Euler-Maruyama) in the noise.

mod ensemble;
mod picard;
pub mod time_norms;

pub use ensemble::{run_paths, solve_ensemble, Ensemble, InitialData, NormEstimate, PathFailure, PathSummary};
pub use picard::{picard_iterate, PicardParams, PicardResult, PicardRow};

use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_graph::{Extended, MonotoneGraph};
use crate::noise_model::NoiseModel;
use crate::rng::{DrawSource, PathStream};
use crate::scalar::{from_usize, lit, Real};
use crate::spatial_operator::{DiscreteOperator, ResolventFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Regularized drift `beta_lambda`, `lambda > 0`.
    S1,
    /// Exact graph `beta`.
    S2,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::S1 => "S1",
            Scheme::S2 => "S2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    FixedPoint,
    Newton,
    /// Fixed point when `dt / lambda <= theta`, Newton otherwise.
    Auto,
}

/// How scheme S2 resolves the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxMode {
    /// Solve `(I + dt A) X + dt xi = rhs`, `xi ∈ beta(X)` jointly.
    Implicit,
    /// `z = (I + dt A)^{-1} rhs`, then `X = (I + dt beta)^{-1} z`.
    LieSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams<T> {
    pub dt: T,
    pub steps: usize,
    pub lambda: T,
    pub inner: InnerSolver,
    pub theta: T,
    pub alpha: T,
    pub tol_step: T,
    pub max_inner: usize,
    pub prox: ProxMode,
}

impl<T: Real> SolverParams<T> {
    /// Parameters for `steps` steps over `[0, horizon]`.
    pub fn new(horizon: T, steps: usize, lambda: T) -> Self {
        Self {
            dt: horizon / from_usize(steps.max(1)),
            steps,
            lambda,
            inner: InnerSolver::Auto,
            theta: lit(0.5),
            alpha: T::zero(),
            tol_step: lit(1e-10),
            max_inner: 200,
            prox: ProxMode::Implicit,
        }
    }

    pub fn horizon(&self) -> T {
        self.dt * from_usize(self.steps)
    }

    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad("dt must be finite and > 0");
        }
        if self.steps == 0 {
            return bad("steps must be >= 1");
        }
        if !(self.theta > T::zero() && self.theta <= T::one()) {
            return bad("theta must lie in (0, 1]");
        }
        if !(self.tol_step > T::zero()) || self.max_inner == 0 {
            return bad("tol_step must be > 0 and max_inner >= 1");
        }
        if scheme == Scheme::S1 {
            if !(self.lambda > T::zero() && self.lambda.is_finite()) {
                return bad("S1 requires lambda > 0");
            }
            if self.inner == InnerSolver::FixedPoint && self.dt > self.theta * self.lambda {
                return bad("fixed_point requires dt <= theta*lambda (contraction cap)");
            }
        }
        Ok(())
    }

    fn use_fixed_point(&self) -> bool {
        match self.inner {
            InnerSolver::FixedPoint => true,
            InnerSolver::Newton => false,
            InnerSolver::Auto => self.dt <= self.theta * self.lambda,
        }
    }
}

/// Per-step energy ledger; quantities refer to the new state `X^{n+1}` and the
/// selection `xi^n` applied during the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow<T> {
    pub step: usize,
    pub t: T,
    pub norm_h_sq: T,
    pub norm_v_sq: T,
    /// `∫ j_lambda(X)` for S1, `∫ j(X)` for S2.
    pub int_moreau: T,
    pub int_j: T,
    /// `∫ j(R_lambda X)` (S1) or `∫ j(X)` (S2); pairs with `int_conjugate` in the Young equality.
    pub int_j_resolved: T,
    pub int_conjugate: Extended<T>,
    pub int_xi_x: T,
    /// `∫ xi R_lambda X` (S1) or `∫ xi X` (S2).
    pub int_xi_resolved: T,
    pub xi_l1: T,
    /// `|B(t_n, X^n)|_HS^2`.
    pub hs_sq: T,
    pub inner_iters: usize,
    pub residual_h: T,
    pub residual_vstar: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub path: u64,
    pub scheme: Scheme,
    pub lambda: T,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub selections: Vec<Vec<T>>,
    pub increments: Vec<Vec<T>>,
    pub ledger: Vec<LedgerRow<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn steps(&self) -> usize {
        self.selections.len()
    }

    pub fn dt(&self) -> T {
        if self.times.len() < 2 {
            T::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn initial(&self) -> &[T] {
        &self.states[0]
    }

    pub fn last(&self) -> &[T] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn max_residual(&self) -> T {
        self.ledger.iter().fold(T::zero(), |m, r| m.max(r.residual_vstar))
    }
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub x_next: Vec<T>,
    pub xi: Vec<T>,
    pub iters: usize,
    pub residual: Vec<T>,
}

/// Shared, read-only stepping context for one `(operator, graph, noise, params)`.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T> {
    pub op: &'a DiscreteOperator<T>,
    pub graph: &'a MonotoneGraph<T>,
    pub noise: &'a NoiseModel<T>,
    pub params: SolverParams<T>,
    pub scheme: Scheme,
    factor: ResolventFactor<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(
        scheme: Scheme,
        op: &'a DiscreteOperator<T>,
        graph: &'a MonotoneGraph<T>,
        noise: &'a NoiseModel<T>,
        params: SolverParams<T>,
    ) -> Result<Self> {
        params.validate(scheme)?;
        if noise.grid().n() != op.n() {
            return Err(Error::Dimension { expected: op.n(), got: noise.grid().n() });
        }
        let factor = op.resolvent_factor(params.dt)?;
        Ok(Self { op, graph, noise, params, scheme, factor })
    }

    fn residual(&self, x: &[T], xi: &[T], rhs: &[T]) -> Vec<T> {
        let dt = self.params.dt;
        let ax = self.op.apply_vec(x);
        (0..x.len()).map(|i| x[i] + dt * ax[i] + dt * xi[i] - rhs[i]).collect()
    }

    fn yosida_vec(&self, x: &[T]) -> Result<Vec<T>> {
        let l = self.params.lambda;
        x.iter().map(|&v| self.graph.yosida(l, v)).collect()
    }

    /// Solves `X + dt A X + dt beta_lambda(X) = rhs`.
    pub fn step_regularized(&self, rhs: &[T]) -> Result<StepOutput<T>> {
        let p = &self.params;
        let grid = self.op.grid();
        let tol = p.tol_step;
        if self.graph.is_zero() {
            let x = self.factor.solve(rhs);
            let xi = vec![T::zero(); x.len()];
            let residual = self.residual(&x, &xi, rhs);
            return Ok(StepOutput { x_next: x, xi, iters: 1, residual });
        }
        let shifted = |x: &[T]| -> Result<Vec<T>> {
            let b = self.yosida_vec(x)?;
            Ok(rhs.iter().zip(&b).map(|(&r, &bi)| r - p.dt * bi).collect())
        };
        let mut x = self.factor.solve(&shifted(rhs)?);
        if p.use_fixed_point() {
            let mut prev_diff = T::zero();
            let mut contraction = T::zero();
            for it in 1..=p.max_inner {
                let next = self.factor.solve(&shifted(&x)?);
                let diff = grid.norm_h(&linalg::sub(&next, &x));
                if prev_diff > T::zero() {
                    contraction = diff / prev_diff;
                }
                prev_diff = diff;
                x = next;
                let xi = self.yosida_vec(&x)?;
                let residual = self.residual(&x, &xi, rhs);
                if grid.norm_h(&residual) <= tol {
                    return Ok(StepOutput { x_next: x, xi, iters: it, residual });
                }
            }
            let xi = self.yosida_vec(&x)?;
            return Err(Error::MaxInner {
                max_inner: p.max_inner,
                residual: grid.norm_h(&self.residual(&x, &xi, rhs)).to_f64().unwrap_or(f64::NAN),
                contraction: contraction.to_f64().unwrap_or(f64::NAN),
            });
        }
        let ones = vec![T::one(); x.len()];
        let mut xi = self.yosida_vec(&x)?;
        let mut res = self.residual(&x, &xi, rhs);
        let mut rnorm = grid.norm_h(&res);
        for it in 1..=p.max_inner {
            if rnorm <= tol {
                return Ok(StepOutput { x_next: x, xi, iters: it - 1, residual: res });
            }
            let d: Vec<T> = x
                .iter()
                .map(|&v| self.graph.yosida_derivative(p.lambda, v).map(|b| T::one() + p.dt * b))
                .collect::<Result<_>>()?;
            let neg: Vec<T> = res.iter().map(|&r| -r).collect();
            let dx = self.op.solve_linearized(&d, p.dt, &ones, &neg)?;
            let mut step = T::one();
            loop {
                let cand: Vec<T> = x.iter().zip(&dx).map(|(&a, &b)| a + step * b).collect();
                let cxi = self.yosida_vec(&cand)?;
                let cres = self.residual(&cand, &cxi, rhs);
                let cn = grid.norm_h(&cres);
                if cn < rnorm || step < lit(1e-4) {
                    x = cand;
                    xi = cxi;
                    res = cres;
                    rnorm = cn;
                    break;
                }
                step = step * lit(0.5);
            }
        }
        if rnorm <= tol {
            return Ok(StepOutput { x_next: x, xi, iters: p.max_inner, residual: res });
        }
        Err(Error::MaxInner {
            max_inner: p.max_inner,
            residual: rnorm.to_f64().unwrap_or(f64::NAN),
            contraction: f64::NAN,
        })
    }

    /// Solves `X + dt A X + dt xi = rhs` with `xi ∈ beta(X)`.
    pub fn step_prox(&self, rhs: &[T]) -> Result<StepOutput<T>> {
        let p = &self.params;
        let dt = p.dt;
        let grid = self.op.grid();
        let resolve = |w: &[T]| -> Result<(Vec<T>, Vec<T>)> {
            let mut x = Vec::with_capacity(w.len());
            let mut xi = Vec::with_capacity(w.len());
            for &wi in w {
                let e = self.graph.eval(dt, wi)?;
                x.push(e.resolvent);
                xi.push(e.yosida);
            }
            Ok((x, xi))
        };
        if p.prox == ProxMode::LieSplitting {
            let z = self.factor.solve(rhs);
            let (x, xi) = resolve(&z)?;
            // consistent with the splitting: A acts on the intermediate z
            let az = self.op.apply_vec(&z);
            let residual = (0..x.len()).map(|i| x[i] + dt * az[i] + dt * xi[i] - rhs[i]).collect();
            return Ok(StepOutput { x_next: x, xi, iters: 1, residual });
        }
        // unknown w = X + dt xi, so X = R_dt(w) and F(w) = w + dt A R_dt(w) - rhs
        let ones = vec![T::one(); rhs.len()];
        let mut w = rhs.to_vec();
        let (mut x, mut xi) = resolve(&w)?;
        let mut res = self.residual(&x, &xi, rhs);
        let mut rnorm = grid.norm_h(&res);
        for it in 0..=p.max_inner {
            if rnorm <= p.tol_step {
                return Ok(StepOutput { x_next: x, xi, iters: it, residual: res });
            }
            if it == p.max_inner {
                break;
            }
            let q: Vec<T> = w.iter().map(|&wi| self.graph.resolvent_derivative(dt, wi)).collect::<Result<_>>()?;
            let neg: Vec<T> = res.iter().map(|&r| -r).collect();
            let dw = self.op.solve_linearized(&ones, dt, &q, &neg)?;
            let mut step = T::one();
            loop {
                let cand: Vec<T> = w.iter().zip(&dw).map(|(&a, &b)| a + step * b).collect();
                let (cx, cxi) = resolve(&cand)?;
                let cres = self.residual(&cx, &cxi, rhs);
                let cn = grid.norm_h(&cres);
                if cn < rnorm || step < lit(1e-4) {
                    w = cand;
                    x = cx;
                    xi = cxi;
                    res = cres;
                    rnorm = cn;
                    break;
                }
                step = step * lit(0.5);
            }
        }
        Err(Error::MaxInner {
            max_inner: p.max_inner,
            residual: rnorm.to_f64().unwrap_or(f64::NAN),
            contraction: f64::NAN,
        })
    }

    pub fn step(&self, rhs: &[T]) -> Result<StepOutput<T>> {
        match self.scheme {
            Scheme::S1 => self.step_regularized(rhs),
            Scheme::S2 => self.step_prox(rhs),
        }
    }

    fn ledger_row(&self, step: usize, t: T, out: &StepOutput<T>, hs_sq: T) -> Result<LedgerRow<T>> {
        let grid = self.op.grid();
        let x = &out.x_next;
        let xi = &out.xi;
        let h = grid.h();
        let mut moreau = T::zero();
        let mut jx = T::zero();
        let mut j_res = T::zero();
        let mut xi_res = T::zero();
        let mut conj = Extended::Finite(T::zero());
        for (&xv, &xiv) in x.iter().zip(xi) {
            let jv = self.graph.j(xv);
            jx = jx + jv;
            let r = match self.scheme {
                Scheme::S1 => {
                    let e = self.graph.eval(self.params.lambda, xv)?;
                    moreau = moreau + e.moreau;
                    e.resolvent
                }
                Scheme::S2 => {
                    moreau = moreau + jv;
                    xv
                }
            };
            j_res = j_res + self.graph.j(r);
            xi_res = xi_res + xiv * r;
            conj = conj.add(self.graph.conjugate(xiv));
        }
        Ok(LedgerRow {
            step,
            t,
            norm_h_sq: grid.norm_h_sq(x),
            norm_v_sq: self.op.norm_v_sq(x),
            int_moreau: h * moreau,
            int_j: h * jx,
            int_j_resolved: h * j_res,
            int_conjugate: conj.scale(h),
            int_xi_x: grid.inner(xi, x),
            int_xi_resolved: h * xi_res,
            xi_l1: grid.norm_l1(xi),
            hs_sq,
            inner_iters: out.iters,
            residual_h: grid.norm_h(&out.residual),
            residual_vstar: self.op.norm_vstar(&out.residual),
        })
    }

    /// Integrates one path from `x0`. When `frozen` is given, the noise
    /// coefficient is evaluated at `frozen[n]` instead of the current state.
    pub fn solve_path_with(
        &self,
        x0: &[T],
        path: u64,
        source: &mut impl DrawSource<T>,
        frozen: Option<&[Vec<T>]>,
    ) -> Result<Trajectory<T>> {
        if x0.len() != self.op.n() {
            return Err(Error::Dimension { expected: self.op.n(), got: x0.len() });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        let p = &self.params;
        let n_steps = p.steps;
        let mut times = Vec::with_capacity(n_steps + 1);
        let mut states = Vec::with_capacity(n_steps + 1);
        let mut selections = Vec::with_capacity(n_steps);
        let mut increments = Vec::with_capacity(n_steps);
        let mut ledger = Vec::with_capacity(n_steps);
        times.push(T::zero());
        states.push(x0.to_vec());
        for n in 0..n_steps {
            let t = from_usize::<T>(n) * p.dt;
            let xn = &states[n];
            let at = frozen.map_or(xn.as_slice(), |f| f[n].as_slice());
            let (db, _) = self.noise.sample_increment(t, at, p.dt, n, source);
            let hs_sq = self.noise.hs_norm_sq(t, at);
            let rhs: Vec<T> = xn.iter().zip(&db).map(|(&a, &b)| a + b).collect();
            let out = self.step(&rhs).map_err(|e| Error::AtStep { step: n, source: Box::new(e) })?;
            let row = self
                .ledger_row(n, t + p.dt, &out, hs_sq)
                .map_err(|e| Error::AtStep { step: n, source: Box::new(e) })?;
            ledger.push(row);
            times.push(from_usize::<T>(n + 1) * p.dt);
            states.push(out.x_next);
            selections.push(out.xi);
            increments.push(db);
        }
        Ok(Trajectory { path, scheme: self.scheme, lambda: p.lambda, times, states, selections, increments, ledger })
    }

    /// Integrates path `path` with the counter-based stream of `seed`.
    pub fn solve_path(&self, x0: &[T], seed: u64, path: u64) -> Result<Trajectory<T>> {
        self.solve_path_with(x0, path, &mut PathStream::new(seed, path), None)
    }
}

/// Convenience wrapper building a [`Stepper`] and integrating one path.
#[allow(clippy::too_many_arguments)]
pub fn solve_path<T: Real>(
    scheme: Scheme,
    op: &DiscreteOperator<T>,
    graph: &MonotoneGraph<T>,
    noise: &NoiseModel<T>,
    x0: &[T],
    params: SolverParams<T>,
    seed: u64,
    path: u64,
) -> Result<Trajectory<T>> {
    Stepper::new(scheme, op, graph, noise, params)?.solve_path(x0, seed, path)
}
