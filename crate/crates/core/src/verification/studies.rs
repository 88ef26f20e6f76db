//! Sweep studies that integrate coupled families of paths with common random
//! numbers and compare them in the solution-class norms.

use super::{linear_regression, monotone_term, uniformity, EstimateReport, Tag, Uniformity};
use crate::error::{Error, Result};
use crate::monotone_graph::MonotoneGraph;
use crate::noise_model::NoiseModel;
use crate::scalar::{pairwise_sum, to_f64, Real};
use crate::spatial_operator::DiscreteOperator;
use crate::spde_solver::time_norms::{diff, f_alpha_parts, l2_h_sq, l2_v_sq, sup_h_sq, FAlphaParts};
use crate::spde_solver::{
    run_paths, Ensemble, InitialData, PathFailure, PathSummary, Scheme, SolverParams, Stepper, Trajectory,
};

/// Everything needed to integrate an ensemble.
#[derive(Clone)]
pub struct RunSpec<'a, T> {
    pub op: &'a DiscreteOperator<T>,
    pub graph: &'a MonotoneGraph<T>,
    pub noise: &'a NoiseModel<T>,
    pub params: SolverParams<T>,
    pub scheme: Scheme,
    pub x0: InitialData<T>,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
}

impl<'a, T: Real> RunSpec<'a, T> {
    fn stepper_with(&self, scheme: Scheme, noise: &'a NoiseModel<T>, lambda: T) -> Result<Stepper<'a, T>> {
        let mut p = self.params.clone();
        p.lambda = lambda;
        Stepper::new(scheme, self.op, self.graph, noise, p)
    }
}

fn collect<R>(results: Vec<Result<R>>) -> (Vec<R>, Vec<PathFailure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push(PathFailure { path: p as u64, message: e.to_string() }),
        }
    }
    (ok, failures)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        pairwise_sum(v) / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    /// `|X_lambda - X_{lambda/2}|` in `L^2(Omega; L^2(0,T;H))`.
    pub cauchy: f64,
    /// `|X_lambda - X_prox|` in the same norm.
    pub prox_gap: f64,
}

#[derive(Debug, Clone)]
pub struct LambdaStudy<T> {
    pub rows: Vec<LambdaRow>,
    pub strictly_decreasing: bool,
    /// `prox_gap` at the smallest lambda against `10 * tol_step`.
    pub prox_threshold: f64,
    pub prox_pass: bool,
    /// Log-log slope of `cauchy` against lambda.
    pub rate: f64,
    /// S1 ensembles at the requested lambdas, in order.
    pub ensembles: Vec<Ensemble<T>>,
    pub failures: Vec<PathFailure>,
}

/// Integrates S1 at every requested lambda and at its half, plus the limit
/// scheme S2, on the same draws.
pub fn lambda_convergence_study<T: Real>(spec: &RunSpec<'_, T>, lambdas: &[T]) -> Result<LambdaStudy<T>> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > T::zero())) {
        return Err(Error::InvalidParameter("lambda sweep needs positive values".into()));
    }
    let half = T::one() / (T::one() + T::one());
    let mut all: Vec<T> = lambdas.iter().flat_map(|&l| [l, l * half]).collect();
    all.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    all.dedup();
    let idx = |l: T| all.iter().position(|&v| v == l).unwrap_or(0);
    let steppers: Vec<Stepper<'_, T>> =
        all.iter().map(|&l| spec.stepper_with(Scheme::S1, spec.noise, l)).collect::<Result<_>>()?;
    let prox = spec.stepper_with(Scheme::S2, spec.noise, spec.params.lambda)?;
    let op = spec.op;
    let dt = spec.params.dt;
    let results = run_paths(spec.paths, spec.workers, |p| -> Result<(Vec<f64>, Vec<f64>, Vec<PathSummary<T>>)> {
        let init = spec.x0.for_path(p);
        let x0_sq = op.norm_h_sq(&init);
        let trs: Vec<Trajectory<T>> =
            steppers.iter().map(|s| s.solve_path(&init, spec.seed, p)).collect::<Result<_>>()?;
        let limit = prox.solve_path(&init, spec.seed, p)?;
        let mut cauchy = Vec::new();
        let mut gap = Vec::new();
        let mut sums = Vec::new();
        for &l in lambdas {
            let a = &trs[idx(l)];
            let b = &trs[idx(l * half)];
            cauchy.push(to_f64(l2_h_sq(op, &diff(&a.states, &b.states), dt, T::zero())));
            gap.push(to_f64(l2_h_sq(op, &diff(&a.states, &limit.states), dt, T::zero())));
            sums.push(PathSummary::from_trajectory(a, x0_sq));
        }
        Ok((cauchy, gap, sums))
    });
    let (ok, failures) = collect(results);
    if ok.is_empty() {
        return Err(Error::InvalidParameter("every path of the lambda sweep failed".into()));
    }
    let mut rows = Vec::new();
    let mut ensembles = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let c: Vec<f64> = ok.iter().map(|r| r.0[i]).collect();
        let g: Vec<f64> = ok.iter().map(|r| r.1[i]).collect();
        rows.push(LambdaRow { lambda: to_f64(l), cauchy: mean(&c).sqrt(), prox_gap: mean(&g).sqrt() });
        ensembles.push(Ensemble {
            scheme: Scheme::S1,
            lambda: l,
            dt,
            seed: spec.seed,
            summaries: ok.iter().map(|r| r.2[i]).collect(),
            failures: failures.clone(),
            retained: Vec::new(),
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].cauchy < w[0].cauchy);
    let pos: Vec<(f64, f64)> = rows.iter().filter(|r| r.cauchy > 0.0).map(|r| (r.lambda.ln(), r.cauchy.ln())).collect();
    let rate = if pos.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
        super::slope(&xs, &ys)
    } else {
        f64::NAN
    };
    let smallest = rows
        .iter()
        .min_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(std::cmp::Ordering::Equal))
        .map_or(f64::INFINITY, |r| r.prox_gap);
    let prox_threshold = 10.0 * to_f64(spec.params.tol_step);
    Ok(LambdaStudy {
        rows,
        strictly_decreasing,
        prox_threshold,
        prox_pass: smallest < prox_threshold,
        rate,
        ensembles,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyRow {
    pub epsilon: f64,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Smallest pathwise monotone term over the ensemble; nonnegative up to rounding.
    pub monotone_min: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyStudy {
    pub rows: Vec<CauchyRow>,
    pub reports: Vec<EstimateReport>,
    pub stability: Uniformity,
    pub failures: Vec<PathFailure>,
}

/// Cauchy estimate in the smoothing parameter: for each `eps` in `epsilons`,
/// the solutions driven by `(I + eps A)^{-m} B` and `(I + eps/2 A)^{-m} B` on the
/// same draws satisfy `sqrt(E sup|Y|^2) + sqrt(E ∫|Y|_V^2) <= C rhs` with
/// `rhs^2 = E sum dt |B_eps(X) - B_{eps/2}(X)|_HS^2` along the first solution.
pub fn epsilon_cauchy_check<T: Real>(spec: &RunSpec<'_, T>, epsilons: &[T]) -> Result<CauchyStudy> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > T::zero())) {
        return Err(Error::InvalidParameter("epsilon sweep needs positive values".into()));
    }
    let half = T::one() / (T::one() + T::one());
    let mut levels: Vec<T> = epsilons.iter().flat_map(|&e| [e, e * half]).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    levels.dedup();
    let idx = |e: T| levels.iter().position(|&v| v == e).unwrap_or(0);
    let noises: Vec<NoiseModel<T>> = levels.iter().map(|&e| spec.noise.smooth(spec.op, e)).collect::<Result<_>>()?;
    let steppers: Vec<Stepper<'_, T>> =
        noises.iter().map(|nm| spec.stepper_with(spec.scheme, nm, spec.params.lambda)).collect::<Result<_>>()?;
    let op = spec.op;
    let dt = spec.params.dt;
    let results = run_paths(spec.paths, spec.workers, |p| -> Result<Vec<[f64; 4]>> {
        let init = spec.x0.for_path(p);
        let trs: Vec<Trajectory<T>> =
            steppers.iter().map(|s| s.solve_path(&init, spec.seed, p)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for &e in epsilons {
            let (i, j) = (idx(e), idx(e * half));
            let d = diff(&trs[i].states, &trs[j].states);
            let hs: Vec<T> = (0..trs[i].steps())
                .map(|n| {
                    let h = noises[i].hs_distance_to(&noises[j], trs[i].times[n], &trs[i].states[n]);
                    h * h * dt
                })
                .collect();
            out.push([
                to_f64(sup_h_sq(op, &d, dt, T::zero())),
                to_f64(l2_v_sq(op, &d, dt, T::zero())),
                to_f64(pairwise_sum(&hs)),
                monotone_term(&trs[i], &trs[j], op),
            ]);
        }
        Ok(out)
    });
    let (ok, failures) = collect(results);
    if ok.is_empty() {
        return Err(Error::InvalidParameter("every path of the epsilon sweep failed".into()));
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (k, &e) in epsilons.iter().enumerate() {
        let col = |c: usize| mean(&ok.iter().map(|r| r[k][c]).collect::<Vec<_>>());
        let lhs = col(0).sqrt() + col(1).sqrt();
        let rhs = col(2).sqrt();
        let monotone_min = ok.iter().map(|r| r[k][3]).fold(f64::INFINITY, f64::min);
        let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
        rows.push(CauchyRow { epsilon: to_f64(e), delta: to_f64(e * half), lhs, rhs, ratio, monotone_min });
    }
    let c = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    for r in &rows {
        let scale = r.lhs.abs().max(1.0) * 1e-9;
        reports.push(
            EstimateReport::new(
                "epsilon_cauchy",
                r.lhs,
                c * r.rhs,
                c,
                "Cauchy estimate in the noise smoothing",
                Tag::InExpectation,
            )
            .with_sweep(format!("epsilon={:e}", r.epsilon))
            .with_detail(format!("ratio = {:.6e}", r.ratio))
            .require(r.monotone_min >= -scale, "monotone term negative"),
        );
    }
    let stability = uniformity("epsilon_cauchy_ratio", rows.iter().map(|r| (r.epsilon, r.ratio)).collect(), 2.0);
    Ok(CauchyStudy { rows, reports, stability, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceRow {
    pub alpha: f64,
    pub delta: f64,
    /// `|X_0 - X_0'|` in `L^2(Omega; H)`.
    pub data: f64,
    pub f_alpha: f64,
}

#[derive(Debug, Clone)]
pub struct DependenceStudy {
    pub rows: Vec<DependenceRow>,
    /// `(alpha, slope, intercept, r_squared)` of `F_alpha` against the data distance.
    pub fits: Vec<(f64, f64, f64, f64)>,
    pub reports: Vec<EstimateReport>,
    /// Whether re-integrating identical data reproduced every state bit for bit.
    pub bit_identical: bool,
    pub monotone_min: f64,
    pub failures: Vec<PathFailure>,
}

/// Continuous dependence on the initial datum: paths started from `x0` and
/// `x0 + delta * direction` share their draws, and the `F_alpha` distance is
/// regressed on `delta |direction|_H`.
pub fn continuous_dependence_check<T: Real>(
    spec: &RunSpec<'_, T>,
    direction: &[T],
    deltas: &[T],
    alphas: &[T],
) -> Result<DependenceStudy> {
    if deltas.len() < 2 || alphas.is_empty() {
        return Err(Error::InvalidParameter("dependence sweep needs >= 2 deltas and an alpha".into()));
    }
    if direction.len() != spec.op.n() {
        return Err(Error::Dimension { expected: spec.op.n(), got: direction.len() });
    }
    let stepper = spec.stepper_with(spec.scheme, spec.noise, spec.params.lambda)?;
    let op = spec.op;
    let dt = spec.params.dt;
    type PathOut = (Vec<Vec<[f64; 3]>>, bool, f64);
    let results = run_paths(spec.paths, spec.workers, |p| -> Result<PathOut> {
        let init = spec.x0.for_path(p);
        let base = stepper.solve_path(&init, spec.seed, p)?;
        let again = stepper.solve_path(&init, spec.seed, p)?;
        let same = base.states.iter().flatten().zip(again.states.iter().flatten()).all(|(a, b)| a.to_bits_eq(*b));
        let mut per_delta = Vec::new();
        let mut mono = f64::INFINITY;
        for &d in deltas {
            let x1: Vec<T> = init.iter().zip(direction).map(|(&a, &v)| a + d * v).collect();
            let tr = stepper.solve_path(&x1, spec.seed, p)?;
            mono = mono.min(monotone_term(&tr, &base, op));
            let df = diff(&tr.states, &base.states);
            per_delta.push(
                alphas
                    .iter()
                    .map(|&a| {
                        let FAlphaParts { sup_h_sq, l2_v_sq, l2_h_sq } = f_alpha_parts(op, &df, dt, a);
                        [to_f64(sup_h_sq), to_f64(l2_v_sq), to_f64(l2_h_sq)]
                    })
                    .collect(),
            );
        }
        Ok((per_delta, same, mono))
    });
    let (ok, failures) = collect(results);
    if ok.is_empty() {
        return Err(Error::InvalidParameter("every path of the dependence sweep failed".into()));
    }
    let bit_identical = failures.is_empty() && ok.iter().all(|r| r.1);
    let monotone_min = ok.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let dir_norm = to_f64(op.norm_h(direction));
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut reports = Vec::new();
    for (ai, &a) in alphas.iter().enumerate() {
        let af = to_f64(a);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (di, &d) in deltas.iter().enumerate() {
            let col = |c: usize| mean(&ok.iter().map(|r| r.0[di][ai][c]).collect::<Vec<_>>());
            let f = col(0).sqrt() + col(1).sqrt() + af.sqrt() * col(2).sqrt();
            let data = to_f64(d.abs()) * dir_norm;
            rows.push(DependenceRow { alpha: af, delta: to_f64(d), data, f_alpha: f });
            xs.push(data);
            ys.push(f);
        }
        let (b, c0, r2) = linear_regression(&xs, &ys);
        fits.push((af, b, c0, r2));
        let c = xs.iter().zip(&ys).filter(|(x, _)| **x > 0.0).map(|(x, y)| y / x).fold(0.0, f64::max);
        let (lhs, rhs) =
            xs.iter().zip(&ys).map(|(x, y)| (*y, c * x)).fold((0.0f64, 0.0f64), |m, v| if v.0 > m.0 { v } else { m });
        reports.push(
            EstimateReport::new(
                "continuous_dependence",
                lhs,
                rhs,
                c,
                "continuous dependence on the data",
                Tag::InExpectation,
            )
            .with_sweep(format!("alpha={af}"))
            .with_detail(format!("slope = {b:.6e}, r2 = {r2:.6}"))
            .require(monotone_min >= -1e-9, "monotone term negative"),
        );
    }
    Ok(DependenceStudy { rows, fits, reports, bit_identical, monotone_min, failures })
}

trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Real> BitsEq for T {
    fn to_bits_eq(self, other: Self) -> bool {
        // integer_decode is exact for both f32 and f64
        self.integer_decode() == other.integer_decode()
    }
}
