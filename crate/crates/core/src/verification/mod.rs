//! Computable versions of the a priori estimates: each check returns an
//! [`EstimateReport`] comparing a measured left-hand side with a bound.

mod audits;
mod studies;

pub use audits::{graph_kernel_audit, jensen_audit, JensenAudit, KernelAudit};

pub use studies::{
    continuous_dependence_check, epsilon_cauchy_check, lambda_convergence_study, CauchyRow, CauchyStudy, DependenceRow,
    DependenceStudy, LambdaRow, LambdaStudy, RunSpec,
};

use crate::error::{Error, Result};
use crate::linalg;
use crate::monotone_graph::MonotoneGraph;
use crate::scalar::{to_f64, Real, Tolerances};
use crate::spatial_operator::DiscreteOperator;
use crate::spde_solver::{Ensemble, PicardResult, Scheme, Trajectory};

/// Whether a bound is asserted per sample path or in expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    PerPath,
    InExpectation,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::PerPath => "per_path",
            Tag::InExpectation => "in_expectation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// The fitted or implied constant entering `rhs`.
    pub constant: f64,
    pub margin: f64,
    pub pass: bool,
    /// Which estimate the check realizes, by role.
    pub provenance: &'static str,
    pub tag: Tag,
    pub sweep_param: String,
    pub detail: String,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, constant: f64, provenance: &'static str, tag: Tag) -> Self {
        let tol = Tolerances::<f64>::default().report;
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            constant,
            margin,
            pass: margin.is_finite() && margin >= -tol * rhs.abs(),
            provenance,
            tag,
            sweep_param: String::new(),
            detail: String::new(),
        }
    }

    pub fn with_sweep(mut self, p: impl Into<String>) -> Self {
        self.sweep_param = p.into();
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    /// Forces failure in addition to the margin rule (used for side conditions).
    pub fn require(mut self, ok: bool, why: &str) -> Self {
        if !ok {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(why);
        }
        self
    }
}

/// Stability of a fitted constant across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniformity {
    pub name: String,
    pub sweep: Vec<(f64, f64)>,
    pub variation: f64,
    pub pass: bool,
}

/// `max / min` of the positive constants; `pass` iff it is at most `limit`.
pub fn uniformity(name: &str, sweep: Vec<(f64, f64)>, limit: f64) -> Uniformity {
    let pos: Vec<f64> = sweep.iter().map(|s| s.1).filter(|c| *c > 0.0).collect();
    let variation = if pos.is_empty() {
        1.0
    } else {
        pos.iter().cloned().fold(f64::MIN, f64::max) / pos.iter().cloned().fold(f64::MAX, f64::min)
    };
    Uniformity { name: name.to_string(), pass: variation <= limit, sweep, variation }
}

/// Outcome of the pathwise energy check.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwiseEnergy {
    pub report: EstimateReport,
    /// `max_m (L_m - R_m)` of the step-by-step chain; nonpositive when the chain holds.
    pub defect: f64,
    pub k_constant: f64,
}

/// Pathwise energy estimate for scheme S1 with additive noise.
///
/// With `W^n` the accumulated noise and `Y = X - W`, testing the scheme with
/// `Y^{n+1}` gives for every `m`
/// `|X^m|^2/2 + C sum dt |X|_V^2 + 2 sum dt ∫j_lambda(X) <= |X_0|^2 + |W^m|^2
///  + (|A|^2/C) sum dt |W|_V^2 + 2 sum dt ∫j(W)` (right endpoints), where `C` is the
/// coercivity constant and `|A|` the V -> V* norm. The report states the
/// supremum form with `K = 3.5 max(2, |A|^2/C)`.
pub fn pathwise_energy_check<T: Real>(
    tr: &Trajectory<T>,
    op: &DiscreteOperator<T>,
    g: &MonotoneGraph<T>,
) -> Result<PathwiseEnergy> {
    if tr.scheme != Scheme::S1 {
        return Err(Error::InvalidParameter("pathwise energy check needs an S1 trajectory".into()));
    }
    let c = to_f64(op.coercivity().c);
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("pathwise energy check needs a coercive operator (C > 0)".into()));
    }
    let a_norm = to_f64(op.norm_v_to_vstar()?);
    let inv_eps = a_norm * a_norm / c;
    let dt = to_f64(tr.dt());
    let x0_sq = to_f64(op.norm_h_sq(tr.initial()));
    let mut w = vec![T::zero(); op.n()];
    let mut sum_xv = 0.0;
    let mut sum_moreau = 0.0;
    let mut sum_wv = 0.0;
    let mut sum_jw = 0.0;
    let mut sup_x = x0_sq;
    let mut sup_w: f64 = 0.0;
    let mut defect = f64::NEG_INFINITY;
    let mut worst_scale: f64 = 0.0;
    for (n, row) in tr.ledger.iter().enumerate() {
        linalg::axpy(T::one(), &tr.increments[n], &mut w);
        let w_sq = to_f64(op.norm_h_sq(&w));
        sum_xv += dt * to_f64(row.norm_v_sq);
        sum_moreau += dt * to_f64(row.int_moreau);
        sum_wv += dt * to_f64(op.norm_v_sq(&w));
        sum_jw += dt * to_f64(op.grid().integrate(&w, |v| g.j(v)));
        sup_x = sup_x.max(to_f64(row.norm_h_sq));
        sup_w = sup_w.max(w_sq);
        let l = 0.5 * to_f64(row.norm_h_sq) + c * sum_xv + 2.0 * sum_moreau;
        let r = x0_sq + w_sq + inv_eps * sum_wv + 2.0 * sum_jw;
        defect = defect.max(l - r);
        worst_scale = worst_scale.max(r.abs());
    }
    if tr.ledger.is_empty() {
        defect = 0.0;
    }
    let k = 3.5 * inv_eps.max(2.0);
    let lhs = sup_x + c * sum_xv + sum_moreau;
    let data = x0_sq + sup_w + sum_wv + sum_jw;
    let tol = Tolerances::<f64>::default().report;
    let report = EstimateReport::new(
        "pathwise_energy",
        lhs,
        k * data,
        k,
        "pathwise energy bound for the regularized equation",
        Tag::PerPath,
    )
    .with_detail(format!("C = {c:.6e}, |A|_(V,V*) = {a_norm:.6e}, chain defect = {defect:.3e}"))
    .require(defect <= tol * worst_scale.max(1.0), "step-by-step chain violated");
    Ok(PathwiseEnergy { report, defect, k_constant: k })
}

/// Order fit of a defect sequence against the time step.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub order: Option<f64>,
    /// True when every defect is at or below zero, so the inequality holds exactly.
    pub exact: bool,
}

pub fn defect_order_fit(dts: &[f64], defects: &[f64]) -> OrderFit {
    let pos: Vec<(f64, f64)> =
        dts.iter().zip(defects).filter(|(_, d)| **d > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pos.len() < 2 {
        return OrderFit { order: None, exact: pos.is_empty() };
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
    OrderFit { order: Some(slope(&xs, &ys)), exact: false }
}

/// Data functional `E|X_0|^2 + E sum dt |B|_HS^2`.
pub fn data_functional<T: Real>(ens: &Ensemble<T>) -> f64 {
    to_f64(ens.mean_of(|s| s.x0_h_sq).0) + to_f64(ens.mean_of(|s| s.hs_sq).0)
}

/// `E sup|X|^2 + E sum dt |X|_V^2 + E sum dt ∫ beta_lambda(X) X`.
pub fn energy_functional<T: Real>(ens: &Ensemble<T>) -> f64 {
    to_f64(ens.mean_of(|s| s.sup_h_sq).0) + to_f64(ens.mean_of(|s| s.l2_v_sq).0) + to_f64(ens.mean_of(|s| s.int_xi_x).0)
}

/// In-expectation energy bound with constant `n_const`; the fitted constant is
/// `energy / data`.
pub fn expectation_energy_check<T: Real>(ens: &Ensemble<T>, n_const: Option<f64>) -> EstimateReport {
    let lhs = energy_functional(ens);
    let data = data_functional(ens);
    let fitted = if data > 0.0 { lhs / data } else { 0.0 };
    let n = n_const.unwrap_or(fitted);
    EstimateReport::new(
        "expectation_energy",
        lhs,
        n * data,
        n,
        "expectation energy bound uniform in lambda",
        Tag::InExpectation,
    )
    .with_sweep(format!("lambda={}", to_f64(ens.lambda)))
    .with_detail(format!("fitted N = {fitted:.6e}, data = {data:.6e}"))
    .require(!ens.is_partial(), "ensemble is partial")
}

/// `E ∫∫ j*(xi) <= E ∫∫ beta_lambda(X) X`, and the latter against `nbar`.
pub fn jstar_integrability_check<T: Real>(ens: &Ensemble<T>, nbar: Option<f64>) -> EstimateReport {
    let conj = ens.estimate("conjugate").and_then(|e| e.estimate.finite()).map(to_f64);
    let xi_x = to_f64(ens.mean_of(|s| s.int_xi_x).0);
    let data = data_functional(ens);
    let fitted = if data > 0.0 { xi_x / data } else { 0.0 };
    let lhs = conj.unwrap_or(f64::INFINITY);
    let mut rep = EstimateReport::new(
        "jstar_integrability",
        lhs,
        xi_x,
        fitted,
        "conjugate integrability bound uniform in lambda",
        Tag::InExpectation,
    )
    .with_sweep(format!("lambda={}", to_f64(ens.lambda)))
    .with_detail(format!("fitted constant = {fitted:.6e}"));
    if let Some(nb) = nbar {
        rep = rep.require(
            xi_x <= nb * (1.0 + Tolerances::<f64>::default().report),
            "E∫∫beta_lambda(X)X exceeds the uniform bound",
        );
    }
    rep
}

/// Expectation energy over a lambda sweep with the fitted constant of each
/// ensemble; the uniformity passes when the constants vary by at most `limit`.
pub fn expectation_energy_sweep<T: Real>(ens: &[Ensemble<T>], limit: f64) -> (Vec<EstimateReport>, Uniformity) {
    let reports: Vec<EstimateReport> = ens.iter().map(|e| expectation_energy_check(e, None)).collect();
    let sweep = ens.iter().zip(&reports).map(|(e, r)| (to_f64(e.lambda), r.constant)).collect();
    (reports, uniformity("expectation_energy_constant", sweep, limit))
}

/// Conjugate integrability over a lambda sweep; the uniform bound on
/// `E ∫∫ beta_lambda(X) X` is the largest energy functional of the sweep.
pub fn jstar_sweep<T: Real>(ens: &[Ensemble<T>], limit: f64) -> (Vec<EstimateReport>, Uniformity) {
    let nbar = ens.iter().map(energy_functional).fold(0.0, f64::max);
    let reports: Vec<EstimateReport> = ens.iter().map(|e| jstar_integrability_check(e, Some(nbar))).collect();
    let sweep = ens.iter().zip(&reports).map(|(e, r)| (to_f64(e.lambda), r.constant)).collect();
    (reports, uniformity("jstar_constant", sweep, limit))
}

/// Contraction factors of the Picard map against `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionFit {
    /// `(alpha, factor, degenerate)`.
    pub rows: Vec<(f64, f64, bool)>,
    pub exponent: Option<f64>,
    pub degenerate: bool,
    pub threshold_alpha: Option<f64>,
    pub monotone: bool,
}

/// Factor per alpha is the geometric mean of `d_{k+1}/d_k` over distances above
/// `floor * d_0`; alpha-exponent by log-log regression over positive alphas.
pub fn contraction_rate_fit(res: &PicardResult, floor: f64) -> ContractionFit {
    let mut alphas: Vec<f64> = res.rows.iter().map(|r| r.alpha).collect();
    alphas.dedup();
    let mut rows = Vec::new();
    for &a in &alphas {
        let d = res.distances(a);
        let cut = floor * d.first().copied().unwrap_or(0.0);
        let mut logs = Vec::new();
        for w in d.windows(2) {
            if w[0] > cut && w[1] > cut && w[0] > 0.0 {
                logs.push((w[1] / w[0]).ln());
            } else {
                break;
            }
        }
        if logs.is_empty() {
            rows.push((a, 0.0, true));
        } else {
            rows.push((a, (logs.iter().sum::<f64>() / logs.len() as f64).exp(), false));
        }
    }
    let fit: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 > 0.0 && !r.2).map(|r| (r.0.ln(), r.1.ln())).collect();
    let degenerate = fit.len() < 2;
    let exponent = if degenerate {
        None
    } else {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        Some(slope(&xs, &ys))
    };
    let threshold_alpha = rows.iter().find(|r| !r.2 && r.1 < 1.0).map(|r| r.0);
    let monotone = rows.windows(2).all(|w| w[1].1 < w[0].1);
    ContractionFit { rows, exponent, degenerate, threshold_alpha, monotone }
}

/// Outcome of the mollified uniqueness replay.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierCheck {
    pub report: EstimateReport,
    pub sup_y: f64,
    /// Largest entrywise excess in `|Y^d z^d|/4 <= j(Y^d/2) + j*(z^d/2) <= R^m (j(Y/2) + j*(z/2))`.
    pub domination_violation: f64,
    pub monotone_term: f64,
}

/// Replays the uniqueness argument for two trajectories driven by the same
/// draws: `Y = X_1 - X_2`, `zeta = xi_1 - xi_2`, both mollified by
/// `(I + delta A)^{-m}` with `m = op.m_power()`.
///
/// The mollified difference satisfies the exact identity
/// `|Y^d_m|^2/2 + sum dt <zeta^d, Y^d> + sum dt <A Y^d, Y^d> + sum |dY^d|^2/2
///  = |Y^d_0|^2/2 + sum <rho^d, Y^d>` where `rho` collects the noise and residual
/// differences; the report bounds the first two terms by the right-hand side
/// plus any negative part of the form. Passing also requires
/// `sup_t |Y(t)|_H <= envelope`.
pub fn uniqueness_mollifier_check<T: Real>(
    tr1: &Trajectory<T>,
    tr2: &Trajectory<T>,
    op: &DiscreteOperator<T>,
    g: &MonotoneGraph<T>,
    delta: T,
    envelope: f64,
) -> Result<MollifierCheck> {
    if tr1.states.len() != tr2.states.len() {
        return Err(Error::Dimension { expected: tr1.states.len(), got: tr2.states.len() });
    }
    let m = op.m_power();
    let fac = op.resolvent_factor(delta)?;
    let moll = |v: &[T]| {
        let mut x = v.to_vec();
        for _ in 0..m {
            x = fac.solve(&x);
        }
        x
    };
    let grid = op.grid();
    let dt = tr1.dt();
    let half = T::one() / (T::one() + T::one());
    let quarter = half * half;
    let mut y_prev = moll(&linalg::sub(&tr1.states[0], &tr2.states[0]));
    let y0 = to_f64(grid.norm_h_sq(&y_prev)) * 0.5;
    let mut sup_y = to_f64(grid.norm_h(&linalg::sub(&tr1.states[0], &tr2.states[0])));
    let mut zy = 0.0;
    let mut rhs_acc = y0;
    let mut lhs_max = y0;
    let mut dom = f64::NEG_INFINITY;
    for n in 0..tr1.steps() {
        let y_raw = linalg::sub(&tr1.states[n + 1], &tr2.states[n + 1]);
        sup_y = sup_y.max(to_f64(grid.norm_h(&y_raw)));
        let z_raw = linalg::sub(&tr1.selections[n], &tr2.selections[n]);
        let y = moll(&y_raw);
        let z = moll(&z_raw);
        // rho = dY + dt A Y + dt zeta, from the raw sequences
        let ay = op.apply_vec(&y);
        let rho: Vec<T> = (0..y.len()).map(|i| y[i] - y_prev[i] + dt * ay[i] + dt * z[i]).collect();
        let form = to_f64(grid.inner(&ay, &y));
        zy += to_f64(dt * grid.inner(&z, &y));
        rhs_acc += to_f64(grid.inner(&rho, &y)).abs() + to_f64(dt) * (-form).max(0.0);
        lhs_max = lhs_max.max(0.5 * to_f64(grid.norm_h_sq(&y)) + zy);
        let bound_raw: Vec<T> = y_raw
            .iter()
            .zip(&z_raw)
            .map(|(&a, &b)| g.j(a * half) + g.conjugate(b * half).finite().unwrap_or(T::infinity()))
            .collect();
        let bound = if bound_raw.iter().all(|v| v.is_finite()) {
            moll(&bound_raw)
        } else {
            vec![T::infinity(); bound_raw.len()]
        };
        for i in 0..y.len() {
            let mid = g.j(y[i] * half) + g.conjugate(z[i] * half).finite().unwrap_or(T::infinity());
            let left = quarter * (y[i] * z[i]).abs();
            let scale = if mid.is_finite() { T::one() + mid.abs() } else { T::one() };
            dom = dom.max(to_f64((left - mid) / scale));
            if bound[i].is_finite() {
                dom = dom.max(to_f64((mid - bound[i]) / scale));
            }
        }
        y_prev = y;
    }
    let tol = Tolerances::<f64>::default();
    let report = EstimateReport::new(
        "uniqueness_mollifier",
        lhs_max,
        rhs_acc,
        1.0,
        "mollified uniqueness argument",
        Tag::PerPath,
    )
    .with_sweep(format!("delta={}", to_f64(delta)))
    .with_detail(format!("sup|Y|_H = {sup_y:.3e}, envelope = {envelope:.3e}, domination excess = {dom:.3e}"))
    .require(sup_y <= envelope, "difference exceeds the envelope")
    .require(dom <= tol.mark.max(f64::EPSILON * 64.0), "Jensen domination violated");
    Ok(MollifierCheck { report, sup_y, domination_violation: dom, monotone_term: zy })
}

/// `sum_n dt ∫ (xi_1^n - xi_2^n)(X_1^{n+1} - X_2^{n+1})`.
pub fn monotone_term<T: Real>(tr1: &Trajectory<T>, tr2: &Trajectory<T>, op: &DiscreteOperator<T>) -> f64 {
    let dt = tr1.dt();
    (0..tr1.steps().min(tr2.steps()))
        .map(|n| {
            let z = linalg::sub(&tr1.selections[n], &tr2.selections[n]);
            let y = linalg::sub(&tr1.states[n + 1], &tr2.states[n + 1]);
            to_f64(dt * op.grid().inner(&z, &y))
        })
        .sum()
}

pub(crate) fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares line through the origin-free data: `(slope, intercept, r_squared)`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let b = slope(xs, ys);
    let a = my - b * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (b, a, r2)
}

#[cfg(test)]
mod tests;
