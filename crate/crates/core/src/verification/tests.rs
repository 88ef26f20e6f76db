use super::*;
use crate::noise_model::{NoiseKind, NoiseModel};
use crate::spatial_operator::{Grid, OperatorKind};
use crate::spde_solver::{solve_ensemble, solve_path, InitialData, PicardRow, SolverParams, Stepper};

fn laplacian(n: usize) -> DiscreteOperator<f64> {
    DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, Grid::new(n, 1.0).unwrap()).unwrap()
}

fn additive(op: &DiscreteOperator<f64>, amp: f64) -> NoiseModel<f64> {
    NoiseModel::from_fn(
        *op.grid(),
        4,
        |k, x| amp * (k as f64 * std::f64::consts::PI * x).sin() / k as f64,
        NoiseKind::Additive,
    )
    .unwrap()
}

fn bump(op: &DiscreteOperator<f64>) -> Vec<f64> {
    op.grid().nodes().iter().map(|&x| (std::f64::consts::PI * x).sin()).collect()
}

#[test]
fn report_margin_rule() {
    let r = EstimateReport::new("x", 1.0, 2.0, 1.0, "role", Tag::PerPath);
    assert!(r.pass);
    assert_eq!(r.margin, 1.0);
    assert!(!EstimateReport::new("x", 2.0, 1.0, 1.0, "role", Tag::PerPath).pass);
    assert!(EstimateReport::new("x", 1.0 + 1e-12, 1.0, 1.0, "role", Tag::PerPath).pass);
    assert!(!EstimateReport::new("x", f64::INFINITY, 1.0, 1.0, "role", Tag::PerPath).pass);
    assert!(!EstimateReport::new("x", 0.0, 1.0, 1.0, "role", Tag::PerPath).require(false, "side").pass);
}

#[test]
fn regression_of_exact_line() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys = [1.0, 3.0, 5.0, 7.0];
    let (b, a, r2) = linear_regression(&xs, &ys);
    assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
}

#[test]
fn order_fit_recovers_power_and_flags_exact() {
    let dts = [0.1, 0.05, 0.025];
    let d: Vec<f64> = dts.iter().map(|h| 3.0 * h * h).collect();
    let fit = defect_order_fit(&dts, &d);
    assert!((fit.order.unwrap() - 2.0).abs() < 1e-12);
    let exact = defect_order_fit(&dts, &[-1.0, 0.0, -0.5]);
    assert!(exact.exact && exact.order.is_none());
}

#[test]
fn uniformity_ratio() {
    let u = uniformity("c", vec![(1.0, 2.0), (0.5, 3.0), (0.25, 4.0)], 2.0);
    assert_eq!(u.variation, 2.0);
    assert!(u.pass);
    assert!(!uniformity("c", vec![(1.0, 1.0), (0.5, 2.5)], 2.0).pass);
}

#[test]
fn pathwise_energy_chain_holds_for_catalog() {
    let op = laplacian(24);
    let noise = additive(&op, 1.0);
    for g in MonotoneGraph::<f64>::catalog() {
        let params = SolverParams::new(1.0, 40, 0.05);
        for path in 0..3 {
            let tr = solve_path(Scheme::S1, &op, &g, &noise, &bump(&op), params, 11, path).unwrap();
            let out = pathwise_energy_check(&tr, &op, &g).unwrap();
            assert!(out.report.pass, "{}: {:?}", g.family(), out.report);
            assert!(out.defect <= 1e-9, "{}", out.defect);
            assert!(out.k_constant >= 7.0);
        }
    }
}

#[test]
fn pathwise_energy_detects_forged_growth() {
    let op = laplacian(16);
    let noise = additive(&op, 0.5);
    let g = MonotoneGraph::power(3.0).unwrap();
    let params = SolverParams::new(1.0, 20, 0.1);
    let mut tr = solve_path(Scheme::S1, &op, &g, &noise, &bump(&op), params, 2, 0).unwrap();
    for row in tr.ledger.iter_mut().skip(10) {
        row.norm_h_sq *= 1e3;
    }
    let out = pathwise_energy_check(&tr, &op, &g).unwrap();
    assert!(out.defect > 0.0);
    assert!(!out.report.pass);
}

#[test]
fn pathwise_energy_rejects_s2_and_zero_operator() {
    let op = laplacian(8);
    let noise = additive(&op, 0.5);
    let g = MonotoneGraph::sign();
    let tr = solve_path(Scheme::S2, &op, &g, &noise, &bump(&op), SolverParams::new(1.0, 4, 0.1), 2, 0).unwrap();
    assert!(pathwise_energy_check(&tr, &op, &g).is_err());
    let zero = DiscreteOperator::assemble(OperatorKind::Zero, *op.grid()).unwrap();
    let tr = solve_path(Scheme::S1, &zero, &g, &noise, &bump(&op), SolverParams::new(1.0, 4, 0.1), 2, 0).unwrap();
    assert!(pathwise_energy_check(&tr, &zero, &g).is_err());
}

#[test]
fn contraction_fit_on_synthetic_factors() {
    let alphas = [4.0f64, 16.0, 64.0, 256.0];
    let mut rows = Vec::new();
    for &a in &alphas {
        let q = 2.0 / a.sqrt();
        for k in 0..5 {
            rows.push(PicardRow { alpha: a, k, distance: q.powi(k as i32) });
        }
    }
    let fit = contraction_rate_fit(&PicardResult { rows, failures: vec![] }, 1e-12);
    assert!(!fit.degenerate && fit.monotone);
    assert!((fit.exponent.unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(fit.threshold_alpha, Some(16.0));
    for (a, f, _) in &fit.rows {
        assert!((f - 2.0 / a.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn contraction_fit_flags_noise_floor() {
    let rows = (0..4).map(|k| PicardRow { alpha: 1.0, k, distance: if k == 0 { 1.0 } else { 0.0 } }).collect();
    let fit = contraction_rate_fit(&PicardResult { rows, failures: vec![] }, 1e-12);
    assert!(fit.degenerate && fit.rows[0].2);
}

#[test]
fn mollifier_replay_identical_runs_are_zero() {
    let op = laplacian(20);
    let noise = additive(&op, 1.0);
    for g in [MonotoneGraph::sign(), MonotoneGraph::power(3.0).unwrap()] {
        let params = SolverParams::new(0.5, 25, 0.05);
        let tr1 = solve_path(Scheme::S2, &op, &g, &noise, &bump(&op), params, 5, 0).unwrap();
        let tr2 = solve_path(Scheme::S2, &op, &g, &noise, &bump(&op), params, 5, 0).unwrap();
        let ok = uniqueness_mollifier_check(&tr1, &tr2, &op, &g, 0.01, params.tol_step).unwrap();
        assert!(ok.report.pass, "{:?}", ok.report);
        assert_eq!(ok.sup_y, 0.0);
        assert_eq!(ok.report.lhs, 0.0);
    }
}

#[test]
fn mollifier_replay_regularized_against_prox_within_envelope() {
    let op = laplacian(20);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::power(3.0).unwrap();
    let mut dist = Vec::new();
    for lambda in [1e-2, 1e-3] {
        let params = SolverParams::new(0.5, 25, lambda);
        let tr1 = solve_path(Scheme::S1, &op, &g, &noise, &bump(&op), params, 5, 0).unwrap();
        let tr2 = solve_path(Scheme::S2, &op, &g, &noise, &bump(&op), params, 5, 0).unwrap();
        // the regularization error is first order in lambda; 10 lambda is a generous envelope
        let out = uniqueness_mollifier_check(&tr1, &tr2, &op, &g, 0.01, 10.0 * lambda).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
        assert!(out.domination_violation <= 1e-10);
        dist.push(out.sup_y);
    }
    assert!(dist[1] < dist[0]);
}

#[test]
fn mollifier_replay_fails_for_perturbed_data() {
    let op = laplacian(20);
    let noise = additive(&op, 1.0);
    for g in [MonotoneGraph::sign(), MonotoneGraph::power(3.0).unwrap()] {
        let params = SolverParams::new(0.5, 25, 0.05);
        let x1 = bump(&op);
        let x2: Vec<f64> = x1.iter().map(|v| 0.3 * v).collect();
        let tr1 = solve_path(Scheme::S2, &op, &g, &noise, &x1, params, 5, 0).unwrap();
        let tr2 = solve_path(Scheme::S2, &op, &g, &noise, &x2, params, 5, 0).unwrap();
        let bad = uniqueness_mollifier_check(&tr1, &tr2, &op, &g, 0.01, params.tol_step).unwrap();
        assert!(!bad.report.pass);
        // the energy identity and the Jensen domination still hold; only the envelope fails
        assert!(bad.report.lhs <= bad.report.rhs * (1.0 + 1e-9));
        assert!(bad.domination_violation <= 1e-10);
        assert!(bad.monotone_term >= -1e-12);
    }
}

#[test]
fn pathwise_energy_closed_form_for_linear_decay() {
    let op = laplacian(31);
    let h = op.grid().h();
    let lam1 = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let v1 = bump(&op);
    let noise = NoiseModel::zero(*op.grid(), 1);
    let g = MonotoneGraph::linear(0.0).unwrap();
    let params = SolverParams::new(1.0, 30, 0.5);
    let tr = solve_path(Scheme::S1, &op, &g, &noise, &v1, params, 1, 0).unwrap();
    let out = pathwise_energy_check(&tr, &op, &g).unwrap();
    let c = op.coercivity().c;
    let f = 1.0 / (1.0 + params.dt * lam1);
    let v_sq = op.grid().norm_h_sq(&v1);
    let geo: f64 = (1..=30).map(|n| f.powi(2 * n)).sum();
    let lhs = v_sq * (1.0 + c * (1.0 + lam1) * params.dt * geo);
    assert!((out.report.lhs - lhs).abs() <= 1e-10 * lhs);
    assert!((out.report.rhs - out.k_constant * v_sq).abs() <= 1e-12 * v_sq * out.k_constant);
    assert!(out.report.pass);
}

#[test]
fn pathwise_energy_zero_data_is_zero() {
    let op = laplacian(8);
    let noise = NoiseModel::zero(*op.grid(), 1);
    let g = MonotoneGraph::power(3.0).unwrap();
    let tr = solve_path(Scheme::S1, &op, &g, &noise, &[0.0; 8], SolverParams::new(1.0, 5, 0.1), 1, 0).unwrap();
    let out = pathwise_energy_check(&tr, &op, &g).unwrap();
    assert_eq!((out.report.lhs, out.report.rhs), (0.0, 0.0));
    assert!(out.report.pass);
}

#[test]
fn pathwise_defect_under_step_refinement() {
    let op = laplacian(16);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::power(3.0).unwrap();
    let mut dts = Vec::new();
    let mut defects = Vec::new();
    for j in 3..7 {
        let steps = 1usize << j;
        let params = SolverParams::new(1.0, steps, 0.1);
        let tr = solve_path(Scheme::S1, &op, &g, &noise, &bump(&op), params, 4, 0).unwrap();
        let out = pathwise_energy_check(&tr, &op, &g).unwrap();
        dts.push(params.dt);
        defects.push(out.defect.max(0.0));
    }
    let fit = defect_order_fit(&dts, &defects);
    assert!(fit.exact || fit.order.unwrap() >= 0.5, "{fit:?}");
}

fn spec<'a>(
    op: &'a DiscreteOperator<f64>,
    g: &'a MonotoneGraph<f64>,
    noise: &'a NoiseModel<f64>,
    params: SolverParams<f64>,
    scheme: Scheme,
    paths: usize,
) -> RunSpec<'a, f64> {
    RunSpec { op, graph: g, noise, params, scheme, x0: InitialData::Fixed(bump(op)), paths, seed: 9, workers: 2 }
}

#[test]
fn lambda_study_converges_at_first_order() {
    let op = laplacian(16);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::power(3.0).unwrap();
    let s = spec(&op, &g, &noise, SolverParams::new(0.5, 20, 1.0), Scheme::S1, 4);
    let study = lambda_convergence_study(&s, &[1.0, 0.25, 0.0625, 0.015625]).unwrap();
    assert!(study.strictly_decreasing, "{:?}", study.rows);
    assert!(study.rate > 0.5 && study.rate < 1.5, "{}", study.rate);
    assert_eq!(study.ensembles.len(), 4);
    let (reports, u) = expectation_energy_sweep(&study.ensembles, 2.0);
    assert!(reports.iter().all(|r| r.pass));
    assert!(u.variation >= 1.0);
    let (jr, _) = jstar_sweep(&study.ensembles, 2.0);
    assert!(jr.iter().all(|r| r.pass), "{jr:?}");
}

#[test]
fn epsilon_study_ratios_are_finite_and_monotone_term_nonnegative() {
    let op = laplacian(16);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::sign();
    let s = spec(&op, &g, &noise, SolverParams::new(0.5, 20, 0.05), Scheme::S2, 4);
    let study = epsilon_cauchy_check(&s, &[1.0, 0.5, 0.25]).unwrap();
    assert_eq!(study.rows.len(), 3);
    for r in &study.rows {
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        assert!(r.monotone_min >= -1e-12);
        assert_eq!(r.delta, r.epsilon / 2.0);
    }
    assert!(study.reports.iter().all(|r| r.pass));
}

#[test]
fn dependence_is_linear_for_linear_problem() {
    // For a linear graph and additive noise the difference solves a
    // deterministic linear equation, so F_alpha is exactly proportional to delta.
    let op = laplacian(16);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::linear(1.0).unwrap();
    let s = spec(&op, &g, &noise, SolverParams::new(0.5, 20, 0.05), Scheme::S2, 3);
    let dir: Vec<f64> = op.grid().nodes().iter().map(|&x| x * (1.0 - x)).collect();
    let study = continuous_dependence_check(&s, &dir, &[0.1, 0.2, 0.4], &[0.0, 4.0]).unwrap();
    assert!(study.bit_identical);
    for &(_, slope, intercept, r2) in &study.fits {
        assert!((r2 - 1.0).abs() < 1e-10);
        assert!(intercept.abs() < 1e-10 * slope.abs());
    }
    // the contraction of a monotone coercive problem keeps F_0 above the H-distance at t = 0
    assert!(study.rows.iter().all(|r| r.f_alpha >= r.data * (1.0 - 1e-12)));
}

#[test]
fn expectation_energy_constant_is_energy_over_data() {
    let op = laplacian(12);
    let noise = additive(&op, 1.0);
    let g = MonotoneGraph::power(3.0).unwrap();
    let st = Stepper::new(Scheme::S1, &op, &g, &noise, SolverParams::new(0.5, 10, 0.1)).unwrap();
    let ens = solve_ensemble(&st, &InitialData::Fixed(bump(&op)), 8, 3, 2, false);
    let r = expectation_energy_check(&ens, None);
    let e: f64 = ens.summaries.iter().map(|s| s.sup_h_sq + s.l2_v_sq + s.int_xi_x).sum::<f64>() / 8.0;
    let d: f64 = ens.summaries.iter().map(|s| s.x0_h_sq + s.hs_sq).sum::<f64>() / 8.0;
    assert!((r.lhs - e).abs() <= 1e-12 * e);
    assert!((r.constant - e / d).abs() <= 1e-12 * e / d);
    assert!(r.pass);
}

#[test]
fn kernel_audit_small_sample_is_clean() {
    let a = graph_kernel_audit(&MonotoneGraph::catalog(), 2000, 1, 1e-9).unwrap();
    assert_eq!(a.violations(), 0, "{a:?}");
    assert_eq!(a.samples, 2000);
}

#[test]
fn jensen_audit_counts_every_triple() {
    let op = laplacian(10);
    let a = jensen_audit(&op, &MonotoneGraph::catalog(), &[0.1, 1.0], 20, 3, 1e-10).unwrap();
    assert_eq!(a.samples, 20 * 5 * 2);
    assert_eq!(a.violations, 0);
}
