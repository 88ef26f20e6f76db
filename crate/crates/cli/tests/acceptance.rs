//! Acceptance criteria, one printed line each. Every oracle here is computed
//! independently of the code under test (closed forms, dense recursions, own
//! regressions). Criteria listed in `KNOWN_FAILURES` are reported as FAIL and
//! recorded in the decisions ledger; every other criterion must pass.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use monodrift::config;
use monodrift::studies::Setup;
use monodrift_core::noise_model::{NoiseKind, NoiseModel};
use monodrift_core::spatial_operator::audit_assumption_a;
use monodrift_core::spde_solver::{picard_iterate, solve_ensemble, PicardParams};
use monodrift_core::verification::{
    continuous_dependence_check, epsilon_cauchy_check, expectation_energy_sweep, graph_kernel_audit, jstar_sweep,
    lambda_convergence_study, RunSpec,
};
use monodrift_core::{
    Coefficients, DiscreteOperator, Extended, Grid, InitialData, MonotoneGraph, OperatorKind, Scheme, SolverParams,
    Stepper,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

/// Criterion 5 needs `|X_lambda - X_prox| < 10 x tol_step` at the smallest
/// lambda; the Yosida approximation error is O(lambda), far above that.
const KNOWN_FAILURES: [u32; 1] = [5];

struct Outcome {
    pass: bool,
    detail: String,
    /// Sub-requirements that must hold even when the criterion is a known failure.
    required: Vec<(String, bool)>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, required: Vec::new() }
}

fn default_setup() -> Setup {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let (cfg, _) = config::load(&path).expect("default config is valid");
    Setup::new(cfg, None, Some(2)).expect("default config builds")
}

// ---------- independent closed forms ----------

#[derive(Clone, Copy)]
enum Fam {
    Linear(f64),
    Power(f64),
    Sign,
    Sinh(f64),
}

impl Fam {
    fn graph(self) -> MonotoneGraph<f64> {
        match self {
            Fam::Linear(k) => MonotoneGraph::linear(k).unwrap(),
            Fam::Power(p) => MonotoneGraph::power(p).unwrap(),
            Fam::Sign => MonotoneGraph::sign(),
            Fam::Sinh(c) => MonotoneGraph::sinh(c).unwrap(),
        }
    }

    fn j(self, y: f64) -> f64 {
        match self {
            Fam::Linear(k) => 0.5 * k * y * y,
            Fam::Power(p) => y.abs().powf(p + 1.0) / (p + 1.0),
            Fam::Sign => y.abs(),
            Fam::Sinh(c) => c * (y.cosh() - 1.0),
        }
    }

    /// Convex conjugate; `None` for `+inf`.
    fn conj(self, r: f64) -> Option<f64> {
        match self {
            Fam::Linear(k) if k > 0.0 => Some(r * r / (2.0 * k)),
            Fam::Linear(_) => (r == 0.0).then_some(0.0),
            Fam::Power(p) => Some(p / (p + 1.0) * r.abs().powf((p + 1.0) / p)),
            Fam::Sign => (r.abs() <= 1.0 + 1e-12).then_some(0.0),
            Fam::Sinh(c) => {
                let s = (r / c).asinh();
                Some(r * s - (r * r + c * c).sqrt() + c)
            }
        }
    }

    /// Whether `r ∈ beta(y)` up to `tol` relative to the magnitudes.
    fn contains(self, y: f64, r: f64, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs() + b.abs());
        match self {
            Fam::Linear(k) => close(r, k * y),
            Fam::Power(p) => close(r, y.signum() * y.abs().powf(p)),
            Fam::Sign => {
                if y.abs() <= tol {
                    r.abs() <= 1.0 + tol
                } else {
                    close(r, y.signum())
                }
            }
            Fam::Sinh(c) => close(r, c * y.sinh()),
        }
    }
}

fn dirichlet_eigenvalue(k: usize, n: usize, l: f64) -> f64 {
    let h = l / (n + 1) as f64;
    let s = (k as f64 * PI * h / (2.0 * l)).sin();
    4.0 / (h * h) * s * s
}

/// `(I + delta A)` for the Dirichlet Laplacian stencil, dense.
fn laplacian_shift(n: usize, l: f64, delta: f64, shift: f64) -> Vec<Vec<f64>> {
    let h = l / (n + 1) as f64;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = 1.0 + delta * (2.0 / (h * h) + shift);
        if i > 0 {
            m[i][i - 1] = -delta / (h * h);
        }
        if i + 1 < n {
            m[i][i + 1] = -delta / (h * h);
        }
    }
    m
}

fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    inv
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b[0].len();
    a.iter().map(|row| (0..n).map(|j| row.iter().enumerate().map(|(k, x)| x * b[k][j]).sum()).collect()).collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Least squares `y = a + b x`, returning `(b, r2)`.
fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (b, r2)
}

// ---------- criteria ----------

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut fams = vec![Fam::Sign];
    for _ in 0..6 {
        fams.push(Fam::Linear(rng.random_range(0.0..3.0)));
        fams.push(Fam::Power(rng.random_range(0.5..4.0)));
        fams.push(Fam::Sinh(rng.random_range(0.1..2.0)));
    }
    let samples = 10_000;
    let mut v = BTreeMap::<&str, usize>::new();
    let mut max_duality: f64 = 0.0;
    for s in 0..samples {
        let f = fams[s % fams.len()];
        let g = f.graph();
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let (x, y): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (ex, ey) = (g.eval(lambda, x).unwrap(), g.eval(lambda, y).unwrap());
        let round = 1e-12 * (1.0 + x.abs() + y.abs());
        let mut bump = |k: &'static str, bad: bool| *v.entry(k).or_default() += bad as usize;
        bump("contraction", (ex.resolvent - ey.resolvent).abs() > (x - y).abs() + round);
        let yr = 1e-12 * (1.0 + ex.yosida.abs() + ey.yosida.abs());
        bump("yosida_lip", (ex.yosida - ey.yosida).abs() > (x - y).abs() / lambda + yr);
        // the yosida value is (x - J x)/lambda and lies in beta(J x)
        bump(
            "membership",
            !f.contains(ex.resolvent, ex.yosida, 1e-9)
                || ((x - ex.resolvent) / lambda - ex.yosida).abs() > 1e-9 * (1.0 + ex.yosida.abs()),
        );
        let jl = 0.5 * lambda * ex.yosida * ex.yosida + f.j(ex.resolvent);
        bump("moreau_value", (ex.moreau - jl).abs() > 1e-9 * (1.0 + jl));
        bump("moreau_le_j", ex.moreau > f.j(x) + 1e-12 * (1.0 + f.j(x)));
        let lambda2 = lambda * rng.random_range(0.1..1.0);
        bump("moreau_monotone_in_lambda", ex.moreau > g.moreau(lambda2, x).unwrap() + 1e-12 * (1.0 + ex.moreau));
        let r: f64 = rng.random_range(-3.0..3.0);
        if let Some(c) = f.conj(r) {
            bump("young_sign", f.j(y) + c - r * y < -1e-9 * (1.0 + f.j(y)));
        }
        let c = f.conj(ex.yosida).expect("yosida value is in the domain of j*");
        let duality = f.j(ex.resolvent) + c - ex.yosida * ex.resolvent;
        max_duality = max_duality.max(duality.abs());
        bump("duality", duality.abs() > 1e-9);
        // library conjugate against the closed form
        match g.conjugate(ex.yosida) {
            Extended::Finite(lc) => bump("conjugate_value", (lc - c).abs() > 1e-9 * (1.0 + c.abs())),
            Extended::PosInf => bump("conjugate_value", true),
        }
    }
    // library audit over the catalogue, including the piecewise family
    let lib = graph_kernel_audit(&MonotoneGraph::catalog(), samples, 7, 1e-9).unwrap();
    let total: usize = v.values().sum::<usize>() + lib.violations();
    outcome(
        total == 0 && max_duality <= 1e-9 && lib.max_duality_gap <= 1e-9,
        format!(
            "{samples} closed-form samples over {} graphs + {samples} catalogue samples, violations {total}, max duality gap {:.2e}/{:.2e}",
            fams.len(),
            max_duality,
            lib.max_duality_gap
        ),
    )
}

fn criterion_2() -> Outcome {
    let n = 32;
    let grid = Grid::new(n, 1.0).unwrap();
    let lap = DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, grid).unwrap();
    let div =
        DiscreteOperator::assemble(OperatorKind::DivergenceForm(Coefficients::constant(1.0, 0.3, 0.0, 0.0)), grid)
            .unwrap();
    let frac = DiscreteOperator::assemble(OperatorKind::Fractional { alpha: 0.5 }, grid).unwrap();
    let la = audit_assumption_a(&lap, 1000).unwrap();
    let lap_ok = ["i", "ii", "iii", "iv"].iter().all(|c| la.passes(c));
    let da = audit_assumption_a(&div, 1000).unwrap();
    let div_ok = ["i'", "ii", "iii"].iter().all(|c| da.passes(c));
    let spec_err = frac
        .principal_eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &mu)| (mu - dirichlet_eigenvalue(k + 1, n, 1.0).sqrt()).abs())
        .fold(0.0, f64::max);
    // sub-Markov: 0 <= (I + delta A)^{-1} f <= 1 for f in [0,1]^n
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut sub_markov_bad = 0;
    for op in [&lap, &div, &frac] {
        for _ in 0..1000 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            for delta in [0.01, 0.1, 1.0, 10.0] {
                let t = op.resolvent_solve(delta, &f).unwrap();
                sub_markov_bad += t.iter().filter(|&&v| v < -1e-10 || v > 1.0 + 1e-10).count();
            }
        }
    }
    outcome(
        lap_ok && div_ok && spec_err <= 1e-10 && sub_markov_bad == 0,
        format!(
            "laplacian i/ii/iii/iv {lap_ok}, div-form(b=0.3) i'/ii/iii {div_ok}, fractional spectrum err {spec_err:.2e}, sub-Markov violations {sub_markov_bad}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let n = 32;
    let fams = [Fam::Linear(1.0), Fam::Power(3.0), Fam::Sign, Fam::Sinh(1.0)];
    let mut graphs: Vec<(Box<dyn Fn(f64) -> f64>, &str)> =
        fams.iter().map(|&f| (Box::new(move |y| f.j(y)) as Box<dyn Fn(f64) -> f64>, "closed")).collect();
    let pw = MonotoneGraph::piecewise(1.0, vec![0.5, 1.5], vec![1.0, 0.5]).unwrap();
    graphs.push((Box::new(move |y| pw.j(y)), "piecewise"));
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for delta in [0.1, 1.0] {
        let t = invert(laplacian_shift(n, 1.0, delta, 0.0));
        for _ in 0..1000 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let tf = matvec(&t, &f);
            for (j, _) in &graphs {
                let jf: Vec<f64> = f.iter().map(|&v| j(v)).collect();
                let tjf = matvec(&t, &jf);
                for (a, b) in tf.iter().zip(&tjf) {
                    let ex = j(*a) - b;
                    worst = worst.max(ex);
                    if ex > 1e-10 {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("5 graphs x 2 deltas x 1000 f, violations {violations}, max excess {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let n = 24;
    let grid = Grid::new(n, 1.0).unwrap();
    let op = DiscreteOperator::assemble(OperatorKind::DirichletLaplacian, grid).unwrap();
    let zero_graph = MonotoneGraph::linear(0.0).unwrap();
    let x0: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x).sin()).collect();
    let params = SolverParams::new(1.0, 50, 0.1);
    let l1 = dirichlet_eigenvalue(1, n, 1.0);
    let mut decay_err: f64 = 0.0;
    for scheme in [Scheme::S1, Scheme::S2] {
        let noise = NoiseModel::zero(grid, 4);
        let tr = Stepper::new(scheme, &op, &zero_graph, &noise, params).unwrap().solve_path(&x0, 1, 0).unwrap();
        for (k, x) in tr.states.iter().enumerate() {
            let f = (1.0 + params.dt * l1).powi(-(k as i32));
            decay_err = decay_err.max(x.iter().zip(&x0).map(|(a, b)| (a - f * b).abs()).fold(0.0, f64::max));
        }
    }
    // additive noise, linear graph k: covariance recursion of the implicit scheme
    let k = 1.0;
    let g = MonotoneGraph::linear(k).unwrap();
    let gk = |m: usize, x: f64| 2.0 * (m as f64 * PI * x).sin();
    let noise = NoiseModel::from_fn(grid, 4, gk, NoiseKind::Additive).unwrap();
    let st = Stepper::new(Scheme::S2, &op, &g, &noise, params).unwrap();
    let ens = solve_ensemble(&st, &InitialData::Fixed(x0.clone()), 256, 404, 2, false);
    let (est, se) = ens.mean_of(|s| s.final_h_sq);
    let r = invert(laplacian_shift(n, 1.0, params.dt, k));
    let cols: Vec<Vec<f64>> = (1..=4).map(|m| grid.nodes().iter().map(|&x| gk(m, x)).collect()).collect();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols.iter().map(|c| c[i] * c[j]).sum()).collect()).collect();
    let mut mean = x0.clone();
    let mut cov = vec![vec![0.0; n]; n];
    let rt = transpose(&r);
    for _ in 0..params.steps {
        mean = matvec(&r, &mean);
        let inner: Vec<Vec<f64>> =
            cov.iter().zip(&q).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + params.dt * y).collect()).collect();
        cov = matmul(&matmul(&r, &inner), &rt);
    }
    let h = grid.h();
    let oracle = h * (mean.iter().map(|v| v * v).sum::<f64>() + (0..n).map(|i| cov[i][i]).sum::<f64>());
    let within = (est - oracle).abs() <= 3.0 * se;
    outcome(
        decay_err <= 1e-12 && within,
        format!("zero-noise decay err {decay_err:.2e}; E|X(T)|^2 = {est:.5e} vs oracle {oracle:.5e} (3 SE = {:.2e}, M = 256)", 3.0 * se),
    )
}

struct LambdaData {
    power: monodrift_core::verification::LambdaStudy<f64>,
    sign: monodrift_core::verification::LambdaStudy<f64>,
}

fn lambda_data(s: &Setup) -> LambdaData {
    let lambdas: Vec<f64> = (0..5).map(|i| 0.25f64.powi(i)).collect();
    assert_eq!(*lambdas.last().unwrap(), 1.0 / 256.0);
    let run = |g: &MonotoneGraph<f64>, amp: f64| {
        let x0: Vec<f64> = s.grid.nodes().iter().map(|&x| amp * (PI * x).sin()).collect();
        let spec = RunSpec {
            op: &s.op,
            graph: g,
            noise: &s.noise,
            params: s.params,
            scheme: Scheme::S1,
            x0: InitialData::Fixed(x0),
            paths: 32,
            seed: s.seed,
            workers: s.workers,
        };
        lambda_convergence_study(&spec, &lambdas).unwrap()
    };
    LambdaData { power: run(&MonotoneGraph::power(3.0).unwrap(), 0.5), sign: run(&MonotoneGraph::sign(), 2.0) }
}

fn criterion_5(d: &LambdaData) -> Outcome {
    let dec =
        |st: &monodrift_core::verification::LambdaStudy<f64>| st.rows.windows(2).all(|w| w[1].cauchy < w[0].cauchy);
    let (dp, ds) = (dec(&d.power), dec(&d.sign));
    let threshold = 10.0 * 1e-10;
    let gp = d.power.rows.last().unwrap().prox_gap;
    let gs = d.sign.rows.last().unwrap().prox_gap;
    let prox = gp < threshold && gs < threshold;
    Outcome {
        pass: dp && ds && prox,
        detail: format!(
            "Cauchy decreasing: power {dp}, sign {ds}; |X_l - X_prox| at l=1/256: power {gp:.2e}, sign {gs:.2e} vs {threshold:.0e}"
        ),
        required: vec![("cauchy_decreasing_power".into(), dp), ("cauchy_decreasing_sign".into(), ds)],
    }
}

fn variation(v: &[f64]) -> f64 {
    let pos: Vec<f64> = v.iter().copied().filter(|c| *c > 0.0 && c.is_finite()).collect();
    if pos.is_empty() {
        return 1.0;
    }
    pos.iter().fold(0.0f64, |a, &b| a.max(b)) / pos.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

fn criterion_6(d: &LambdaData) -> Outcome {
    let (er, _) = expectation_energy_sweep(&d.power.ensembles, 2.0);
    let (jr, _) = jstar_sweep(&d.power.ensembles, 2.0);
    let ve = variation(&er.iter().map(|r| r.constant).collect::<Vec<_>>());
    let vj = variation(&jr.iter().map(|r| r.constant).collect::<Vec<_>>());
    let (sr, _) = jstar_sweep(&d.sign.ensembles, 2.0);
    let vs = variation(&sr.iter().map(|r| r.constant).collect::<Vec<_>>());
    outcome(
        ve <= 2.0 && vj <= 2.0 && er.iter().chain(&jr).all(|r| r.pass),
        format!("power p=3 over 5 lambdas: energy constant variation {ve:.3}, j* constant variation {vj:.3} (sign j*: {vs:.3}, not gated)"),
    )
}

fn criterion_7(s: &Setup) -> Outcome {
    let eps: Vec<f64> = (0..7).map(|i| 0.5f64.powi(i)).collect();
    let spec = RunSpec {
        op: &s.op,
        graph: &s.graph,
        noise: &s.noise,
        params: s.params,
        scheme: Scheme::S2,
        x0: InitialData::Fixed(s.x0.clone()),
        paths: 32,
        seed: s.seed,
        workers: s.workers,
    };
    let cs = epsilon_cauchy_check(&spec, &eps).unwrap();
    let ratios: Vec<f64> = cs.rows.iter().map(|r| r.lhs / r.rhs).collect();
    let v = variation(&ratios);
    outcome(
        v <= 2.0 && ratios.iter().all(|r| r.is_finite() && *r > 0.0),
        format!(
            "lhs/rhs over eps = 1..2^-6: {}; max/min {v:.3}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn criterion_8(s: &Setup) -> Outcome {
    let dir: Vec<f64> = s.grid.nodes().iter().map(|&x| (2.0 * PI * x).sin()).collect();
    let deltas = [0.05, 0.1, 0.2, 0.4, 0.8];
    let alphas = [0.0, 4.0, 16.0];
    let spec = RunSpec {
        op: &s.op,
        graph: &s.graph,
        noise: &s.noise,
        params: s.params,
        scheme: s.scheme,
        x0: InitialData::Fixed(s.x0.clone()),
        paths: 32,
        seed: s.seed,
        workers: s.workers,
    };
    let ds = continuous_dependence_check(&spec, &dir, &deltas, &alphas).unwrap();
    let mut r2min: f64 = 1.0;
    for &a in &alphas {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            ds.rows.iter().filter(|r| r.alpha == a).map(|r| (r.data, r.f_alpha)).unzip();
        r2min = r2min.min(fit(&xs, &ys).1);
    }
    let st = Stepper::new(s.scheme, &s.op, &s.graph, &s.noise, s.params).unwrap();
    let a = st.solve_path(&s.x0, s.seed, 3).unwrap();
    let b = st.solve_path(&s.x0, s.seed, 3).unwrap();
    let bits = a.states.iter().flatten().zip(b.states.iter().flatten()).all(|(x, y)| x.to_bits() == y.to_bits());
    outcome(
        r2min >= 0.99 && bits && ds.bit_identical,
        format!("min R^2 {r2min:.6} over alpha {alphas:?}; identical data bit-identical {}", bits && ds.bit_identical),
    )
}

fn criterion_9(s: &Setup) -> Outcome {
    let pc = &s.cfg.picard_study;
    let nc = pc.noise.as_ref().expect("default picard noise is configured");
    assert_eq!(nc.kind, "multiplicative");
    assert_eq!(nc.sigma, "tanh");
    let noise = config::build_noise(nc, &s.op, "picard_study.noise").unwrap();
    let params = config::solver_params(&s.cfg.solver, pc.steps).unwrap().0;
    let st = Stepper::new(s.scheme, &s.op, &s.graph, &noise, params).unwrap();
    let alphas = vec![4.0, 16.0, 64.0, 256.0];
    let pp = PicardParams { alphas: alphas.clone(), iters: 5, paths: 64, seed: s.seed, workers: s.workers };
    let res = picard_iterate(&st, &InitialData::Fixed(s.x0.clone()), &pp).unwrap();
    let factors: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let d = res.distances(a);
            let logs: Vec<f64> = d.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
            (logs.iter().sum::<f64>() / logs.len() as f64).exp()
        })
        .collect();
    let mono = factors.windows(2).all(|w| w[1] < w[0]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = alphas.iter().zip(&factors).map(|(a, f)| (a.ln(), f.ln())).unzip();
    let (e, _) = fit(&xs, &ys);
    let below = factors.iter().any(|f| *f < 1.0);
    outcome(
        mono && (-0.7..=-0.3).contains(&e) && below,
        format!(
            "factors {} at alpha {alphas:?}; exponent {e:.3}; contraction {below}",
            factors.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    let mut codes = Vec::new();
    let mut secs = Vec::new();
    for (i, workers) in [1, 1, 3].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let t0 = std::time::Instant::now();
        let st = Command::new(env!("CARGO_BIN_EXE_monodrift"))
            .args(["full-suite", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--workers", &workers.to_string()])
            .output()
            .unwrap();
        secs.push(t0.elapsed().as_secs_f64());
        codes.push(st.status.code());
        trees.push(tree(&out));
    }
    let same = trees[0] == trees[1] && trees[0] == trees[2] && !trees[0].is_empty();
    let ok_codes = codes.iter().all(|c| *c == Some(0));
    let fast = secs.iter().all(|s| *s < 600.0);
    outcome(
        same && ok_codes && fast,
        format!(
            "{} files; identical across runs and workers 1/1/3: {same}; exit codes {codes:?}; {:.1}s per run",
            trees[0].len(),
            secs.iter().sum::<f64>() / 3.0
        ),
    )
}

#[test]
fn acceptance() {
    let s = default_setup();
    let d = lambda_data(&s);
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "graph kernel identities", criterion_1()),
        (2, "operator audit", criterion_2()),
        (3, "Jensen for the resolvent", criterion_3()),
        (4, "zero-noise decay and covariance oracle", criterion_4()),
        (5, "lambda Cauchy sweep and limit gap", criterion_5(&d)),
        (6, "fitted constants uniform in lambda", criterion_6(&d)),
        (7, "epsilon-smoothing ratio stability", criterion_7(&s)),
        (8, "continuous dependence and determinism", criterion_8(&s)),
        (9, "Picard contraction", criterion_9(&s)),
        (10, "byte-identical full-suite", criterion_10()),
    ];
    let mut unexpected = Vec::new();
    for (k, name, o) in &results {
        let known = KNOWN_FAILURES.contains(k);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, ledgered)",
            (false, false) => "FAIL",
        };
        println!("criterion {k:>2} {tag}: {name}: {}", o.detail);
        if !o.pass && !known {
            unexpected.push(*k);
        }
        for (what, ok) in &o.required {
            if !ok {
                unexpected.push(*k);
                println!("criterion {k:>2} sub-requirement failed: {what}");
            }
        }
        if o.pass && known {
            println!("criterion {k:>2} now passes; remove it from KNOWN_FAILURES");
        }
    }
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}
