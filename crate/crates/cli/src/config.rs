//! TOML experiment configuration, validation with field paths, and builders
//! for the core objects.

use std::fmt;
use std::path::Path;

use monodrift_core::noise_model::{NoiseKind, NoiseModel, Sigma};
use monodrift_core::spde_solver::{InnerSolver, ProxMode};
use monodrift_core::{Coefficients, DiscreteOperator, Grid, MonotoneGraph, OperatorKind, Scheme, SolverParams};
use serde::Deserialize;
use std::sync::Arc;

use crate::expr::{Env, Expr, Var};

/// One constraint violation, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn d_one() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub workers: Option<usize>,
    pub grid: GridCfg,
    #[serde(default)]
    pub operator: OperatorCfg,
    #[serde(default)]
    pub graph: GraphCfg,
    #[serde(default)]
    pub noise: NoiseCfg,
    #[serde(default)]
    pub initial: InitialCfg,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default)]
    pub ensemble: EnsembleCfg,
    #[serde(default)]
    pub check_graph: CheckGraphCfg,
    #[serde(default)]
    pub audit_operator: AuditCfg,
    #[serde(default)]
    pub solve: SolveCfg,
    #[serde(default)]
    pub lambda_study: LambdaStudyCfg,
    #[serde(default)]
    pub epsilon_study: EpsilonStudyCfg,
    #[serde(default)]
    pub dependence_study: DependenceStudyCfg,
    #[serde(default)]
    pub picard_study: PicardStudyCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub n: usize,
    #[serde(rename = "L", default = "d_one")]
    pub length: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorCfg {
    pub kind: String,
    pub a: String,
    pub b: String,
    pub c: String,
    pub a0: String,
    pub alpha: Option<f64>,
    /// Resolvent power used for smoothing and mollification.
    pub m: Option<usize>,
    /// Audit conditions that must pass (audit-operator only).
    pub require: Option<Vec<String>>,
}

impl Default for OperatorCfg {
    fn default() -> Self {
        Self {
            kind: "laplacian".into(),
            a: "1".into(),
            b: "0".into(),
            c: "0".into(),
            a0: "0".into(),
            alpha: None,
            m: None,
            require: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphCfg {
    pub kind: String,
    pub k: Option<f64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub slope: Option<f64>,
    pub breaks: Option<Vec<f64>>,
    pub jumps: Option<Vec<f64>>,
}

impl Default for GraphCfg {
    fn default() -> Self {
        Self { kind: "power".into(), k: None, p: Some(3.0), c: None, slope: None, breaks: None, jumps: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCfg {
    pub kind: String,
    #[serde(rename = "K")]
    pub modes: usize,
    pub g: String,
    pub sigma: String,
    pub scale: f64,
    pub bound: f64,
    pub value: f64,
    pub epsilon: f64,
}

impl Default for NoiseCfg {
    fn default() -> Self {
        Self {
            kind: "additive".into(),
            modes: 4,
            g: "exp(-k)*sin(k*pi*x/L)".into(),
            sigma: "tanh".into(),
            scale: 1.0,
            bound: 1.0,
            value: 1.0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCfg {
    pub expr: String,
}

impl Default for InitialCfg {
    fn default() -> Self {
        Self { expr: "sin(pi*x/L)".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverCfg {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    /// `"S1"` or `"S2"`; when absent, `lambda = 0` selects S2.
    pub scheme: Option<String>,
    pub lambda: f64,
    pub inner: String,
    pub theta: f64,
    pub alpha: f64,
    pub tol_step: f64,
    pub max_inner: usize,
    pub prox: String,
}

impl Default for SolverCfg {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            steps: None,
            dt: None,
            scheme: None,
            lambda: 0.1,
            inner: "auto".into(),
            theta: 0.5,
            alpha: 0.0,
            tol_step: 1e-10,
            max_inner: 200,
            prox: "implicit".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleCfg {
    #[serde(rename = "M")]
    pub paths: usize,
}

impl Default for EnsembleCfg {
    fn default() -> Self {
        Self { paths: 32 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckGraphCfg {
    pub samples: usize,
    /// Audit the whole family catalogue instead of the configured graph.
    pub catalog: bool,
    pub gap_tol: f64,
    pub dump: bool,
}

impl Default for CheckGraphCfg {
    fn default() -> Self {
        Self { samples: 10_000, catalog: false, gap_tol: 1e-9, dump: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditCfg {
    pub probes: usize,
    pub jensen_samples: usize,
    pub jensen_deltas: Vec<f64>,
    pub jensen_tol: f64,
    /// Additional operators audited on the same grid.
    pub operators: Vec<OperatorCfg>,
}

impl Default for AuditCfg {
    fn default() -> Self {
        Self {
            probes: 1000,
            jensen_samples: 1000,
            jensen_deltas: vec![0.1, 1.0],
            jensen_tol: 1e-10,
            operators: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SolveCfg {
    #[serde(rename = "M")]
    pub paths: Option<usize>,
    pub dump_paths: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseCfg {
    pub graph: GraphCfg,
    pub initial: Option<String>,
    #[serde(default = "d_true")]
    pub uniformity: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaStudyCfg {
    pub lambdas: Vec<f64>,
    /// Subset of `lambdas` entering the uniformity sweep; all of them when empty.
    pub uniformity_lambdas: Vec<f64>,
    pub uniformity_limit: f64,
    #[serde(rename = "M")]
    pub paths: Option<usize>,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
    /// Graph and initial datum per case; the configured ones when empty.
    pub cases: Vec<CaseCfg>,
}

impl Default for LambdaStudyCfg {
    fn default() -> Self {
        Self {
            lambdas: (0..5).map(|i| 0.25f64.powi(i)).collect(),
            uniformity_lambdas: Vec::new(),
            uniformity_limit: 2.0,
            paths: None,
            steps: None,
            cases: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonStudyCfg {
    pub epsilons: Vec<f64>,
    pub scheme: Option<String>,
    pub lambda: Option<f64>,
    #[serde(rename = "M")]
    pub paths: Option<usize>,
    pub stability_limit: f64,
}

impl Default for EpsilonStudyCfg {
    fn default() -> Self {
        Self {
            epsilons: (0..7).map(|i| 0.5f64.powi(i)).collect(),
            scheme: None,
            lambda: None,
            paths: None,
            stability_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DependenceStudyCfg {
    pub deltas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub direction: String,
    #[serde(rename = "M")]
    pub paths: Option<usize>,
    pub r2_min: f64,
    pub constant_limit: f64,
}

impl Default for DependenceStudyCfg {
    fn default() -> Self {
        Self {
            deltas: vec![0.05, 0.1, 0.2, 0.4, 0.8],
            alphas: vec![0.0, 4.0, 16.0],
            direction: "sin(2*pi*x/L)".into(),
            paths: None,
            r2_min: 0.99,
            constant_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardStudyCfg {
    pub alphas: Vec<f64>,
    pub iters: usize,
    #[serde(rename = "M")]
    pub paths: Option<usize>,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
    pub noise: Option<NoiseCfg>,
    pub floor: f64,
    pub exponent_min: f64,
    pub exponent_max: f64,
}

impl Default for PicardStudyCfg {
    fn default() -> Self {
        Self {
            alphas: vec![4.0, 16.0, 64.0, 256.0],
            iters: 5,
            paths: None,
            steps: None,
            noise: None,
            floor: 1e-12,
            exponent_min: -0.7,
            exponent_max: -0.3,
        }
    }
}

/// Parses TOML text; syntax and type errors carry the offending field path.
pub fn parse(text: &str) -> Result<Config, Vec<Diagnostic>> {
    if text.trim().is_empty() {
        return Err(vec![Diagnostic::new("", "parse error: empty configuration")]);
    }
    let de = toml::Deserializer::parse(text)
        .map_err(|e| vec![Diagnostic::new("", format!("parse error: {}", e.message()))])?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        vec![Diagnostic::new(path, format!("parse error: {}", e.inner().message()))]
    })
}

/// Reads, parses and validates a configuration file.
pub fn load(path: &Path) -> Result<(Config, Vec<u8>), Vec<Diagnostic>> {
    let bytes =
        std::fs::read(path).map_err(|e| vec![Diagnostic::new("", format!("cannot read {}: {e}", path.display()))])?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| vec![Diagnostic::new("", "configuration is not UTF-8")])?;
    let cfg = parse(&text)?;
    let diags = validate(&cfg);
    if diags.is_empty() {
        Ok((cfg, bytes))
    } else {
        Err(diags)
    }
}

/// Every constraint violation of a parsed configuration; empty when valid.
pub fn validate(cfg: &Config) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    let grid = match build_grid(cfg) {
        Ok(g) => Some(g),
        Err(e) => {
            d.push(e);
            None
        }
    };
    if cfg.workers == Some(0) {
        d.push(Diagnostic::new("workers", "must be >= 1"));
    }
    if let Err(e) = build_graph(&cfg.graph, "graph") {
        d.push(e);
    }
    if let Err(mut e) = solver_params(&cfg.solver, None) {
        d.append(&mut e);
    }
    if cfg.ensemble.paths == 0 {
        d.push(Diagnostic::new("ensemble.M", "must be >= 1"));
    }
    if let Some(grid) = grid {
        let op = match build_operator(&cfg.operator, grid, "operator") {
            Ok(op) => Some(op),
            Err(e) => {
                d.push(e);
                None
            }
        };
        if let Err(e) = build_initial(&cfg.initial.expr, &grid, "initial.expr") {
            d.push(e);
        }
        if let Some(op) = &op {
            if let Err(e) = build_noise(&cfg.noise, op, "noise") {
                d.push(e);
            }
            if let Some(nc) = &cfg.picard_study.noise {
                if let Err(e) = build_noise(nc, op, "picard_study.noise") {
                    d.push(e);
                }
            }
        }
        for (i, oc) in cfg.audit_operator.operators.iter().enumerate() {
            if let Err(e) = build_operator(oc, grid, &format!("audit_operator.operators[{i}]")) {
                d.push(e);
            }
        }
        for (i, c) in cfg.lambda_study.cases.iter().enumerate() {
            if let Err(e) = build_graph(&c.graph, &format!("lambda_study.cases[{i}].graph")) {
                d.push(e);
            }
            if let Some(x) = &c.initial {
                if let Err(e) = build_initial(x, &grid, &format!("lambda_study.cases[{i}].initial")) {
                    d.push(e);
                }
            }
        }
        if let Err(e) = build_initial(&cfg.dependence_study.direction, &grid, "dependence_study.direction") {
            d.push(e);
        }
    }
    let positive_list = |d: &mut Vec<Diagnostic>, path: &str, v: &[f64]| {
        if v.is_empty() {
            d.push(Diagnostic::new(path, "must not be empty"));
        } else if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            d.push(Diagnostic::new(path, "entries must be finite and > 0"));
        }
    };
    positive_list(&mut d, "lambda_study.lambdas", &cfg.lambda_study.lambdas);
    positive_list(&mut d, "epsilon_study.epsilons", &cfg.epsilon_study.epsilons);
    positive_list(&mut d, "dependence_study.deltas", &cfg.dependence_study.deltas);
    positive_list(&mut d, "picard_study.alphas", &cfg.picard_study.alphas);
    for l in &cfg.lambda_study.uniformity_lambdas {
        if !cfg.lambda_study.lambdas.contains(l) {
            d.push(Diagnostic::new("lambda_study.uniformity_lambdas", format!("{l} is not in lambda_study.lambdas")));
        }
    }
    if cfg.dependence_study.deltas.len() < 2 {
        d.push(Diagnostic::new("dependence_study.deltas", "needs at least 2 values"));
    }
    if cfg.dependence_study.alphas.is_empty()
        || cfg.dependence_study.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0))
    {
        d.push(Diagnostic::new("dependence_study.alphas", "needs at least one finite alpha >= 0"));
    }
    if cfg.picard_study.iters < 3 {
        d.push(Diagnostic::new("picard_study.iters", "needs at least 3 iterations"));
    }
    if cfg.check_graph.samples == 0 {
        d.push(Diagnostic::new("check_graph.samples", "must be >= 1"));
    }
    for (path, v) in [
        ("lambda_study.M", cfg.lambda_study.paths),
        ("epsilon_study.M", cfg.epsilon_study.paths),
        ("dependence_study.M", cfg.dependence_study.paths),
        ("picard_study.M", cfg.picard_study.paths),
        ("solve.M", cfg.solve.paths),
    ] {
        if v == Some(0) {
            d.push(Diagnostic::new(path, "must be >= 1"));
        }
    }
    for (path, v) in [("lambda_study.N", cfg.lambda_study.steps), ("picard_study.N", cfg.picard_study.steps)] {
        if let Some(n) = v {
            if let Err(mut e) = solver_params(&cfg.solver, Some(n)) {
                if n == 0 {
                    d.push(Diagnostic::new(path, "must be >= 1"));
                } else {
                    d.append(&mut e);
                }
            }
        }
    }
    if let Some(s) = &cfg.epsilon_study.scheme {
        if parse_scheme(s).is_none() {
            d.push(Diagnostic::new("epsilon_study.scheme", "must be \"S1\" or \"S2\""));
        }
    }
    d
}

pub fn build_grid(cfg: &Config) -> Result<Grid<f64>, Diagnostic> {
    if cfg.grid.n < 2 {
        return Err(Diagnostic::new("grid.n", "must be >= 2"));
    }
    if !(cfg.grid.length.is_finite() && cfg.grid.length > 0.0) {
        return Err(Diagnostic::new("grid.L", "must be finite and > 0"));
    }
    Grid::new(cfg.grid.n, cfg.grid.length).map_err(|e| Diagnostic::new("grid", e.to_string()))
}

fn coefficient(src: &str, grid: &Grid<f64>, path: String) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>, Diagnostic> {
    let e = Expr::parse(src, &[Var::X, Var::L]).map_err(|e| Diagnostic::new(path, e.to_string()))?;
    let l = grid.length();
    Ok(Arc::new(move |x| e.eval(Env { x, k: 0.0, l })))
}

pub fn build_operator(oc: &OperatorCfg, grid: Grid<f64>, path: &str) -> Result<DiscreteOperator<f64>, Diagnostic> {
    let kind = match oc.kind.as_str() {
        "laplacian" => OperatorKind::DirichletLaplacian,
        "zero" => OperatorKind::Zero,
        "fractional" => {
            let alpha =
                oc.alpha.ok_or_else(|| Diagnostic::new(format!("{path}.alpha"), "required for kind \"fractional\""))?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Diagnostic::new(format!("{path}.alpha"), "must lie in (0, 1)"));
            }
            OperatorKind::Fractional { alpha }
        }
        "divergence_form" => OperatorKind::DivergenceForm(Coefficients {
            a: coefficient(&oc.a, &grid, format!("{path}.a"))?,
            b: coefficient(&oc.b, &grid, format!("{path}.b"))?,
            c: coefficient(&oc.c, &grid, format!("{path}.c"))?,
            a0: coefficient(&oc.a0, &grid, format!("{path}.a0"))?,
        }),
        other => {
            return Err(Diagnostic::new(
                format!("{path}.kind"),
                format!("unknown operator kind \"{other}\" (laplacian, divergence_form, fractional, zero)"),
            ))
        }
    };
    let op = DiscreteOperator::assemble(kind, grid).map_err(|e| Diagnostic::new(path.to_string(), e.to_string()))?;
    if let Some(req) = &oc.require {
        for r in req {
            if !["i", "i'", "ii", "iii", "iv"].contains(&r.as_str()) {
                return Err(Diagnostic::new(format!("{path}.require"), format!("unknown condition \"{r}\"")));
            }
        }
    }
    match oc.m {
        Some(0) => Err(Diagnostic::new(format!("{path}.m"), "must be >= 1")),
        Some(m) => Ok(op.with_m_power(m)),
        None => Ok(op),
    }
}

pub fn build_graph(gc: &GraphCfg, path: &str) -> Result<MonotoneGraph<f64>, Diagnostic> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Diagnostic::new(format!("{path}.{name}"), format!("required for kind \"{}\"", gc.kind)))
    };
    let g = match gc.kind.as_str() {
        "linear" => MonotoneGraph::linear(need(gc.k, "k")?),
        "power" => MonotoneGraph::power(need(gc.p, "p")?),
        "sign" => Ok(MonotoneGraph::sign()),
        "sinh" => MonotoneGraph::sinh(need(gc.c, "c")?),
        "piecewise" => MonotoneGraph::piecewise(
            need(gc.slope, "slope")?,
            gc.breaks.clone().unwrap_or_default(),
            gc.jumps.clone().unwrap_or_default(),
        ),
        other => {
            return Err(Diagnostic::new(
                format!("{path}.kind"),
                format!("unknown graph kind \"{other}\" (linear, power, sign, sinh, piecewise)"),
            ))
        }
    };
    g.map_err(|e| Diagnostic::new(path.to_string(), e.to_string()))
}

pub fn build_noise(nc: &NoiseCfg, op: &DiscreteOperator<f64>, path: &str) -> Result<NoiseModel<f64>, Diagnostic> {
    let grid = *op.grid();
    if nc.modes == 0 {
        return Err(Diagnostic::new(format!("{path}.K"), "must be >= 1"));
    }
    if !(nc.epsilon.is_finite() && nc.epsilon >= 0.0) {
        return Err(Diagnostic::new(format!("{path}.epsilon"), "must be finite and >= 0"));
    }
    let kind = match nc.kind.as_str() {
        "zero" => return Ok(NoiseModel::zero(grid, nc.modes)),
        "additive" => NoiseKind::Additive,
        "multiplicative" => NoiseKind::Multiplicative(match nc.sigma.as_str() {
            "tanh" => Sigma::Tanh { scale: nc.scale },
            "clamp" => Sigma::Clamp { bound: nc.bound },
            "constant" => Sigma::Constant { value: nc.value },
            other => {
                return Err(Diagnostic::new(
                    format!("{path}.sigma"),
                    format!("unknown sigma \"{other}\" (tanh, clamp, constant)"),
                ))
            }
        }),
        other => {
            return Err(Diagnostic::new(
                format!("{path}.kind"),
                format!("unknown noise kind \"{other}\" (additive, multiplicative, zero)"),
            ))
        }
    };
    let e = Expr::parse(&nc.g, &[Var::X, Var::K, Var::L])
        .map_err(|e| Diagnostic::new(format!("{path}.g"), e.to_string()))?;
    let l = grid.length();
    let nm = NoiseModel::from_fn(grid, nc.modes, |k, x| e.eval(Env { x, k: k as f64, l }), kind)
        .map_err(|e| Diagnostic::new(path.to_string(), e.to_string()))?;
    if nc.epsilon > 0.0 {
        nm.smooth(op, nc.epsilon).map_err(|e| Diagnostic::new(format!("{path}.epsilon"), e.to_string()))
    } else {
        Ok(nm)
    }
}

pub fn build_initial(src: &str, grid: &Grid<f64>, path: &str) -> Result<Vec<f64>, Diagnostic> {
    let e = Expr::parse(src, &[Var::X, Var::L]).map_err(|e| Diagnostic::new(path.to_string(), e.to_string()))?;
    let l = grid.length();
    let v: Vec<f64> = grid.nodes().iter().map(|&x| e.eval(Env { x, k: 0.0, l })).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Diagnostic::new(path.to_string(), "expression is not finite at every node"));
    }
    Ok(v)
}

pub fn parse_scheme(s: &str) -> Option<Scheme> {
    match s {
        "S1" | "s1" => Some(Scheme::S1),
        "S2" | "s2" => Some(Scheme::S2),
        _ => None,
    }
}

/// Solver parameters and scheme; `steps` overrides `N` (and `dt`).
pub fn solver_params(sc: &SolverCfg, steps: Option<usize>) -> Result<(SolverParams<f64>, Scheme), Vec<Diagnostic>> {
    let mut d = Vec::new();
    if !(sc.horizon.is_finite() && sc.horizon > 0.0) {
        d.push(Diagnostic::new("solver.T", "must be finite and > 0"));
        return Err(d);
    }
    let n = match (steps, sc.steps, sc.dt) {
        (Some(n), _, _) => n,
        (None, Some(n), None) => n,
        (None, None, Some(dt)) => {
            let n = (sc.horizon / dt).round();
            if !(dt > 0.0) || (n * dt - sc.horizon).abs() > 1e-9 * sc.horizon || n < 1.0 {
                d.push(Diagnostic::new("solver.dt", "dt must be > 0 and divide T (dt*N = T)"));
                return Err(d);
            }
            n as usize
        }
        (None, Some(n), Some(dt)) => {
            if (n as f64 * dt - sc.horizon).abs() > 1e-9 * sc.horizon {
                d.push(Diagnostic::new(
                    "solver.dt",
                    format!("inconsistent with N: dt*N = {} but T = {}", n as f64 * dt, sc.horizon),
                ));
                return Err(d);
            }
            n
        }
        (None, None, None) => {
            d.push(Diagnostic::new("solver.N", "one of N or dt is required"));
            return Err(d);
        }
    };
    if n == 0 {
        d.push(Diagnostic::new("solver.N", "must be >= 1"));
        return Err(d);
    }
    let scheme = match &sc.scheme {
        Some(s) => match parse_scheme(s) {
            Some(s) => s,
            None => {
                d.push(Diagnostic::new("solver.scheme", "must be \"S1\" or \"S2\""));
                return Err(d);
            }
        },
        None if sc.lambda == 0.0 => Scheme::S2,
        None => Scheme::S1,
    };
    let mut p = SolverParams::new(sc.horizon, n, sc.lambda);
    p.theta = sc.theta;
    p.alpha = sc.alpha;
    p.tol_step = sc.tol_step;
    p.max_inner = sc.max_inner;
    p.inner = match sc.inner.as_str() {
        "auto" => InnerSolver::Auto,
        "newton" => InnerSolver::Newton,
        "fixed_point" => InnerSolver::FixedPoint,
        other => {
            d.push(Diagnostic::new(
                "solver.inner",
                format!("unknown inner solver \"{other}\" (auto, newton, fixed_point)"),
            ));
            InnerSolver::Auto
        }
    };
    p.prox = match sc.prox.as_str() {
        "implicit" => ProxMode::Implicit,
        "lie" => ProxMode::LieSplitting,
        other => {
            d.push(Diagnostic::new("solver.prox", format!("unknown prox mode \"{other}\" (implicit, lie)")));
            ProxMode::Implicit
        }
    };
    if let Err(e) = p.validate(scheme) {
        let msg = e.to_string();
        let field = if msg.contains("lambda") && !msg.contains("theta") {
            "solver.lambda"
        } else if msg.contains("theta") || msg.contains("fixed_point") {
            "solver.inner"
        } else {
            "solver"
        };
        d.push(Diagnostic::new(field, msg));
    }
    if d.is_empty() {
        Ok((p, scheme))
    } else {
        Err(d)
    }
}
