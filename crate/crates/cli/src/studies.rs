//! The study catalogue: each study turns a validated configuration into CSV
//! tables and a list of gated checks.

use monodrift_core::spatial_operator::{audit_assumption_a, AuditReport};
use monodrift_core::spde_solver::{picard_iterate, solve_ensemble, PicardParams};
use monodrift_core::verification::{
    continuous_dependence_check, contraction_rate_fit, defect_order_fit, epsilon_cauchy_check,
    expectation_energy_check, expectation_energy_sweep, graph_kernel_audit, jensen_audit, jstar_integrability_check,
    jstar_sweep, lambda_convergence_study, pathwise_energy_check, uniformity, uniqueness_mollifier_check, RunSpec,
    Uniformity,
};
use monodrift_core::{
    DiscreteOperator, EstimateReport, Extended, Grid, InitialData, MonotoneGraph, NoiseModel, Scheme, SolverParams,
    Stepper, Trajectory,
};

use crate::config::{self, Config, Diagnostic, GraphCfg, NoiseCfg};
use crate::output::{num, Table};

/// Study names in catalogue order; `full-suite` runs them in this order.
pub const CATALOG: [&str; 7] =
    ["check-graph", "audit-operator", "solve", "lambda-study", "epsilon-study", "dependence-study", "picard-study"];

/// What each study exercises, printed in the run log.
pub fn statement(study: &str) -> &'static str {
    match study {
        "check-graph" => "resolvent, Yosida, Moreau and Fenchel-Young identities of the monotone graph",
        "audit-operator" => {
            "coercivity, L1-accretivity, sub-Markov and ultracontractivity conditions on A; Jensen for its resolvent"
        }
        "solve" => "pathwise and in-expectation energy bounds; integrability of the conjugate term",
        "lambda-study" => "Cauchy property of the regularized solutions as lambda -> 0; uniform energy bounds",
        "epsilon-study" => "Cauchy property of the solutions under smoothing of the noise",
        "dependence-study" => "Lipschitz dependence on the initial datum; uniqueness through mollification",
        "picard-study" => "contraction of the Picard map for state-dependent noise in the weighted norm",
        _ => "",
    }
}

#[derive(Debug)]
pub enum StudyError {
    Config(Vec<Diagnostic>),
    Runtime(String),
}

impl From<monodrift_core::Error> for StudyError {
    fn from(e: monodrift_core::Error) -> Self {
        StudyError::Runtime(e.to_string())
    }
}

impl From<Diagnostic> for StudyError {
    fn from(d: Diagnostic) -> Self {
        StudyError::Config(vec![d])
    }
}

type Res<T> = std::result::Result<T, StudyError>;

/// One line of a reports CSV. Rows with `gate = false` are diagnostics and do
/// not affect the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub margin: f64,
    pub pass: bool,
    pub sweep_param: String,
    pub gate: bool,
    pub detail: String,
}

impl ReportRow {
    pub fn from_report(r: &EstimateReport) -> Self {
        Self {
            check: r.name.clone(),
            lhs: r.lhs,
            rhs: r.rhs,
            constant: r.constant,
            margin: r.margin,
            pass: r.pass,
            sweep_param: r.sweep_param.clone(),
            gate: true,
            detail: if r.detail.is_empty() {
                format!("{} ({})", r.provenance, r.tag.as_str())
            } else {
                format!("{} ({}); {}", r.provenance, r.tag.as_str(), r.detail)
            },
        }
    }

    /// `lhs <= rhs` with margin `rhs - lhs`.
    pub fn bound(check: &str, lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        let margin = rhs - lhs;
        Self {
            check: check.into(),
            lhs,
            rhs,
            constant: f64::NAN,
            margin,
            pass: margin.is_finite() && margin >= 0.0,
            sweep_param: String::new(),
            gate: true,
            detail: detail.into(),
        }
    }

    /// A boolean property recorded as `lhs = 1` when it holds.
    pub fn flag(check: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            lhs: if ok { 1.0 } else { 0.0 },
            rhs: 1.0,
            constant: f64::NAN,
            margin: if ok { 0.0 } else { -1.0 },
            pass: ok,
            sweep_param: String::new(),
            gate: true,
            detail: detail.into(),
        }
    }

    pub fn uniformity(u: &Uniformity, limit: f64) -> Self {
        let mut r = Self::bound(
            &format!("{}_uniformity", u.name),
            u.variation,
            limit,
            format!(
                "max/min of fitted constants over {}",
                u.sweep.iter().map(|(p, c)| format!("{p:e}:{c:.4e}")).collect::<Vec<_>>().join(" ")
            ),
        );
        r.pass = u.pass && r.pass;
        r
    }

    pub fn sweep(mut self, s: impl Into<String>) -> Self {
        self.sweep_param = s.into();
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.gate = false;
        self
    }

    pub fn gated(mut self, gate: bool) -> Self {
        self.gate = gate;
        self
    }
}

pub const REPORT_HEADER: [&str; 11] =
    ["check", "lhs", "rhs", "constant", "margin", "pass", "sweep_param", "seed", "finite", "gate", "detail"];

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub name: &'static str,
    pub tables: Vec<Table>,
    pub reports: Vec<ReportRow>,
    pub seed: u64,
}

impl StudyOutput {
    fn new(name: &'static str, seed: u64) -> Self {
        Self { name, tables: Vec::new(), reports: Vec::new(), seed }
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass || !r.gate)
    }

    /// Data tables followed by `reports.csv`, all under `<study>/`.
    pub fn all_tables(&self) -> Vec<Table> {
        let mut out = self.tables.clone();
        let mut t = Table::new(format!("{}/reports.csv", self.name), &REPORT_HEADER);
        for r in &self.reports {
            let finite = r.lhs.is_finite() && r.rhs.is_finite();
            t.push(vec![
                r.check.clone(),
                num(r.lhs),
                num(r.rhs),
                num(r.constant),
                num(r.margin),
                r.pass.to_string(),
                r.sweep_param.clone(),
                self.seed.to_string(),
                finite.to_string(),
                r.gate.to_string(),
                r.detail.clone(),
            ]);
        }
        out.push(t);
        out
    }
}

/// Validated configuration with the core objects built once.
pub struct Setup {
    pub cfg: Config,
    pub seed: u64,
    pub workers: usize,
    pub grid: Grid<f64>,
    pub op: DiscreteOperator<f64>,
    pub graph: MonotoneGraph<f64>,
    pub noise: NoiseModel<f64>,
    pub x0: Vec<f64>,
    pub params: SolverParams<f64>,
    pub scheme: Scheme,
}

impl Setup {
    /// `seed` and `workers` override the configured values.
    pub fn new(cfg: Config, seed: Option<u64>, workers: Option<usize>) -> std::result::Result<Self, Vec<Diagnostic>> {
        let diags = config::validate(&cfg);
        if !diags.is_empty() {
            return Err(diags);
        }
        let one = |e: Diagnostic| vec![e];
        let grid = config::build_grid(&cfg).map_err(one)?;
        let op = config::build_operator(&cfg.operator, grid, "operator").map_err(one)?;
        let graph = config::build_graph(&cfg.graph, "graph").map_err(one)?;
        let noise = config::build_noise(&cfg.noise, &op, "noise").map_err(one)?;
        let x0 = config::build_initial(&cfg.initial.expr, &grid, "initial.expr").map_err(one)?;
        let (params, scheme) = config::solver_params(&cfg.solver, None)?;
        let workers = workers
            .or(cfg.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        Ok(Self { seed: seed.unwrap_or(cfg.seed), workers, grid, op, graph, noise, x0, params, scheme, cfg })
    }

    fn spec<'a>(
        &'a self,
        graph: &'a MonotoneGraph<f64>,
        noise: &'a NoiseModel<f64>,
        x0: Vec<f64>,
        paths: usize,
    ) -> RunSpec<'a, f64> {
        RunSpec {
            op: &self.op,
            graph,
            noise,
            params: self.params,
            scheme: self.scheme,
            x0: InitialData::Fixed(x0),
            paths,
            seed: self.seed,
            workers: self.workers,
        }
    }

    fn paths(&self, v: Option<usize>) -> usize {
        v.unwrap_or(self.cfg.ensemble.paths)
    }

    fn with_steps(&self, steps: Option<usize>) -> Res<SolverParams<f64>> {
        match steps {
            None => Ok(self.params),
            Some(n) => Ok(config::solver_params(&self.cfg.solver, Some(n)).map_err(StudyError::Config)?.0),
        }
    }
}

pub fn run(study: &str, s: &Setup) -> Res<StudyOutput> {
    match study {
        "check-graph" => check_graph(s),
        "audit-operator" => audit_operator(s),
        "solve" => solve(s),
        "lambda-study" => lambda_study(s),
        "epsilon-study" => epsilon_study(s),
        "dependence-study" => dependence_study(s),
        "picard-study" => picard_study(s),
        other => Err(StudyError::Config(vec![Diagnostic::new("", format!("unknown study \"{other}\""))])),
    }
}

fn failures_row(count: usize, first: Option<String>) -> ReportRow {
    ReportRow::bound("path_failures", count as f64, 0.0, first.unwrap_or_default())
}

pub fn check_graph(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.check_graph;
    let mut out = StudyOutput::new("check-graph", s.seed);
    let graphs = if c.catalog { MonotoneGraph::catalog() } else { vec![s.graph.clone()] };
    let a = graph_kernel_audit(&graphs, c.samples, s.seed, c.gap_tol)?;
    let families = graphs.iter().map(|g| g.family()).collect::<Vec<_>>().join(" ");
    for (name, v) in [
        ("resolvent_contraction", a.resolvent_contraction),
        ("yosida_lipschitz", a.yosida_lipschitz),
        ("yosida_in_beta_of_resolvent", a.membership),
        ("moreau_order", a.moreau_order),
        ("young_gap_sign", a.young_sign),
        ("young_equality_on_graph", a.young_equality),
        ("fenchel_equality_at_resolvent", a.duality),
    ] {
        out.reports.push(
            ReportRow::bound(
                name,
                v as f64,
                0.0,
                format!("violations over {} samples; families {families}", a.samples),
            )
            .sweep(format!("samples={}", a.samples)),
        );
    }
    out.reports.push(ReportRow::bound(
        "fenchel_equality_max_gap",
        a.max_duality_gap,
        c.gap_tol,
        "largest |j(J x) + j*(beta_lambda x) - beta_lambda(x) J x|",
    ));
    if c.dump {
        let mut t = Table::new(
            "check-graph/graph_dump.csv",
            &["family", "lambda", "x", "resolvent", "yosida", "moreau", "young_gap", "young_gap_finite"],
        );
        for g in &graphs {
            for lambda in [1.0, 0.1, 0.01] {
                for i in 0..=60 {
                    let x = -3.0 + 0.1 * i as f64;
                    let e = g.eval(lambda, x)?;
                    let (gap, fin) = match g.young_gap(e.resolvent, e.yosida) {
                        Extended::Finite(v) => (num(v), true),
                        Extended::PosInf => (String::new(), false),
                    };
                    t.push(vec![
                        g.family().into(),
                        num(lambda),
                        num(x),
                        num(e.resolvent),
                        num(e.yosida),
                        num(e.moreau),
                        gap,
                        fin.to_string(),
                    ]);
                }
            }
        }
        out.tables.push(t);
    }
    Ok(out)
}

/// Closed-form Dirichlet eigenvalues `4/h^2 sin^2(k pi h / 2L)`, ascending.
pub fn dirichlet_eigenvalues(grid: &Grid<f64>) -> Vec<f64> {
    let (h, l) = (grid.h(), grid.length());
    (1..=grid.n())
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI * h / (2.0 * l)).sin();
            4.0 / (h * h) * s * s
        })
        .collect()
}

fn audit_table(path: String, a: &AuditReport) -> Table {
    let mut t = Table::new(path, &["condition", "pass", "constant", "detail"]);
    for r in &a.rows {
        t.push(vec![r.condition.into(), r.pass.to_string(), num(r.constant), r.detail.clone()]);
    }
    t
}

pub fn audit_operator(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.audit_operator;
    let mut out = StudyOutput::new("audit-operator", s.seed);
    let mut ops = vec![(s.cfg.operator.clone(), s.op.clone())];
    for (i, oc) in c.operators.iter().enumerate() {
        ops.push((oc.clone(), config::build_operator(oc, s.grid, &format!("audit_operator.operators[{i}]"))?));
    }
    let graphs = MonotoneGraph::catalog();
    for (i, (oc, op)) in ops.iter().enumerate() {
        let label = format!("{i}_{}", op.kind().name());
        let a = audit_assumption_a(op, c.probes)?;
        out.tables.push(audit_table(format!("audit-operator/audit_{label}.csv"), &a));
        let required: Vec<String> =
            oc.require.clone().unwrap_or_else(|| a.rows.iter().map(|r| r.condition.to_string()).collect());
        for r in &a.rows {
            let gate = required.iter().any(|q| q == r.condition);
            out.reports.push(
                ReportRow {
                    constant: r.constant,
                    ..ReportRow::flag(&format!("condition_{}", r.condition), r.pass, r.detail.clone())
                }
                .sweep(format!("operator={label}"))
                .gated(gate),
            );
        }
        if let Some(alpha) = oc.alpha.filter(|_| oc.kind == "fractional") {
            let want: Vec<f64> = dirichlet_eigenvalues(&s.grid).iter().map(|l| l.powf(alpha)).collect();
            let got = op.principal_eigenvalues();
            let err = want.iter().zip(got).map(|(w, g)| (w - g).abs() / w.abs().max(1.0)).fold(0.0, f64::max);
            let mut t = Table::new(
                format!("audit-operator/spectrum_{label}.csv"),
                &["k", "eigenvalue", "closed_form", "rel_error"],
            );
            for (k, (w, g)) in want.iter().zip(got).enumerate() {
                t.push(vec![(k + 1).to_string(), num(*g), num(*w), num((w - g).abs() / w.abs().max(1.0))]);
            }
            out.tables.push(t);
            out.reports.push(
                ReportRow::bound(
                    "fractional_spectrum",
                    err,
                    1e-10,
                    format!("eigenvalues against closed-form Dirichlet values to the power {alpha}"),
                )
                .sweep(format!("operator={label}")),
            );
        }
        // Jensen needs the sub-Markov property; without it the row is a diagnostic.
        let sub_markov = a.passes("iii");
        let j = jensen_audit(op, &graphs, &c.jensen_deltas, c.jensen_samples, s.seed, c.jensen_tol)?;
        out.reports.push(
            ReportRow::bound(
                "jensen_resolvent",
                j.violations as f64,
                0.0,
                format!("violations over {} (graph, delta, f) samples, max excess {:.3e}", j.samples, j.max_excess),
            )
            .sweep(format!("operator={label}"))
            .gated(sub_markov),
        );
    }
    Ok(out)
}

fn summary_table(path: &str, s: &Setup, ens: &monodrift_core::Ensemble<f64>) -> Table {
    let mut t = Table::new(
        path,
        &["norm_name", "estimate", "std_error", "M", "dt", "lambda", "epsilon", "alpha", "scheme", "seed", "finite"],
    );
    for e in ens.estimates() {
        let (v, fin) = match e.estimate {
            Extended::Finite(v) => (num(v), true),
            Extended::PosInf => (String::new(), false),
        };
        t.push(vec![
            e.name.into(),
            v,
            num(e.std_error),
            e.m.to_string(),
            num(ens.dt),
            num(ens.lambda),
            num(s.noise.epsilon()),
            num(s.params.alpha),
            ens.scheme.tag().into(),
            ens.seed.to_string(),
            fin.to_string(),
        ]);
    }
    t
}

fn trajectory_table(path: &str, trs: &[Trajectory<f64>]) -> Table {
    let mut t = Table::new(path, &["path", "n", "t", "node", "X", "xi"]);
    for tr in trs {
        for (n, x) in tr.states.iter().enumerate() {
            for (i, v) in x.iter().enumerate() {
                let xi = tr.selections.get(n).map_or(String::new(), |s| num(s[i]));
                t.push(vec![tr.path.to_string(), n.to_string(), num(tr.times[n]), i.to_string(), num(*v), xi]);
            }
        }
    }
    t
}

pub fn solve(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.solve;
    let m = s.paths(c.paths);
    let mut out = StudyOutput::new("solve", s.seed);
    let stepper = Stepper::new(s.scheme, &s.op, &s.graph, &s.noise, s.params)?;
    let ens = solve_ensemble(&stepper, &InitialData::Fixed(s.x0.clone()), m, s.seed, s.workers, true);
    out.tables.push(summary_table("solve/ensemble_summary.csv", s, &ens));
    if c.dump_paths > 0 {
        let keep: Vec<Trajectory<f64>> =
            ens.retained.iter().filter(|t| (t.path as usize) < c.dump_paths).cloned().collect();
        out.tables.push(trajectory_table("solve/trajectories.csv", &keep));
    }
    out.reports.push(failures_row(ens.failures.len(), ens.failures.first().map(|f| f.message.clone())));
    if ens.m() == 0 {
        return Ok(out);
    }
    out.reports.push(ReportRow::from_report(&expectation_energy_check(&ens, None)));
    out.reports.push(ReportRow::from_report(&jstar_integrability_check(&ens, None)));
    let coercive = s.op.coercivity().c > 0.0;
    if s.scheme == Scheme::S1 && coercive {
        for tr in &ens.retained {
            let pe = pathwise_energy_check(tr, &s.op, &s.graph)?;
            out.reports.push(ReportRow::from_report(&pe.report).sweep(format!("path={}", tr.path)));
        }
        // Chain defect of path 0 under time-step refinement.
        let mut dts = Vec::new();
        let mut defects = Vec::new();
        for r in 0..3 {
            let mut p = s.params;
            p.steps = s.params.steps << r;
            p.dt = s.params.horizon() / p.steps as f64;
            let st = Stepper::new(s.scheme, &s.op, &s.graph, &s.noise, p)?;
            let tr = st.solve_path(&s.x0, s.seed, 0)?;
            dts.push(p.dt);
            defects.push(pathwise_energy_check(&tr, &s.op, &s.graph)?.defect);
        }
        let fit = defect_order_fit(&dts, &defects);
        let defects_s = defects.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(" ");
        let row = match (fit.exact, fit.order) {
            (true, _) => {
                ReportRow::flag("energy_defect_order", true, format!("exact: defect <= 0 at every dt ({defects_s})"))
            }
            (false, Some(o)) => ReportRow::bound(
                "energy_defect_order",
                0.5,
                o,
                format!("fitted order {o:.3} of positive defects {defects_s}"),
            ),
            (false, None) => {
                ReportRow::flag("energy_defect_order", false, format!("too few positive defects to fit ({defects_s})"))
            }
        };
        out.reports.push(row.sweep("dt refinement x1,x2,x4"));
    } else {
        out.reports.push(
            ReportRow::flag("pathwise_energy", true, "skipped: needs scheme S1 and a coercive operator (C > 0)")
                .diagnostic(),
        );
    }
    Ok(out)
}

fn case_label(g: &GraphCfg, i: usize, all: &[GraphCfg]) -> String {
    if all.iter().filter(|o| o.kind == g.kind).count() > 1 {
        format!("{}_{i}", g.kind)
    } else {
        g.kind.clone()
    }
}

pub fn lambda_study(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.lambda_study;
    let mut out = StudyOutput::new("lambda-study", s.seed);
    let cases: Vec<(GraphCfg, String, bool)> = if c.cases.is_empty() {
        vec![(s.cfg.graph.clone(), s.cfg.initial.expr.clone(), true)]
    } else {
        c.cases
            .iter()
            .map(|k| (k.graph.clone(), k.initial.clone().unwrap_or_else(|| s.cfg.initial.expr.clone()), k.uniformity))
            .collect()
    };
    let graph_cfgs: Vec<GraphCfg> = cases.iter().map(|c| c.0.clone()).collect();
    let params = s.with_steps(c.steps)?;
    for (i, (gc, init, gate_uniform)) in cases.iter().enumerate() {
        let label = case_label(gc, i, &graph_cfgs);
        let graph = config::build_graph(gc, &format!("lambda_study.cases[{i}].graph"))?;
        let x0 = config::build_initial(init, &s.grid, &format!("lambda_study.cases[{i}].initial"))?;
        let mut spec = s.spec(&graph, &s.noise, x0, s.paths(c.paths));
        spec.params = params;
        spec.scheme = Scheme::S1;
        let st = lambda_convergence_study(&spec, &c.lambdas)?;
        let mut t = Table::new(format!("lambda-study/{label}_sweep.csv"), &["lambda", "cauchy_l2h", "prox_gap_l2h"]);
        for r in &st.rows {
            t.push(vec![num(r.lambda), num(r.cauchy), num(r.prox_gap)]);
        }
        out.tables.push(t);
        let sweep = format!("case={label}");
        out.reports
            .push(failures_row(st.failures.len(), st.failures.first().map(|f| f.message.clone())).sweep(sweep.clone()));
        let (first, last) = (st.rows.first().map_or(0.0, |r| r.cauchy), st.rows.last().map_or(0.0, |r| r.cauchy));
        out.reports.push(
            ReportRow {
                lhs: last,
                rhs: first,
                ..ReportRow::flag(
                    "lambda_cauchy_strictly_decreasing",
                    st.strictly_decreasing,
                    format!("|X_l - X_l/2| in L2(0,T;H); fitted rate {:.3}", st.rate),
                )
            }
            .sweep(sweep.clone()),
        );
        let gaps_dec = st.rows.windows(2).all(|w| w[1].prox_gap < w[0].prox_gap);
        out.reports.push(
            ReportRow::flag("prox_gap_decreasing", gaps_dec, "|X_l - X_prox| decreases along the sweep")
                .sweep(sweep.clone()),
        );
        let smallest = st.rows.last().map_or(f64::NAN, |r| r.prox_gap);
        out.reports.push(
            ReportRow::bound(
                "prox_gap_at_smallest_lambda",
                smallest,
                st.prox_threshold,
                "against 10 x solver tolerance; the Yosida error is O(lambda), so this is informational",
            )
            .sweep(sweep.clone())
            .diagnostic(),
        );
        let keep: Vec<_> = if c.uniformity_lambdas.is_empty() {
            st.ensembles.clone()
        } else {
            st.ensembles.iter().filter(|e| c.uniformity_lambdas.contains(&e.lambda)).cloned().collect()
        };
        let (er, eu) = expectation_energy_sweep(&keep, c.uniformity_limit);
        let (jr, ju) = jstar_sweep(&keep, c.uniformity_limit);
        for r in er.iter().chain(&jr) {
            out.reports.push(ReportRow::from_report(r).sweep(format!("{sweep},{}", r.sweep_param)));
        }
        out.reports.push(ReportRow::uniformity(&eu, c.uniformity_limit).sweep(sweep.clone()).gated(*gate_uniform));
        out.reports.push(ReportRow::uniformity(&ju, c.uniformity_limit).sweep(sweep.clone()).gated(*gate_uniform));
    }
    Ok(out)
}

fn unsmoothed(nc: &NoiseCfg) -> NoiseCfg {
    NoiseCfg { epsilon: 0.0, ..nc.clone() }
}

pub fn epsilon_study(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.epsilon_study;
    let mut out = StudyOutput::new("epsilon-study", s.seed);
    let base = config::build_noise(&unsmoothed(&s.cfg.noise), &s.op, "noise")?;
    let mut spec = s.spec(&s.graph, &base, s.x0.clone(), s.paths(c.paths));
    if let Some(sc) = &c.scheme {
        spec.scheme = config::parse_scheme(sc)
            .ok_or_else(|| Diagnostic::new("epsilon_study.scheme", "must be \"S1\" or \"S2\""))?;
    }
    if let Some(l) = c.lambda {
        spec.params.lambda = l;
    }
    spec.params.validate(spec.scheme).map_err(|e| Diagnostic::new("epsilon_study", e.to_string()))?;
    let cs = epsilon_cauchy_check(&spec, &c.epsilons)?;
    let mut t =
        Table::new("epsilon-study/sweep.csv", &["epsilon", "half_epsilon", "lhs", "rhs", "ratio", "monotone_min"]);
    for r in &cs.rows {
        t.push(vec![num(r.epsilon), num(r.delta), num(r.lhs), num(r.rhs), num(r.ratio), num(r.monotone_min)]);
    }
    out.tables.push(t);
    out.reports.push(failures_row(cs.failures.len(), cs.failures.first().map(|f| f.message.clone())));
    out.reports.extend(cs.reports.iter().map(ReportRow::from_report));
    let stab = uniformity(&cs.stability.name, cs.stability.sweep.clone(), c.stability_limit);
    out.reports.push(ReportRow::uniformity(&stab, c.stability_limit).sweep(format!("scheme={}", spec.scheme.tag())));
    Ok(out)
}

pub fn dependence_study(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.dependence_study;
    let mut out = StudyOutput::new("dependence-study", s.seed);
    let dir = config::build_initial(&c.direction, &s.grid, "dependence_study.direction")?;
    let spec = s.spec(&s.graph, &s.noise, s.x0.clone(), s.paths(c.paths));
    let ds = continuous_dependence_check(&spec, &dir, &c.deltas, &c.alphas)?;
    let mut t = Table::new("dependence-study/sweep.csv", &["alpha", "delta", "data_distance", "f_alpha"]);
    for r in &ds.rows {
        t.push(vec![num(r.alpha), num(r.delta), num(r.data), num(r.f_alpha)]);
    }
    out.tables.push(t);
    let mut f = Table::new("dependence-study/fits.csv", &["alpha", "slope", "intercept", "r2"]);
    for &(a, b, c0, r2) in &ds.fits {
        f.push(vec![num(a), num(b), num(c0), num(r2)]);
    }
    out.tables.push(f);
    out.reports.push(failures_row(ds.failures.len(), ds.failures.first().map(|f| f.message.clone())));
    out.reports.extend(ds.reports.iter().map(ReportRow::from_report));
    for &(a, _, _, r2) in &ds.fits {
        out.reports.push(
            ReportRow::bound("dependence_linear_fit_r2", c.r2_min, r2, "R^2 of F_alpha against the data distance")
                .sweep(format!("alpha={a}")),
        );
    }
    out.reports.push(ReportRow::flag(
        "identical_data_bit_identical",
        ds.bit_identical,
        "re-integrating identical data on the same draws",
    ));
    // Uniqueness replay on path 0: with additive noise the discrete flow is an
    // H-contraction, so sup|Y| is bounded by the initial distance.
    let stepper = Stepper::new(s.scheme, &s.op, &s.graph, &s.noise, s.params)?;
    let base = stepper.solve_path(&s.x0, s.seed, 0)?;
    let dnorm = s.op.norm_h(&dir);
    for &d in &c.deltas {
        let x1: Vec<f64> = s.x0.iter().zip(&dir).map(|(a, v)| a + d * v).collect();
        let tr = stepper.solve_path(&x1, s.seed, 0)?;
        let envelope = d.abs() * dnorm * (1.0 + 1e-9);
        let gate = s.noise.is_state_independent();
        let mc = uniqueness_mollifier_check(&tr, &base, &s.op, &s.graph, 0.01, envelope)?;
        out.reports.push(ReportRow::from_report(&mc.report).sweep(format!("delta={d:e}")).gated(gate));
    }
    Ok(out)
}

pub fn picard_study(s: &Setup) -> Res<StudyOutput> {
    let c = &s.cfg.picard_study;
    let mut out = StudyOutput::new("picard-study", s.seed);
    let noise = match &c.noise {
        Some(nc) => config::build_noise(nc, &s.op, "picard_study.noise")?,
        None => s.noise.clone(),
    };
    let params = s.with_steps(c.steps)?;
    let stepper = Stepper::new(s.scheme, &s.op, &s.graph, &noise, params)?;
    let pp = PicardParams {
        alphas: c.alphas.clone(),
        iters: c.iters,
        paths: s.paths(c.paths),
        seed: s.seed,
        workers: s.workers,
    };
    let res = picard_iterate(&stepper, &InitialData::Fixed(s.x0.clone()), &pp)?;
    let mut t = Table::new("picard-study/distances.csv", &["alpha", "k", "distance"]);
    for r in &res.rows {
        t.push(vec![num(r.alpha), r.k.to_string(), num(r.distance)]);
    }
    out.tables.push(t);
    let fit = contraction_rate_fit(&res, c.floor);
    let mut f = Table::new("picard-study/factors.csv", &["alpha", "factor", "degenerate"]);
    for &(a, q, d) in &fit.rows {
        f.push(vec![num(a), num(q), d.to_string()]);
    }
    out.tables.push(f);
    out.reports.push(failures_row(res.failures.len(), res.failures.first().map(|f| f.1.clone())));
    let lip = noise.lipschitz();
    out.reports.push(ReportRow::flag(
        "picard_factors_decreasing",
        fit.monotone && !fit.degenerate,
        format!("state-dependent noise, L_B = {lip:.4e}"),
    ));
    let e = fit.exponent.unwrap_or(f64::NAN);
    out.reports.push(ReportRow {
        lhs: e,
        rhs: c.exponent_max,
        constant: c.exponent_min,
        margin: (c.exponent_max - e).min(e - c.exponent_min),
        ..ReportRow::flag(
            "picard_alpha_exponent",
            (c.exponent_min..=c.exponent_max).contains(&e),
            format!("log-log slope of the factor against alpha, required in [{}, {}]", c.exponent_min, c.exponent_max),
        )
    });
    let best = fit.rows.iter().filter(|r| !r.2).map(|r| r.1).fold(f64::INFINITY, f64::min);
    let detail = match fit.threshold_alpha {
        Some(a) => format!("factor < 1 from alpha = {a}"),
        None => "no alpha gives a contraction".into(),
    };
    let mut row = ReportRow::bound("picard_contraction", best, 1.0, detail);
    row.constant = fit.threshold_alpha.unwrap_or(f64::NAN);
    row.pass = best < 1.0;
    out.reports.push(row);
    Ok(out)
}
