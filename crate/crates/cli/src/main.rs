use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use monodrift::config::{self, Diagnostic};
use monodrift::output::{config_hash, write_tables, Table};
use monodrift::studies::{self, ReportRow, Setup, StudyError, StudyOutput, CATALOG};

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "monodrift",
    version,
    about = "Numerical studies for stochastic evolution equations with monotone drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $MONODRIFT_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized audit of the graph kernel identities.
    CheckGraph(Common),
    /// Structural conditions on the operator and Jensen for its resolvent.
    AuditOperator(Common),
    /// Ensemble solve with energy checks.
    Solve(Common),
    /// Cauchy sweep in the regularization parameter.
    LambdaStudy(Common),
    /// Cauchy sweep in the noise smoothing parameter.
    EpsilonStudy(Common),
    /// Continuous dependence on the initial datum.
    DependenceStudy(Common),
    /// Picard contraction in the weighted norm.
    PicardStudy(Common),
    /// Every study in catalogue order.
    FullSuite(Common),
    /// Lists every constraint violation of a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_diagnostics(d: &[Diagnostic]) {
    for x in d {
        eprintln!("config error: {x}");
    }
}

fn summary_line(study: &str, r: &ReportRow) -> String {
    let status = match (r.pass, r.gate) {
        (true, _) => "pass",
        (false, true) => "FAIL",
        (false, false) => "info",
    };
    let fmt = |x: f64| {
        if x.is_finite() {
            format!("{x:.4e}")
        } else if x.is_nan() {
            "-".into()
        } else {
            "inf".into()
        }
    };
    format!(
        "{:<16} {:<36} {:>12} {:>12} {:>12}  {:<4}  {}",
        study,
        r.check,
        fmt(r.lhs),
        fmt(r.rhs),
        fmt(r.margin),
        status,
        r.sweep_param
    )
}

fn run_studies(names: &[&str], common: &Common) -> ExitCode {
    let (cfg, bytes) = match config::load(&common.config) {
        Ok(v) => v,
        Err(d) => {
            print_diagnostics(&d);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let setup = match Setup::new(cfg, common.seed, common.workers) {
        Ok(s) => s,
        Err(d) => {
            print_diagnostics(&d);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out_dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os("MONODRIFT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let hash = config_hash(&bytes, setup.seed);
    println!("config {} sha256={hash} seed={} workers={}", common.config.display(), setup.seed, setup.workers);
    let mut outputs: Vec<StudyOutput> = Vec::new();
    for &name in names {
        println!("study {name}: {}", studies::statement(name));
        let t0 = std::time::Instant::now();
        match studies::run(name, &setup) {
            Ok(o) => {
                let tables = o.all_tables();
                if let Err(e) = write_tables(&out_dir, &hash, &tables) {
                    eprintln!("runtime error: writing {}: {e}", out_dir.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
                println!("  {} checks, {} tables, {:.1}s", o.reports.len(), tables.len(), t0.elapsed().as_secs_f64());
                outputs.push(o);
            }
            Err(StudyError::Config(d)) => {
                print_diagnostics(&d);
                return ExitCode::from(EXIT_CONFIG);
            }
            Err(StudyError::Runtime(m)) => {
                eprintln!("runtime error in {name}: {m}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    }
    if names.len() > 1 {
        let mut t = Table::new("summary.csv", &["study", "check", "sweep_param", "pass", "gate"]);
        for o in &outputs {
            for r in &o.reports {
                t.push(vec![
                    o.name.into(),
                    r.check.clone(),
                    r.sweep_param.clone(),
                    r.pass.to_string(),
                    r.gate.to_string(),
                ]);
            }
        }
        if let Err(e) = write_tables(&out_dir, &hash, &[t]) {
            eprintln!("runtime error: writing {}: {e}", out_dir.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    println!();
    println!("{:<16} {:<36} {:>12} {:>12} {:>12}  {:<4}  sweep", "study", "check", "lhs", "rhs", "margin", "");
    let mut failed = 0;
    for o in &outputs {
        for r in &o.reports {
            println!("{}", summary_line(o.name, r));
            if r.gate && !r.pass {
                failed += 1;
            }
        }
    }
    println!();
    if failed > 0 {
        println!("{failed} gated check(s) failed; outputs in {}", out_dir.display());
        ExitCode::from(EXIT_CHECK)
    } else {
        println!("all gated checks passed; outputs in {}", out_dir.display());
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::CheckGraph(c) => run_studies(&["check-graph"], &c),
        Command::AuditOperator(c) => run_studies(&["audit-operator"], &c),
        Command::Solve(c) => run_studies(&["solve"], &c),
        Command::LambdaStudy(c) => run_studies(&["lambda-study"], &c),
        Command::EpsilonStudy(c) => run_studies(&["epsilon-study"], &c),
        Command::DependenceStudy(c) => run_studies(&["dependence-study"], &c),
        Command::PicardStudy(c) => run_studies(&["picard-study"], &c),
        Command::FullSuite(c) => run_studies(&CATALOG, &c),
        Command::Validate { config } => match config::load(&config) {
            Ok(_) => {
                println!("{}: valid", config.display());
                ExitCode::SUCCESS
            }
            Err(d) => {
                for x in &d {
                    println!("{x}");
                }
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
