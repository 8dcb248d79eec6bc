use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sdl_cli::scenario::{builtin_scenario, Scenario, Stage, BUILTIN_NAMES};
use sdl_cli::{run_scenario, Overrides, Status};
use sdl_core::classes::{admissible_interval, classify, m_d_bound, Which};

#[derive(Parser)]
#[command(name = "sdl", version, about = "Resolvents and semigroups of -Δ + σ·∇ with measure drifts on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the test battery and Monte Carlo, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads within a stage.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage listed in the scenario.
    Run(RunArgs),
    /// Class constants of the drift and its mollifications.
    Classify(RunArgs),
    /// Resolvent decay, Z-norm and generator residual checks.
    Resolvent(RunArgs),
    /// Kernel slices, structure checks and Feller diagnostics.
    Semigroup(RunArgs),
    /// Cauchy residuals along the mollification ladder.
    Converge(RunArgs),
    /// Monte Carlo histogram against the kernel slice.
    Mc(RunArgs),
    /// m_d bound, admissible intervals and hypothesis flags for one δ,
    /// given directly or as the drift's weak-form bound at the first λ.
    Interval {
        #[arg(long, required_unless_present = "config")]
        delta: Option<f64>,
        #[arg(long, required_unless_present = "config")]
        d: Option<usize>,
        #[arg(long, conflicts_with_all = ["delta", "d"])]
        config: Option<PathBuf>,
    },
    /// Prints a builtin scenario as JSON.
    Builtin {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
        name: String,
    },
}

fn interval(delta: f64, d: usize) -> Result<()> {
    anyhow::ensure!(d >= 1, "d must be at least 1");
    let m = m_d_bound(d);
    let j = admissible_interval(delta, d, Which::J, m);
    let i = admissible_interval(delta, d, Which::I, m);
    let out = serde_json::json!({
        "d": d,
        "delta": delta,
        "m_d_bound": m,
        "m_d_delta": m * delta,
        "hyp_md_delta": m * delta < 1.0,
        "J": j,
        "I": i,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn scenario_delta(path: &std::path::Path) -> Result<(f64, usize)> {
    let s = Scenario::load(path)?;
    let g = s.grid.build()?;
    let base = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let mu = s.drift.build(g, g.dim(), base)?;
    let r = classify(&mu, s.lambda[0], s.resolvent.alpha)?;
    Ok((r.delta_weak, g.dim()))
}

fn execute(args: RunArgs, only: Option<Stage>) -> Result<ExitCode> {
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().context("configuring workers")?;
    }
    let o = Overrides { out: args.out, seed: args.seed, only: only.map(|s| vec![s]) };
    let summary = run_scenario(&args.config, &o)?;
    for s in &summary.stages {
        let tag = match s.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::Skipped => "SKIP",
        };
        eprintln!("{tag} {}", s.stage.as_str());
        for c in &s.checks {
            eprintln!("  {} {}: {} (limit {})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.limit);
        }
        for w in &s.warnings {
            eprintln!("  warning: {w}");
        }
        if let Some(e) = &s.error {
            eprintln!("  error: {e}");
        }
    }
    Ok(if summary.hard_error { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => execute(a, None),
        Command::Classify(a) => execute(a, Some(Stage::Classify)),
        Command::Resolvent(a) => execute(a, Some(Stage::Resolvent)),
        Command::Semigroup(a) => execute(a, Some(Stage::Semigroup)),
        Command::Converge(a) => execute(a, Some(Stage::Converge)),
        Command::Mc(a) => execute(a, Some(Stage::Mc)),
        Command::Interval { delta, d, config } => {
            let args = match config {
                Some(path) => scenario_delta(&path),
                None => Ok((delta.expect("clap requires delta"), d.expect("clap requires d"))),
            };
            args.and_then(|(delta, d)| interval(delta, d)).map(|_| ExitCode::SUCCESS)
        }
        Command::Builtin { name } => builtin_scenario(&name).map(|s| {
            println!("{}", s.to_json());
            ExitCode::SUCCESS
        }),
    };
    match res {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
