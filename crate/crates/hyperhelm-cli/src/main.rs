//! Command-line driver: each subcommand runs one experiment kind against a
//! plain-text config, writes CSV artifacts plus report.json into --out and
//! prints one line per check.  Exit codes: 0 all checks pass, 1 at least
//! one check failed, 2 configuration or runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperhelm::config::{build_experiment, load_config, ExperimentKind};
use hyperhelm::harness::{emit_plot_data, run, RunOptions};

#[derive(Parser)]
#[command(name = "hyperhelm", version, about = "Radial Helmholtz laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial initial value problem
    Solve(RunArgs),
    /// Energy functionals and growth/two-sided bounds
    Energy(RunArgs),
    /// Zero detection and spacing diagnostics
    Zeros(RunArgs),
    /// Green kernel tables and asymptotic certification
    Green(RunArgs),
    /// Limiting-absorption resolvent on a bump source
    Resolvent(RunArgs),
    /// Small nonlinear solution by contraction
    Smallsol(RunArgs),
    /// Dual variational critical point search
    Dualvar(RunArgs),
    /// Ball-norm growth scan across Lebesgue exponents
    Strichartz(RunArgs),
    /// Amplitude/exponent sweep of the two-sided bounds
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Plain-text key=value experiment description
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts and report.json
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep points
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// After the run, extract these columns (e.g. "r,u") from the first
    /// artifact that has them into a plot-ready CSV
    #[arg(long)]
    emit: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Solve(a) => (ExperimentKind::Solve, a),
        Command::Energy(a) => (ExperimentKind::Energy, a),
        Command::Zeros(a) => (ExperimentKind::Zeros, a),
        Command::Green(a) => (ExperimentKind::Green, a),
        Command::Resolvent(a) => (ExperimentKind::Resolvent, a),
        Command::Smallsol(a) => (ExperimentKind::SmallSol, a),
        Command::Dualvar(a) => (ExperimentKind::DualVar, a),
        Command::Strichartz(a) => (ExperimentKind::Strichartz, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
    };
    match execute(kind, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> hyperhelm::Result<ExitCode> {
    let (raw, base_dir) = load_config(&args.config)?;
    let cfg = build_experiment(&raw, &base_dir, Some(kind))?;
    let opts = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        jobs: args.jobs,
    };
    let report = run(&cfg, &opts)?;
    for check in &report.checks {
        println!(
            "{}  {}  value={:.6e}  tol={:.3e}  at={:.4}",
            if check.pass { "PASS" } else { "FAIL" },
            check.check,
            check.worst_value,
            check.tolerance,
            check.worst_location
        );
    }
    println!(
        "report: {} ({} artifacts, {:.2}s)",
        args.out.join("report.json").display(),
        report.artifacts.len(),
        report.wall_clock_s
    );

    if let Some(series) = &args.emit {
        let cols: Vec<&str> = series.split(',').map(str::trim).collect();
        let mut emitted = false;
        for artifact in &report.artifacts {
            if let Ok(path) = emit_plot_data(&report, &args.out, artifact, &cols) {
                println!("plot data: {}", path.display());
                emitted = true;
                break;
            }
        }
        if !emitted {
            return Err(hyperhelm::Error::MissingArtifact(format!(
                "no artifact provides columns {cols:?}"
            )));
        }
    }

    Ok(ExitCode::from(report.exit_code() as u8))
}
