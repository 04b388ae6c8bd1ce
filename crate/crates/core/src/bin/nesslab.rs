use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nesslab::runner::{
    run_experiment, run_sweep, thread_limit, ExitStatus, ExperimentConfig, SweepConfig, Task,
};

const DEFAULT_OUT: &str = "nesslab-out";

#[derive(Parser)]
#[command(name = "nesslab", version, about = "Steady states of driven constrained spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Krylov sectors and their effective-Hamiltonian values.
    Sectors(Io),
    /// Steady state and its diagnostics.
    Steady(Io),
    /// Fit of log sector weights against the effective Hamiltonian.
    GibbsFit(Io),
    /// Quantum detailed balance check per jump operator.
    Qdbc(Io),
    /// Sector transition graph in DOT format.
    Wdag(Io),
    /// Full counting statistics of the magnetization.
    Fcs(Io),
    /// Operator-space entanglement entropy.
    Osee(Io),
    /// Every task listed in the config.
    All(Io),
    /// Runs a config template over a parameter grid.
    Sweep(Io),
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn run_single(io: &Io, task: Option<Task>) -> ExitCode {
    let mut cfg = match ExperimentConfig::from_path(&io.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(ExitStatus::InvalidConfig.code());
        }
    };
    if let Some(task) = task {
        cfg.tasks = vec![task];
    }
    let out = io
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = run_experiment(&cfg, &out);
    for t in &report.tasks {
        let state = if t.ok { "ok" } else { "failed" };
        println!("{:<10} {state:<7} {:>9.3}s  {}", t.task, t.seconds, t.files.join(" "));
    }
    for issue in &report.issues {
        eprintln!("{} [{:?}]: {}", issue.task, issue.status, issue.message);
    }
    println!("wrote {}", out.join("manifest.json").display());
    exit(report.exit_code())
}

fn run_sweep_cmd(io: &Io) -> ExitCode {
    let sweep = match SweepConfig::from_path(&io.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(ExitStatus::InvalidConfig.code());
        }
    };
    let out = io.out.clone().unwrap_or_else(|| Path::new(DEFAULT_OUT).join("sweep"));
    match run_sweep(&sweep, &out) {
        Ok(report) => {
            for row in &report.rows {
                println!(
                    "point {:03} exit {} {}",
                    row.point,
                    row.status.code(),
                    serde_json::to_string(&row.overrides).unwrap_or_default()
                );
            }
            println!("wrote {}", out.join("summary.csv").display());
            exit(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(ExitStatus::NumericalFailure.code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_limit() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match &cli.command {
        Command::Sectors(io) => run_single(io, Some(Task::Sectors)),
        Command::Steady(io) => run_single(io, Some(Task::Steady)),
        Command::GibbsFit(io) => run_single(io, Some(Task::GibbsFit)),
        Command::Qdbc(io) => run_single(io, Some(Task::Qdbc)),
        Command::Wdag(io) => run_single(io, Some(Task::Wdag)),
        Command::Fcs(io) => run_single(io, Some(Task::Fcs)),
        Command::Osee(io) => run_single(io, Some(Task::Osee)),
        Command::All(io) => run_single(io, None),
        Command::Sweep(io) => run_sweep_cmd(io),
    }
}
