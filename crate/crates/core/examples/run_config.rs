//! Runs one JSON experiment config, as the `nesslab all` subcommand does.
//!
//! `cargo run --example run_config -- configs/fredkin_n4.json out/fredkin4`

use std::path::PathBuf;

use nesslab::runner::{run_experiment, ExperimentConfig};

fn main() -> nesslab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/fredkin_n4.json".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "run-out".into()));
    let cfg = ExperimentConfig::from_path(&config)?;
    let report = run_experiment(&cfg, &out);
    for t in &report.tasks {
        println!("{:<10} ok={} files={:?}", t.task, t.ok, t.files);
    }
    for i in &report.issues {
        println!("issue [{}] {}", i.task, i.message);
    }
    println!("exit code {}", report.exit_code());
    Ok(())
}
