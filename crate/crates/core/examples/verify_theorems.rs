//! Runs one Monte Carlo experiment from its preset, optionally at a smaller
//! replication count, prints the report and writes `report.json` and
//! `observables.csv` when given a directory.
//!
//! cargo run --release --example verify_theorems -- <experiment_id> [n] [out_dir]

use std::path::PathBuf;

use levy_env::config::RunConfig;
use levy_env::verify::{run_experiment, EXPERIMENT_IDS};

fn main() -> levy_env::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(id) = args.first() else {
        eprintln!(
            "usage: verify_theorems <experiment_id> [n] [out_dir]\nexperiments: {}",
            EXPERIMENT_IDS.join(", ")
        );
        std::process::exit(2);
    };
    let mut cfg = RunConfig::preset(id);
    if let Some(n) = args.get(1) {
        cfg.experiment.n_replications = n.parse().expect("n");
    }
    let outcome = run_experiment(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report)?);
    if let Some(dir) = args.get(2).map(PathBuf::from) {
        outcome.write(&dir)?;
    }
    Ok(())
}
