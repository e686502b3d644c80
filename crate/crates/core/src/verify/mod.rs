//! Monte Carlo experiments and their reports.
//!
//! Every experiment takes a [`RunConfig`] and returns an [`Outcome`]: a
//! [`McReport`] with named statistics and pass/fail checks, plus the
//! per-replication observables behind them. Replications run on the rayon
//! pool and are merged in replication order, so results do not depend on
//! the number of threads.

mod basic;
mod limit;
mod slopes;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_stream, tag};

pub use basic::{bessel, brownian_null, laplace, occupation, scaling, transforms};
pub use limit::{cvloi, cvptfav, limit_suite, limsup, LimitObservation, LimitSample, LimitSuite};
pub use slopes::{regeneration, valley_law, valley_law_with, F1Exponent};

/// Experiment ids accepted by [`run_experiment`].
pub const EXPERIMENT_IDS: [&str; 14] = [
    "occupation",
    "brownian-null",
    "bessel",
    "transforms",
    "valley-law",
    "post-law",
    "independence",
    "regeneration",
    "scaling",
    "cvptfav",
    "limsup",
    "cvloi",
    "laplace",
    "limit-suite",
];

/// Largest tolerated fraction of aborted replications.
pub const MAX_ABORT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment_id: String,
    pub n_replications: usize,
    pub n_failures: usize,
    pub statistics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub verdict: Verdict,
    pub abort_overflow: bool,
    pub runtime_s: f64,
    pub config_hash: String,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Names of the checks that failed, plus the abort rule.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|(_, ok)| !**ok)
            .map(|(k, _)| k.clone())
            .collect();
        if self.abort_overflow {
            out.push(format!("aborted {} of {}", self.n_failures, self.n_replications));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub experiment: String,
    pub c: f64,
    pub replication: usize,
    pub observable: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: McReport,
    pub observables: Vec<Observable>,
}

impl Outcome {
    /// Writes `report.json` and `observables.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.report)? + "\n",
        )?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("observables.csv"))?);
        writeln!(out, "experiment,c,replication,observable,value")?;
        for o in &self.observables {
            writeln!(
                out,
                "{},{:?},{},{},{:?}",
                o.experiment, o.c, o.replication, o.observable, o.value
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Collects statistics, checks and observables while an experiment runs.
pub(crate) struct Recorder {
    id: String,
    started: Instant,
    hash: String,
    pub n_replications: usize,
    pub n_failures: usize,
    pub statistics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub observables: Vec<Observable>,
}

impl Recorder {
    pub fn new(id: &str, cfg: &RunConfig) -> Self {
        Self {
            id: id.to_string(),
            started: Instant::now(),
            hash: cfg.hash(),
            n_replications: 0,
            n_failures: 0,
            statistics: BTreeMap::new(),
            checks: BTreeMap::new(),
            observables: Vec::new(),
        }
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.statistics.insert(name.into(), value);
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.insert(name.into(), ok);
    }

    pub fn observe(&mut self, c: f64, replication: usize, observable: &str, value: f64) {
        self.observables.push(Observable {
            experiment: self.id.clone(),
            c,
            replication,
            observable: observable.to_string(),
            value,
        });
    }

    pub fn count<T>(&mut self, batch: &Batch<T>) {
        self.n_replications += batch.attempted;
        self.n_failures += batch.failed;
    }

    pub fn finish(self) -> Outcome {
        let abort_overflow =
            self.n_replications > 0 && self.n_failures as f64 > MAX_ABORT_FRACTION * self.n_replications as f64;
        let ok = !abort_overflow && self.checks.values().all(|&b| b);
        Outcome {
            report: McReport {
                experiment_id: self.id,
                n_replications: self.n_replications,
                n_failures: self.n_failures,
                statistics: self.statistics,
                checks: self.checks,
                verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                abort_overflow,
                runtime_s: self.started.elapsed().as_secs_f64(),
                config_hash: self.hash,
            },
            observables: self.observables,
        }
    }
}

/// Results of `attempted` replications; failed ones are counted, not kept.
pub(crate) struct Batch<T> {
    pub attempted: usize,
    pub failed: usize,
    /// `(replication index, value)` in index order.
    pub ok: Vec<(usize, T)>,
}

impl<T> Batch<T> {
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.ok.iter().map(|(_, v)| v)
    }
}

/// Runs `f` for replications `0..n` in parallel. Aborted replications and
/// windows that could not be resolved count as failures; any other error
/// stops the experiment.
pub(crate) fn replicate<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Batch<T>> {
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    let mut batch = Batch {
        attempted: n,
        failed: 0,
        ok: Vec::with_capacity(n),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => batch.ok.push((i, v)),
            Err(Error::Aborted(_)) | Err(Error::WindowTooSmall(_)) => batch.failed += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(batch)
}

/// Stream for replication `rep` of pipeline `pipeline` at height `c`.
pub(crate) fn stream(cfg: &RunConfig, pipeline: &str, c: f64, rep: usize, role: &str) -> u64 {
    derive_stream(&[cfg.master_seed, tag(pipeline), c.to_bits(), rep as u64, tag(role)])
}

/// Runs the experiment named by `cfg.experiment.id`.
pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.experiment.id.as_str() {
        "occupation" => occupation(cfg),
        "brownian-null" => brownian_null(cfg),
        "bessel" => bessel(cfg),
        "transforms" => transforms(cfg),
        "valley-law" | "post-law" | "independence" => valley_law(cfg),
        "regeneration" => regeneration(cfg),
        "scaling" => scaling(cfg),
        "cvptfav" => cvptfav(cfg),
        "limsup" => limsup(cfg),
        "cvloi" => cvloi(cfg),
        "limit-suite" => {
            let suite = limit_suite(cfg)?;
            Ok(suite.combined(cfg, cfg.experiment.n_replications))
        }
        "laplace" => laplace(cfg),
        other => Err(Error::Parameter(format!(
            "unknown experiment id {other:?}; known: {}",
            EXPERIMENT_IDS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_counts_aborts_and_keeps_order() {
        let b = replicate(10, |i| {
            if i % 4 == 1 {
                Err(Error::Aborted("x".into()))
            } else {
                Ok(i * 2)
            }
        })
        .unwrap();
        assert_eq!(b.failed, 3);
        assert_eq!(
            b.ok.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
            vec![0, 2, 3, 4, 6, 7, 8]
        );
        assert!(b.values().all(|v| v % 2 == 0));
        assert!(replicate(3, |_| -> Result<()> { Err(Error::Parameter("bad".into())) }).is_err());
    }

    #[test]
    fn verdict_follows_checks_and_aborts() {
        let cfg = RunConfig::preset("scaling");
        let mut r = Recorder::new("t", &cfg);
        r.n_replications = 100;
        r.n_failures = 5;
        r.check("a", true);
        assert!(r.finish().report.passed());
        let mut r = Recorder::new("t", &cfg);
        r.n_replications = 100;
        r.n_failures = 6;
        let rep = r.finish().report;
        assert!(!rep.passed() && rep.abort_overflow);
        let mut r = Recorder::new("t", &cfg);
        r.check("a", false);
        assert_eq!(r.finish().report.failures(), vec!["a".to_string()]);
    }

    #[test]
    fn unknown_and_degenerate_configs_are_parameter_errors() {
        let mut cfg = RunConfig::preset("scaling");
        cfg.experiment.id = "nope".into();
        assert!(matches!(run_experiment(&cfg), Err(Error::Parameter(_))));
        let mut cfg = RunConfig::preset("cvloi");
        cfg.experiment.n_replications = 0;
        assert!(matches!(run_experiment(&cfg), Err(Error::Parameter(_))));
    }
}
