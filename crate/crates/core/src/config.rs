//! Run configuration shared by the command line and the experiments.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::Engine;
use crate::error::{param, Result};
use crate::stable::StableLawSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub step_h: f64,
    /// Half-width of the first environment window; sampled windows grow.
    pub initial_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub c_values: Vec<f64>,
    pub probes: Vec<f64>,
    pub delta: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    pub n_replications: usize,
    /// Diffusion horizon for `simulate`, `local-time` and fixed-time probes.
    #[serde(default = "default_horizon")]
    pub horizon_t: f64,
    /// Excursion height for the regeneration experiment.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    /// Cap on points per sampled path; exceeding it aborts the replication.
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_significance")]
    pub significance: f64,
    /// Height of the valleys fed to the Laplace ratio.
    #[serde(default = "default_valley_height")]
    pub valley_height: f64,
}

fn default_r() -> f64 {
    0.5
}
fn default_horizon() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    0.5
}
fn default_engine() -> Engine {
    Engine::Chain
}
fn default_max_points() -> usize {
    1 << 22
}
fn default_significance() -> f64 {
    0.01
}
fn default_valley_height() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub law: StableLawSpec,
    pub grid: GridConfig,
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

/// Scale used when none is given: 1/2 (standard Brownian motion) for
/// `alpha = 2`, 1 otherwise.
pub fn default_scale(alpha: f64) -> f64 {
    if alpha == 2.0 {
        0.5
    } else {
        1.0
    }
}

impl RunConfig {
    /// The configuration each experiment uses when no file is given.
    pub fn preset(id: &str) -> Self {
        let law = |alpha: f64, beta: f64| StableLawSpec::new(alpha, beta, default_scale(alpha));
        let exp = |c_values: Vec<f64>, n: usize| ExperimentConfig {
            id: id.to_string(),
            c_values,
            probes: vec![-1.0, 0.0, 1.0],
            delta: 1.0,
            r: 0.5,
            n_replications: n,
            horizon_t: 1.0,
            eps: 0.5,
            engine: Engine::Chain,
            max_points: default_max_points(),
            significance: 0.01,
            valley_height: 1.0,
        };
        let (law, step_h, experiment) = match id {
            "occupation" => (law(1.5, 0.0), 0.1, exp(vec![4.0, 8.0], 100)),
            "brownian-null" => (law(2.0, 0.0), 0.01, exp(vec![], 10_000)),
            "bessel" => (law(2.0, 0.0), 0.0003, exp(vec![], 10_000)),
            "transforms" => (
                law(1.5, 0.0),
                0.01,
                ExperimentConfig {
                    probes: vec![0.5, 1.0, 2.0],
                    max_points: 1 << 20,
                    ..exp(vec![], 10_000)
                },
            ),
            "valley-law" | "post-law" | "independence" => (
                law(1.5, 0.0),
                0.01,
                ExperimentConfig {
                    probes: vec![0.3, 1.0],
                    ..exp(vec![1.0], 5_000)
                },
            ),
            "regeneration" => (law(1.5, 0.0), 0.01, exp(vec![], 5_000)),
            "scaling" => (law(2.0, 0.0), 0.1, exp(vec![2.0], 1_000)),
            "cvptfav" => (law(2.0, 0.0), 0.1, exp(vec![4.0, 8.0, 12.0], 200)),
            "limsup" | "cvloi" => (law(2.0, 0.0), 0.1, exp(vec![4.0, 8.0, 12.0], 300)),
            "laplace" => (
                law(1.5, 0.0),
                0.05,
                ExperimentConfig {
                    delta: 0.25,
                    ..exp(vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0], 20)
                },
            ),
            _ => (law(2.0, 0.0), 0.1, exp(vec![4.0], 100)),
        };
        Self {
            law,
            grid: GridConfig {
                step_h,
                initial_window: 10.0,
            },
            experiment,
            output_dir: PathBuf::from("out"),
            master_seed: 1,
        }
    }

    /// The environment law with the run's master seed.
    pub fn spec(&self) -> StableLawSpec {
        self.law.with_seed(self.master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        let e = &self.experiment;
        if !(self.grid.step_h > 0.0 && self.grid.initial_window > 0.0) {
            return param("step_h and initial_window must be positive");
        }
        if !(e.r > 0.0 && e.r < 1.0) {
            return param("r must lie in (0, 1)");
        }
        if !(e.delta > 0.0) {
            return param("delta must be positive");
        }
        if e.n_replications == 0 {
            return param("n_replications must be positive");
        }
        if e.c_values.iter().any(|c| !(*c > 0.0)) || e.c_values.windows(2).any(|w| !(w[0] < w[1])) {
            return param("c_values must be positive and increasing");
        }
        if !(e.horizon_t > 0.0 && e.eps > 0.0 && e.valley_height > 0.0 && e.significance > 0.0 && e.significance < 1.0)
        {
            return param("horizon_t, eps, valley_height and significance must be positive, significance below 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form with `output_dir` blanked, so the
    /// hash names the experiment rather than where it was written.
    pub fn hash(&self) -> String {
        let mut bare = self.clone();
        bare.output_dir = PathBuf::new();
        let compact = serde_json::to_string(&bare).expect("config serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        for id in ["scaling", "cvloi", "transforms", "laplace", "bessel"] {
            let mut cfg = RunConfig::preset(id);
            cfg.law.drift_d = 0.1 + 0.2;
            cfg.grid.step_h = 1.0 / 3.0;
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let text = r#"{"law": {"alpha": 2.0, "beta": 0.0, "scale_k": 0.5},
            "grid": {"step_h": 0.1, "initial_window": 10.0},
            "experiment": {"id": "scaling", "c_values": [2.0], "probes": [], "delta": 1.0, "n_replications": 10},
            "output_dir": "out", "master_seed": 3}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.experiment.r, 0.5);
        assert_eq!(cfg.experiment.engine, Engine::Chain);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = RunConfig::preset("scaling");
        cfg.experiment.r = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::preset("cvptfav");
        cfg.experiment.delta = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::preset("cvloi");
        cfg.experiment.n_replications = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::preset("cvloi");
        cfg.law.alpha = 2.5;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::preset("scaling");
        assert_ne!(
            cfg.hash(),
            RunConfig {
                master_seed: 2,
                ..cfg.clone()
            }
            .hash()
        );
    }
}
