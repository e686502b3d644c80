//! Command-line front end. Every subcommand reads a JSON [`RunConfig`] (or
//! the preset for the experiment when `--config` is omitted), applies flat
//! `--key value` overrides and writes its outputs into `output_dir`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parameter error, 3 failed
//! verdict, 4 too many aborted replications.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::conditioned::sample_tilde;
use crate::config::{default_scale, RunConfig};
use crate::diffusion::{
    brox_simulate, chain_simulate, favorite_point, local_time_profile, DiffusionRun, Engine, Environment,
};
use crate::error::{Error, Result};
use crate::path::normalize_profile;
use crate::rng::{derive_stream, tag};
use crate::selftest::{run_selftest, SelftestOptions};
use crate::stable::EnvSampler;
use crate::valley::standard_valley_sampled;
use crate::verify::{run_experiment, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_ABORTS: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "levy-env", version, about = "Diffusions in stable Lévy environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a two-sided environment on the grid: env.csv.
    SampleEnv(Common),
    /// Standard valley of height c_values[0]: valley.json and env.csv.
    FindValley(Common),
    /// Run the configured engine up to horizon_t: run.json.
    Simulate(Common),
    /// Local-time profile at horizon_t: run.json and local_time.csv.
    LocalTime(Common),
    /// Two-sided conditioned environment: tilde.csv, profile.csv, limit.json.
    LimitSample(Common),
    /// Monte Carlo experiment: report.json and observables.csv.
    Verify {
        experiment_id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form examples and small Monte Carlo oracles over every module.
    Selftest {
        /// Replace the CHAIN rate constant (1/2) in the Brownian check.
        #[arg(long)]
        mutate_rate: Option<f64>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    scale_k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    drift_d: Option<f64>,
    #[arg(long)]
    step_h: Option<f64>,
    #[arg(long)]
    initial_window: Option<f64>,
    /// Comma-separated heights.
    #[arg(long = "c", value_delimiter = ',')]
    c_values: Option<Vec<f64>>,
    /// Comma-separated probe points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probes: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "n")]
    n_replications: Option<usize>,
    #[arg(long = "horizon")]
    horizon_t: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long)]
    significance: Option<f64>,
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    match s.to_ascii_uppercase().as_str() {
        "CHAIN" => Ok(Engine::Chain),
        "BROX" => Ok(Engine::Brox),
        _ => Err(format!("unknown engine {s:?}; expected CHAIN or BROX")),
    }
}

fn log(level: &str, msg: impl std::fmt::Display) {
    eprintln!("level={level} msg={:?}", msg.to_string());
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Range(_) | Error::Json(_) => EXIT_PARAMETER,
        Error::Aborted(_) | Error::WindowTooSmall(_) => EXIT_ABORTS,
        Error::Io(_) => EXIT_IO,
    }
}

impl Common {
    fn load(&self, preset: &str) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", p.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::preset(preset),
        };
        if let Some(a) = self.alpha {
            cfg.law.alpha = a;
            if self.scale_k.is_none() {
                cfg.law.scale_k = default_scale(a);
            }
        }
        let law = &mut cfg.law;
        set(&mut law.beta, self.beta);
        set(&mut law.scale_k, self.scale_k);
        set(&mut law.drift_d, self.drift_d);
        set(&mut cfg.master_seed, self.seed);
        set(&mut cfg.output_dir, self.output_dir.clone());
        set(&mut cfg.grid.step_h, self.step_h);
        set(&mut cfg.grid.initial_window, self.initial_window);
        let e = &mut cfg.experiment;
        set(&mut e.c_values, self.c_values.clone());
        set(&mut e.probes, self.probes.clone());
        set(&mut e.delta, self.delta);
        set(&mut e.r, self.r);
        set(&mut e.n_replications, self.n_replications);
        set(&mut e.horizon_t, self.horizon_t);
        set(&mut e.eps, self.eps);
        set(&mut e.engine, self.engine);
        set(&mut e.max_points, self.max_points);
        set(&mut e.significance, self.significance);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn half_steps(cfg: &RunConfig) -> usize {
    ((cfg.grid.initial_window / cfg.grid.step_h).ceil() as usize).max(2)
}

fn env_sampler(cfg: &RunConfig) -> Result<EnvSampler> {
    EnvSampler::new(
        &cfg.spec(),
        cfg.grid.step_h,
        derive_stream(&[cfg.master_seed, tag("cli"), tag("env")]),
    )
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<DiffusionRun> {
    let mut sampler = env_sampler(cfg)?;
    let path = sampler.sample(half_steps(cfg));
    let mut env = Environment::sampled(path, sampler, cfg.experiment.max_points);
    let walk = derive_stream(&[cfg.master_seed, tag("cli"), tag("walk")]);
    let h = cfg.grid.step_h;
    match cfg.experiment.engine {
        Engine::Chain => chain_simulate(&mut env, cfg.experiment.horizon_t, walk),
        Engine::Brox => brox_simulate(&mut env, cfg.experiment.horizon_t, h * h / 4.0, h, walk),
    }
}

fn run_summary(cfg: &RunConfig, run: &DiffusionRun) -> serde_json::Value {
    let mut v = run.summary_json();
    v["final_position"] = run.final_position.into();
    v["config_hash"] = cfg.hash().into();
    v
}

fn execute(command: &Command) -> Result<i32> {
    let (common, preset) = match command {
        Command::Selftest { mutate_rate } => {
            let mut opts = SelftestOptions::default();
            set(&mut opts.chain_rate_constant, *mutate_rate);
            return Ok(
                match run_selftest(&opts, |c| log("info", format!("pass {}::{}", c.module, c.op))) {
                    Ok(n) => {
                        log("info", format!("selftest passed {n} checks"));
                        EXIT_OK
                    }
                    Err((module, op, msg)) => {
                        log("error", format!("selftest failed in {module}::{op}: {msg}"));
                        EXIT_VERDICT
                    }
                },
            );
        }
        Command::Verify { experiment_id, common } => (common, experiment_id.as_str()),
        Command::SampleEnv(c)
        | Command::FindValley(c)
        | Command::Simulate(c)
        | Command::LocalTime(c)
        | Command::LimitSample(c) => (c, "default"),
    };
    let mut cfg = common.load(preset)?;
    if let Command::Verify { experiment_id, .. } = command {
        cfg.experiment.id = experiment_id.clone();
    }
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::SampleEnv(_) => {
            env_sampler(&cfg)?
                .sample(half_steps(&cfg))
                .write_csv(&out.join("env.csv"))?;
            Ok(EXIT_OK)
        }
        Command::FindValley(_) => {
            let c = *cfg
                .experiment
                .c_values
                .first()
                .ok_or_else(|| Error::Parameter("find-valley needs --c".into()))?;
            let mut sampler = env_sampler(&cfg)?;
            let mut env = sampler.sample(half_steps(&cfg));
            let v = standard_valley_sampled(&mut env, &mut sampler, c, cfg.experiment.max_points)?;
            env.write_csv(&out.join("env.csv"))?;
            write_json(&out.join("valley.json"), &v.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Simulate(_) => {
            let run = simulate(&cfg)?;
            write_json(&out.join("run.json"), &run_summary(&cfg, &run))?;
            Ok(EXIT_OK)
        }
        Command::LocalTime(_) => {
            let run = simulate(&cfg)?;
            let prof = local_time_profile(&run);
            let mut summary = run_summary(&cfg, &run);
            summary["l_star"] = prof.l_star().into();
            summary["favorite_point"] = (favorite_point(&prof) as f64 * prof.step_h).into();
            write_json(&out.join("run.json"), &summary)?;
            prof.write_csv(&out.join("local_time.csv"))?;
            Ok(EXIT_OK)
        }
        Command::LimitSample(_) => {
            let s = derive_stream(&[cfg.master_seed, tag("cli"), tag("tilde")]);
            let tilde = sample_tilde(&cfg.spec(), cfg.grid.initial_window, cfg.grid.step_h, s)?;
            let env = &tilde.two_sided;
            let (a, b) = (env.x(env.min_index()), env.x(env.max_index()));
            let profile = normalize_profile(env, a, b)?;
            env.write_csv(&out.join("tilde.csv"))?;
            profile.write_csv(&out.join("profile.csv"))?;
            let summary = serde_json::json!({
                "log_integral": tilde.log_integral,
                "inverse_integral": tilde.inverse_integral(),
                "window": [a, b],
                "config_hash": cfg.hash(),
            });
            write_json(&out.join("limit.json"), &summary)?;
            Ok(EXIT_OK)
        }
        Command::Verify { .. } => {
            let outcome: Outcome = run_experiment(&cfg)?;
            outcome.write(&out)?;
            let r = &outcome.report;
            log(
                if r.passed() { "info" } else { "error" },
                format!(
                    "experiment={} verdict={:?} failures={}/{} runtime_s={:.2}",
                    r.experiment_id, r.verdict, r.n_failures, r.n_replications, r.runtime_s
                ),
            );
            for f in r.failures() {
                log("error", format!("failed check {f}"));
            }
            Ok(if r.abort_overflow {
                EXIT_ABORTS
            } else if r.passed() {
                EXIT_OK
            } else {
                EXIT_VERDICT
            })
        }
        Command::Selftest { .. } => unreachable!(),
    })
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAMETER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            log("error", &e);
            exit_code(&e)
        }
    }
}
