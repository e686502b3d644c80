//! Local time at large times against the limit functional of the two-sided
//! conditioned environment.
//!
//! One environment and one chain trajectory per replication, observed at
//! `t = e^c` for every `c` in `c_values`; the limit samples are drawn once
//! and shared by all `c`.

use super::{replicate, stream, Batch, Outcome, Recorder};
use crate::conditioned::{sample_tilde_with, Construction};
use crate::config::RunConfig;
use crate::diffusion::{chain_checkpoints, favorite_point, local_time_profile, ChainOptions, Environment};
use crate::error::{Error, Result};
use crate::path::recenter;
use crate::stable::EnvSampler;
use crate::stats::ks_two_sample;
use crate::valley::{ab_window, standard_valley_sampled};

/// Observations of one replication at one height.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitObservation {
    /// Valley bottom `m_c` and favorite point `m*(e^c)`, in space units.
    pub bottom: f64,
    pub favorite: f64,
    /// `L*(e^c) / e^c`.
    pub l_star: f64,
    /// `L(e^c, m_c + x) / e^c` at each probe offset.
    pub probes: Vec<f64>,
    /// `inf V_m` over `[a_cr, -delta] u [delta, b_cr]`.
    pub condlima_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    /// `e^{-V~(x)} / int e^{-V~}` at each probe offset.
    pub probes: Vec<f64>,
    pub inverse_integral: f64,
}

pub struct LimitSuite {
    pub c_values: Vec<f64>,
    pub probes: Vec<f64>,
    pub delta: f64,
    env: Batch<Vec<LimitObservation>>,
    limit: Batch<LimitSample>,
}

fn replication(cfg: &RunConfig, rep: usize) -> Result<Vec<LimitObservation>> {
    let e = &cfg.experiment;
    let h = cfg.grid.step_h;
    let spec = cfg.spec();
    let mut sampler = EnvSampler::new(&spec, h, stream(cfg, "limit", 0.0, rep, "env"))?;
    let mut path = sampler.sample(((cfg.grid.initial_window / h).ceil() as usize).max(2));
    let mut valleys = Vec::new();
    for &c in &e.c_values {
        let v = standard_valley_sampled(&mut path, &mut sampler, c, e.max_points)?;
        valleys.push(v.m);
    }
    let mut env = Environment::sampled(path, sampler, e.max_points);
    let horizons: Vec<f64> = e.c_values.iter().map(|c| c.exp()).collect();
    let runs = chain_checkpoints(
        &mut env,
        &horizons,
        stream(cfg, "limit", 0.0, rep, "walk"),
        ChainOptions::default(),
    )?;
    let mut out = Vec::new();
    for ((run, &m), &c) in runs.iter().zip(&valleys).zip(&e.c_values) {
        let t = run.horizon_t;
        let prof = local_time_profile(run);
        let probes = e
            .probes
            .iter()
            .map(|x| prof.at(m + (x / h).round() as i64) / t)
            .collect();
        let vm = recenter(&env.path, m)?;
        let condlima_inf = match ab_window(&vm, c, e.r) {
            Ok((a, b)) => {
                let d = (e.delta / h).round() as i64;
                (a..=-d).chain(d..=b).map(|j| vm.value(j)).fold(f64::INFINITY, f64::min)
            }
            Err(_) => f64::NAN,
        };
        out.push(LimitObservation {
            bottom: m as f64 * h,
            favorite: favorite_point(&prof) as f64 * h,
            l_star: prof.l_star() / t,
            probes,
            condlima_inf,
        });
    }
    Ok(out)
}

/// Environment replications and limit samples for all heights.
pub fn limit_suite(cfg: &RunConfig) -> Result<LimitSuite> {
    cfg.validate()?;
    let e = &cfg.experiment;
    if e.c_values.is_empty() {
        return Err(Error::Parameter(
            "the limit experiments need at least one c value".into(),
        ));
    }
    let h = cfg.grid.step_h;
    let spec = cfg.spec();
    let env = replicate(e.n_replications, |rep| replication(cfg, rep))?;
    let limit = replicate(e.n_replications, |rep| {
        let tilde = sample_tilde_with(
            &spec,
            Construction::TanakaR,
            cfg.grid.initial_window,
            h,
            stream(cfg, "limit", 0.0, rep, "tilde"),
        )?;
        Ok(LimitSample {
            probes: e
                .probes
                .iter()
                .map(|x| tilde.profile_at((x / h).round() as i64))
                .collect(),
            inverse_integral: tilde.inverse_integral(),
        })
    })?;
    Ok(LimitSuite {
        c_values: e.c_values.clone(),
        probes: e.probes.clone(),
        delta: e.delta,
        env,
        limit,
    })
}

impl LimitSuite {
    fn record_common(&self, rec: &mut Recorder, n: usize) {
        let attempted = self.env.attempted.min(n);
        rec.n_replications += attempted + self.limit.attempted;
        rec.n_failures += self.env.ok.iter().filter(|(i, _)| *i < n).count().abs_diff(attempted) + self.limit.failed;
    }

    fn observations(&self, n: usize) -> impl Iterator<Item = &(usize, Vec<LimitObservation>)> {
        self.env.ok.iter().filter(move |(i, _)| *i < n)
    }

    /// Coverage of `|m* - m_c| <= delta` over the first `n` replications.
    pub fn coverage_report(&self, cfg: &RunConfig, n: usize) -> Outcome {
        let mut rec = Recorder::new("cvptfav", cfg);
        self.record_common(&mut rec, n);
        self.coverage_into(&mut rec, n);
        rec.finish()
    }

    fn coverage_into(&self, rec: &mut Recorder, n: usize) {
        let mut cov = Vec::new();
        for (k, c) in self.c_values.iter().enumerate() {
            let mut hit = 0usize;
            let mut total = 0usize;
            let mut small = 0usize;
            for (rep, obs) in self.observations(n) {
                let o = &obs[k];
                let d = (o.favorite - o.bottom).abs();
                rec.observe(*c, *rep, "favorite_minus_bottom", o.favorite - o.bottom);
                rec.observe(*c, *rep, "condlima_inf", o.condlima_inf);
                hit += (d <= self.delta + 1e-9) as usize;
                small += (o.condlima_inf <= 0.5) as usize;
                total += 1;
            }
            let f = hit as f64 / total.max(1) as f64;
            rec.stat(format!("coverage_c{c}"), f);
            rec.stat(
                format!("condlima_frequency_eps0.5_c{c}"),
                small as f64 / total.max(1) as f64,
            );
            cov.push(f);
        }
        rec.stat("coverage_n", self.observations(n).count() as f64);
        rec.check("coverage_non_decreasing_in_c", cov.windows(2).all(|w| w[0] <= w[1]));
        rec.check(
            "coverage_at_largest_c_at_least_0.8",
            cov.last().is_some_and(|&f| f >= 0.8),
        );
    }

    fn ks_series(
        &self,
        rec: &mut Recorder,
        name: &str,
        sim: impl Fn(&LimitObservation) -> f64,
        lim: impl Fn(&LimitSample) -> f64,
    ) -> Vec<(f64, f64)> {
        let b: Vec<f64> = self.limit.values().map(&lim).collect();
        let mut out = Vec::new();
        for (k, c) in self.c_values.iter().enumerate() {
            let a: Vec<f64> = self.env.values().map(|obs| sim(&obs[k])).collect();
            let (d, p) = ks_two_sample(&a, &b).unwrap_or((f64::NAN, f64::NAN));
            rec.stat(format!("{name}_ks_distance_c{c}"), d);
            rec.stat(format!("{name}_ks_p_c{c}"), p);
            out.push((d, p));
        }
        out
    }

    /// `L*(e^c)/e^c` against `1 / int e^{-V~}`.
    pub fn limsup_report(&self, cfg: &RunConfig) -> Outcome {
        let mut rec = Recorder::new("limsup", cfg);
        self.record_common(&mut rec, usize::MAX);
        self.limsup_into(&mut rec, cfg.experiment.significance);
        rec.finish()
    }

    fn limsup_into(&self, rec: &mut Recorder, significance: f64) {
        for (rep, obs) in &self.env.ok {
            for (o, c) in obs.iter().zip(&self.c_values) {
                rec.observe(*c, *rep, "l_star_over_t", o.l_star);
            }
        }
        for (rep, s) in &self.limit.ok {
            rec.observe(f64::INFINITY, *rep, "inverse_integral", s.inverse_integral);
        }
        let ks = self.ks_series(rec, "l_star", |o| o.l_star, |s| s.inverse_integral);
        rec.check(
            "l_star_ks_distance_strictly_decreasing",
            ks.windows(2).all(|w| w[1].0 < w[0].0),
        );
        rec.check(
            format!("l_star_ks_p_at_largest_c_above_{significance}"),
            ks.last().is_some_and(|k| k.1 > significance),
        );
    }

    /// Probe offsets: `L(e^c, m_c + x)/e^c` against `e^{-V~(x)} / int e^{-V~}`.
    pub fn cvloi_report(&self, cfg: &RunConfig) -> Outcome {
        let mut rec = Recorder::new("cvloi", cfg);
        self.record_common(&mut rec, usize::MAX);
        self.cvloi_into(&mut rec);
        rec.finish()
    }

    fn cvloi_into(&self, rec: &mut Recorder) {
        for (j, x) in self.probes.iter().enumerate() {
            for (rep, obs) in &self.env.ok {
                for (o, c) in obs.iter().zip(&self.c_values) {
                    rec.observe(*c, *rep, &format!("local_time_x{x}"), o.probes[j]);
                }
            }
            for (rep, s) in &self.limit.ok {
                rec.observe(f64::INFINITY, *rep, &format!("limit_x{x}"), s.probes[j]);
            }
            let ks = self.ks_series(rec, &format!("probe_x{x}"), |o| o.probes[j], |s| s.probes[j]);
            rec.check(
                format!("probe_x{x}_ks_distance_non_increasing"),
                ks.windows(2).all(|w| w[1].0 <= w[0].0),
            );
        }
    }

    /// All three reports in one.
    pub fn combined(&self, cfg: &RunConfig, n_coverage: usize) -> Outcome {
        let mut rec = Recorder::new("limit-suite", cfg);
        self.record_common(&mut rec, usize::MAX);
        self.coverage_into(&mut rec, n_coverage);
        self.limsup_into(&mut rec, cfg.experiment.significance);
        self.cvloi_into(&mut rec);
        rec.finish()
    }
}

pub fn cvptfav(cfg: &RunConfig) -> Result<Outcome> {
    Ok(limit_suite(cfg)?.coverage_report(cfg, cfg.experiment.n_replications))
}

pub fn limsup(cfg: &RunConfig) -> Result<Outcome> {
    Ok(limit_suite(cfg)?.limsup_report(cfg))
}

pub fn cvloi(cfg: &RunConfig) -> Result<Outcome> {
    Ok(limit_suite(cfg)?.cvloi_report(cfg))
}
