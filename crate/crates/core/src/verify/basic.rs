//! Engine checks, conditioned-law anchors, the scaling lemma and the
//! Laplace ratio.

use rand::Rng;

use super::{replicate, stream, Outcome, Recorder};
use crate::conditioned::{ConditionedSampler, Construction, LawTag};
use crate::config::{default_scale, RunConfig};
use crate::diffusion::{brox_simulate, chain_simulate, local_time_profile, Engine, Environment};
use crate::error::{Error, Result};
use crate::path::{future_infimum, laplace_ratio, recenter, TwoSidedPath};
use crate::rng::stream_rng;
use crate::stable::{EnvSampler, StableLawSpec};
use crate::stats::{bessel3_cdf, ks_one_sample, ks_two_sample, normal_cdf};
use crate::valley::standard_valley_sampled;

fn window_steps(cfg: &RunConfig, h: f64) -> usize {
    ((cfg.grid.initial_window / h).ceil() as usize).max(2)
}

fn sampled_env(spec: &StableLawSpec, cfg: &RunConfig, h: f64, stream: u64) -> Result<Environment> {
    let mut sampler = EnvSampler::new(spec, h, stream)?;
    let path = sampler.sample(window_steps(cfg, h));
    Ok(Environment::sampled(path, sampler, cfg.experiment.max_points))
}

/// Occupation identity on random runs: alpha cycles through 1, 1.5, 2 and
/// the engines alternate. Horizons are `exp(U c)` with `c = c_values[0]`
/// for BROX and the last entry for CHAIN.
pub fn occupation(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("occupation", cfg);
    let e = &cfg.experiment;
    let brox_cap = *e.c_values.first().unwrap_or(&4.0);
    let chain_cap = *e.c_values.last().unwrap_or(&8.0);
    let h = cfg.grid.step_h;
    let batch = replicate(e.n_replications, |rep| {
        let alpha = [1.0, 1.5, 2.0][rep % 3];
        let spec = StableLawSpec {
            alpha,
            scale_k: default_scale(alpha),
            ..cfg.spec()
        };
        let engine = if rep % 2 == 0 { Engine::Chain } else { Engine::Brox };
        let cap = if engine == Engine::Chain { chain_cap } else { brox_cap };
        let t =
            (stream_rng(cfg.master_seed, stream(cfg, "occupation", 0.0, rep, "horizon")).random::<f64>() * cap).exp();
        let mut env = sampled_env(&spec, cfg, h, stream(cfg, "occupation", 0.0, rep, "env"))?;
        let s = stream(cfg, "occupation", 0.0, rep, "walk");
        let run = match engine {
            Engine::Chain => chain_simulate(&mut env, t, s)?,
            Engine::Brox => brox_simulate(&mut env, t, h * h / 4.0, h, s)?,
        };
        let prof = local_time_profile(&run);
        Ok((alpha, engine, t, (prof.total() - t).abs() / t))
    })?;
    rec.count(&batch);
    let mut worst: f64 = 0.0;
    for (rep, (alpha, engine, t, err)) in &batch.ok {
        rec.observe(*alpha, *rep, "horizon", *t);
        rec.observe(
            *alpha,
            *rep,
            if *engine == Engine::Chain {
                "chain_relative_error"
            } else {
                "brox_relative_error"
            },
            *err,
        );
        worst = worst.max(*err);
    }
    rec.stat("max_relative_error", worst);
    rec.stat(
        "n_chain",
        batch.values().filter(|v| v.1 == Engine::Chain).count() as f64,
    );
    rec.stat("n_brox", batch.values().filter(|v| v.1 == Engine::Brox).count() as f64);
    rec.check("identity_within_1e-2", worst < 1e-2);
    Ok(rec.finish())
}

/// Flat environment: `X(t)` must be a standard Brownian motion for both engines.
pub fn brownian_null(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("brownian-null", cfg);
    let e = &cfg.experiment;
    let h = cfg.grid.step_h;
    let t = e.horizon_t;
    let half = (cfg.grid.initial_window.max(10.0 * t.sqrt()) / h).ceil() as usize;
    let flat = TwoSidedPath::from_fn(h, half, half, |_| 0.0);
    for engine in [Engine::Chain, Engine::Brox] {
        let name = if engine == Engine::Chain { "chain" } else { "brox" };
        let batch = replicate(e.n_replications, |rep| {
            let mut env = Environment::fixed(flat.clone());
            let s = stream(cfg, "brownian-null", 0.0, rep, name);
            let run = match engine {
                Engine::Chain => chain_simulate(&mut env, t, s)?,
                Engine::Brox => brox_simulate(&mut env, t, h * h / 4.0, h, s)?,
            };
            Ok(run.final_position)
        })?;
        rec.count(&batch);
        let xs: Vec<f64> = batch.values().copied().collect();
        for (rep, x) in &batch.ok {
            rec.observe(0.0, *rep, &format!("{name}_final_position"), *x);
        }
        let (d, p) = ks_one_sample(&xs, |x| normal_cdf(x / t.sqrt()))?;
        rec.stat(format!("{name}_ks_distance"), d);
        rec.stat(format!("{name}_ks_p"), p);
        rec.check(format!("{name}_ks_p_above_{}", e.significance), p > e.significance);
    }
    Ok(rec.finish())
}

/// `alpha = 2`: the Bessel(3) sampler and the path-reversal transform of
/// Gaussian increments against the exact Bessel(3) law at `horizon_t`.
pub fn bessel(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("bessel", cfg);
    let e = &cfg.experiment;
    let spec = StableLawSpec {
        alpha: 2.0,
        ..cfg.spec()
    };
    let h = cfg.grid.step_h;
    let t = e.horizon_t;
    let sd = (2.0 * spec.scale_k).sqrt();
    for (name, construction) in [("bessel3", Construction::Bessel3), ("tanaka_r", Construction::TanakaR)] {
        let batch = replicate(e.n_replications, |rep| {
            let mut s = ConditionedSampler::new(
                &spec,
                LawTag::Up,
                construction,
                h,
                stream(cfg, "bessel", 0.0, rep, name),
            )?
            .with_max_points(e.max_points);
            s.ensure_horizon(t)?;
            Ok(s.values()[(t / h).round() as usize])
        })?;
        rec.count(&batch);
        for (rep, x) in &batch.ok {
            rec.observe(0.0, *rep, name, *x);
        }
        let xs: Vec<f64> = batch.values().copied().collect();
        let (d, p) = ks_one_sample(&xs, |r| bessel3_cdf(r / sd, t))?;
        rec.stat(format!("{name}_ks_distance"), d);
        rec.stat(format!("{name}_ks_p"), p);
        rec.check(format!("{name}_ks_p_above_{}", e.significance), p > e.significance);
    }
    Ok(rec.finish())
}

/// Concatenation of positive steps against running-maximum reversal at the
/// probe times, Bonferroni over probes.
pub fn transforms(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("transforms", cfg);
    let e = &cfg.experiment;
    if e.probes.is_empty() || e.probes.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Parameter("transforms needs positive probe times".into()));
    }
    let spec = cfg.spec();
    let h = cfg.grid.step_h;
    let tmax = e.probes.iter().cloned().fold(0.0, f64::max);
    let mut samples = Vec::new();
    for (name, construction) in [("tanaka_r", Construction::TanakaR), ("bertoin", Construction::Bertoin)] {
        let batch = replicate(e.n_replications, |rep| {
            let mut s = ConditionedSampler::new(
                &spec,
                LawTag::Up,
                construction,
                h,
                stream(cfg, "transforms", 0.0, rep, name),
            )?
            .with_max_points(e.max_points);
            s.ensure_horizon(tmax)?;
            Ok(e.probes
                .iter()
                .map(|t| s.values()[(t / h).round() as usize])
                .collect::<Vec<f64>>())
        })?;
        rec.count(&batch);
        for (rep, v) in &batch.ok {
            for (t, x) in e.probes.iter().zip(v) {
                rec.observe(*t, *rep, name, *x);
            }
        }
        samples.push(batch);
    }
    let level = e.significance / e.probes.len() as f64;
    for (k, t) in e.probes.iter().enumerate() {
        let a: Vec<f64> = samples[0].values().map(|v| v[k]).collect();
        let b: Vec<f64> = samples[1].values().map(|v| v[k]).collect();
        let (d, p) = ks_two_sample(&a, &b)?;
        rec.stat(format!("ks_distance_t{t}"), d);
        rec.stat(format!("ks_p_t{t}"), p);
        rec.check(format!("ks_p_t{t}_above_{level}"), p > level);
    }
    Ok(rec.finish())
}

/// Paired pipelines for the scaling lemma at `c = c_values[0]`: the chain in
/// `V` to time `c^{2 alpha} t` read at scale `c^{-alpha}`, against the chain
/// in `x -> V(c^alpha x)` to time `t`, on independent environments. The
/// negative control reads pipeline A at the wrong scale `c^{-alpha / 2}`.
pub fn scaling(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("scaling", cfg);
    let e = &cfg.experiment;
    let c = *e
        .c_values
        .first()
        .ok_or_else(|| Error::Parameter("scaling needs one c value".into()))?;
    let spec = cfg.spec();
    let alpha = spec.alpha;
    let h = cfg.grid.step_h;
    let t = e.horizon_t;
    let ca = c.powf(alpha);
    let batch = replicate(e.n_replications, |rep| {
        let mut env_a = sampled_env(&spec, cfg, h, stream(cfg, "scaling", c, rep, "env_a"))?;
        let run_a = chain_simulate(&mut env_a, ca * ca * t, stream(cfg, "scaling", c, rep, "walk_a"))?;
        let mut env_b = sampled_env(&spec, cfg, h, stream(cfg, "scaling", c, rep, "env_b"))?;
        env_b.path.plus.step_h = h / ca;
        env_b.path.minus.step_h = h / ca;
        let run_b = chain_simulate(&mut env_b, t, stream(cfg, "scaling", c, rep, "walk_b"))?;
        let l_a = local_time_profile(&run_a).l_star();
        let l_b = local_time_profile(&run_b).l_star();
        Ok([run_a.final_position, run_b.final_position, l_a, l_b])
    })?;
    rec.count(&batch);
    for (rep, v) in &batch.ok {
        for (k, name) in ["x_a", "x_b", "lstar_a", "lstar_b"].iter().enumerate() {
            rec.observe(c, *rep, name, v[k]);
        }
    }
    let col = |k: usize, f: f64| batch.values().map(|v| v[k] * f).collect::<Vec<f64>>();
    let (dx, px) = ks_two_sample(&col(0, 1.0 / ca), &col(1, 1.0))?;
    let (dl, pl) = ks_two_sample(&col(2, 1.0 / ca), &col(3, 1.0))?;
    let (dn, pn) = ks_two_sample(&col(0, 1.0 / c.powf(alpha / 2.0)), &col(1, 1.0))?;
    rec.stat("x_ks_distance", dx);
    rec.stat("x_ks_p", px);
    rec.stat("lstar_ks_distance", dl);
    rec.stat("lstar_ks_p", pl);
    rec.stat("wrong_exponent_ks_distance", dn);
    rec.stat("wrong_exponent_ks_p", pn);
    let s = e.significance;
    rec.check(format!("x_ks_p_above_{s}"), px > s);
    rec.check(format!("lstar_ks_p_above_{s}"), pl > s);
    rec.check(format!("wrong_exponent_ks_p_below_{s}"), pn < s);
    Ok(rec.finish())
}

/// `(alpha_in, beta_in)`: the inner window beyond which the path never
/// returns below `theta`.
fn inner_window(path: &TwoSidedPath, theta: f64) -> Result<(f64, f64)> {
    let h = path.step_h();
    let first = |side: &crate::path::GridPath| {
        future_infimum(side)
            .values
            .iter()
            .position(|&v| v >= theta)
            .ok_or_else(|| Error::WindowTooSmall(format!("path does not stay above {theta}")))
    };
    Ok((-(first(&path.minus)? as f64) * h, first(&path.plus)? as f64 * h))
}

/// Laplace ratio on valleys of sampled environments: the environment seen
/// from the bottom of its standard valley of height `valley_height`,
/// restricted to the valley. The inner window starts where the path stays
/// above `delta` for good.
pub fn laplace(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("laplace", cfg);
    let e = &cfg.experiment;
    let spec = cfg.spec();
    let h = cfg.grid.step_h;
    let theta = e.delta;
    let batch = replicate(e.n_replications, |rep| {
        let mut sampler = EnvSampler::new(&spec, h, stream(cfg, "laplace", 0.0, rep, "env"))?;
        let mut path = sampler.sample(window_steps(cfg, h));
        let v = standard_valley_sampled(&mut path, &mut sampler, e.valley_height, e.max_points)?;
        let (Some(p), Some(q)) = (v.p, v.q) else {
            return Err(Error::Aborted("valley maxima not resolved".into()));
        };
        let vm = recenter(&path, v.m)?;
        let m = v.m;
        let valley = TwoSidedPath {
            plus: vm.plus.truncated((q - m) as usize + 1),
            minus: vm.minus.truncated((m - p) as usize + 1),
        };
        let (ai, bi) = inner_window(&valley, theta)?;
        let (a, b) = ((p - m) as f64 * h, (q - m) as f64 * h);
        e.c_values
            .iter()
            .map(|&c| laplace_ratio(&valley, c, a, b, ai, bi))
            .collect::<Result<Vec<f64>>>()
    })?;
    rec.count(&batch);
    let mut monotone = true;
    let mut worst_final: f64 = 0.0;
    for (rep, ratios) in &batch.ok {
        for (c, r) in e.c_values.iter().zip(ratios) {
            rec.observe(*c, *rep, "ratio_minus_one", r - 1.0);
        }
        monotone &= ratios.windows(2).all(|w| w[1] <= w[0]);
        worst_final = worst_final.max((ratios.last().unwrap() - 1.0).abs());
    }
    rec.stat("max_final_deviation", worst_final);
    rec.check("ratios_non_increasing_in_c", monotone);
    rec.check("final_deviation_below_1e-6", worst_final < 1e-6);
    Ok(rec.finish())
}
