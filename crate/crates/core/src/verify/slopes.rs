//! Valley slopes against conditioned processes: the post-infimum law, the
//! independence of the two slopes, and regeneration after `sigma_eps`.

use super::{replicate, stream, Batch, Outcome, Recorder};
use crate::conditioned::{
    hat_m, passage_value_at, pre_post_split, sigma_epsilon, ConditionedSampler, Construction, F1Calibration, LawTag,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::path::GridPath;
use crate::stable::{rho_estimate, IncrementStream, StableLawSpec};
use crate::stats::{correlation, ks_two_sample, ks_weighted};

/// Exponent of the power in the post-infimum density `x^{-e} / Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Exponent {
    /// `alpha rho` with `rho = P(V(1) >= 0)`.
    AlphaRho,
    /// `alpha (1 - rho)`, the index of the descending ladder height.
    AlphaOneMinusRho,
}

/// One-sided path long enough to contain `tau_c`.
fn one_sided_until(spec: &StableLawSpec, h: f64, c: f64, max_points: usize, s: u64) -> Result<GridPath> {
    let mut incs = IncrementStream::new(*spec, h, s)?;
    let mut values = vec![0.0];
    let mut n = 64;
    loop {
        incs.extend(&mut values, n);
        let path = GridPath::new(h, values);
        match pre_post_split(&path, c) {
            Ok(_) => return Ok(path),
            Err(Error::WindowTooSmall(_)) if path.len() < max_points => {}
            Err(Error::WindowTooSmall(m)) => return Err(Error::Aborted(m)),
            Err(e) => return Err(e),
        }
        values = path.values;
        n = values.len();
    }
}

/// Conditioned path stopped at its first passage above `c`.
fn up_until_passage(spec: &StableLawSpec, h: f64, c: f64, max_points: usize, s: u64) -> Result<GridPath> {
    let mut up = ConditionedSampler::new(spec, LawTag::Up, Construction::TanakaR, h, s)?.with_max_points(max_points);
    let k = up.first_passage(c)?;
    Ok(up.into_path().path.truncated(k + 1))
}

/// Dual conditioned path stopped at the last zero of its gap to the future
/// infimum before that gap reaches `c`.
fn up_hat_until_hat_m(spec: &StableLawSpec, h: f64, c: f64, max_points: usize, s: u64) -> Result<GridPath> {
    let mut up = ConditionedSampler::new(spec, LawTag::UpHat, Construction::TanakaR, h, s)?.with_max_points(max_points);
    let mut n = 64;
    loop {
        up.ensure_len(n)?;
        let path = up.snapshot().path;
        match hat_m(&path, c) {
            Ok(m) => return Ok(path.truncated(m + 1)),
            Err(Error::WindowTooSmall(_)) => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

struct SlopeRun {
    post: Batch<(Vec<f64>, Vec<f64>)>,
    up: Batch<(Vec<f64>, f64)>,
    up_hat: Batch<Vec<f64>>,
    calibration: Batch<f64>,
}

fn slope_run(cfg: &RunConfig, spec: &StableLawSpec, c: f64, label: &str) -> Result<SlopeRun> {
    let e = &cfg.experiment;
    let h = cfg.grid.step_h;
    let probes = &e.probes;
    let mp = e.max_points;
    let post = replicate(e.n_replications, |rep| {
        let path = one_sided_until(spec, h, c, mp, stream(cfg, label, c, rep, "env"))?;
        let (pre, post) = pre_post_split(&path, c)?;
        Ok((
            probes.iter().map(|&t| pre.at_stopped(t)).collect(),
            probes.iter().map(|&t| post.at_stopped(t)).collect(),
        ))
    })?;
    let up = replicate(e.n_replications, |rep| {
        let p = up_until_passage(spec, h, c, mp, stream(cfg, label, c, rep, "up"))?;
        Ok((
            probes.iter().map(|&t| p.at_stopped(t)).collect(),
            passage_value_at(&p, c)?,
        ))
    })?;
    let calibration = replicate(e.n_replications, |rep| {
        let p = up_until_passage(spec, h, c, mp, stream(cfg, label, c, rep, "calibration"))?;
        passage_value_at(&p, c)
    })?;
    let up_hat = replicate(e.n_replications, |rep| {
        let p = up_hat_until_hat_m(spec, h, c, mp, stream(cfg, label, c, rep, "up_hat"))?;
        Ok(probes.iter().map(|&t| p.at_stopped(t)).collect())
    })?;
    Ok(SlopeRun {
        post,
        up,
        up_hat,
        calibration,
    })
}

fn column<T>(b: &Batch<T>, f: impl Fn(&T) -> f64) -> Vec<f64> {
    b.values().map(f).collect()
}

/// Post-infimum slope of the one-sided valley at height `c = c_values[0]`
/// against the conditioned process stopped at its passage above `c`:
/// unweighted for the spectrally negative law, reweighted by the density
/// `x^{-alpha rho} / Z` for the configured law. Also reports the slope
/// correlation and, as a diagnostic, the pre-infimum slope against the dual
/// conditioned process stopped at `hat m_c`.
pub fn valley_law(cfg: &RunConfig) -> Result<Outcome> {
    valley_law_with(cfg, F1Exponent::AlphaRho)
}

pub fn valley_law_with(cfg: &RunConfig, exponent: F1Exponent) -> Result<Outcome> {
    let id = cfg.experiment.id.as_str();
    let id = if id == "post-law" || id == "independence" {
        id
    } else {
        "valley-law"
    };
    let mut rec = Recorder::new(id, cfg);
    let e = &cfg.experiment;
    let c = *e
        .c_values
        .first()
        .ok_or_else(|| Error::Parameter("valley-law needs one c value".into()))?;
    if e.probes.is_empty() || e.probes.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Parameter("valley-law needs positive probe times".into()));
    }
    let level = e.significance / e.probes.len() as f64;
    let base = cfg.spec();
    let negative = StableLawSpec { beta: -1.0, ..base };
    let mut runs = vec![("spectrally_negative", negative)];
    if base.beta != -1.0 && !base.is_gaussian() {
        runs.push(("weighted", base));
    }
    for (label, spec) in runs {
        let run = slope_run(cfg, &spec, c, label)?;
        for b in [
            run.post.attempted,
            run.up.attempted,
            run.up_hat.attempted,
            run.calibration.attempted,
        ] {
            rec.n_replications += b;
        }
        rec.n_failures += run.post.failed + run.up.failed + run.up_hat.failed + run.calibration.failed;
        let weights: Vec<f64> = if spec.beta == -1.0 || spec.is_gaussian() {
            vec![1.0; run.up.ok.len()]
        } else {
            let rho = rho_estimate(&spec, 100_000)?;
            let rho = match exponent {
                F1Exponent::AlphaRho => rho,
                F1Exponent::AlphaOneMinusRho => 1.0 - rho,
            };
            let cal = F1Calibration::new(&spec, rho, &column(&run.calibration, |x| *x))?;
            rec.stat(format!("{label}_rho"), rho);
            rec.stat(format!("{label}_z_hat"), cal.z_hat);
            let w = column(&run.up, |(_, x)| cal.weight_of(*x));
            rec.stat(format!("{label}_weight_mean"), crate::stats::mean(&w));
            w
        };
        for (rep, (pre, post)) in &run.post.ok {
            rec.observe(c, *rep, &format!("{label}_pre_t{}", e.probes[0]), pre[0]);
            rec.observe(c, *rep, &format!("{label}_post_t{}", e.probes[0]), post[0]);
        }
        for ((rep, (v, x)), w) in run.up.ok.iter().zip(&weights) {
            rec.observe(c, *rep, &format!("{label}_up_t{}", e.probes[0]), v[0]);
            rec.observe(c, *rep, &format!("{label}_up_passage"), *x);
            rec.observe(c, *rep, &format!("{label}_up_weight"), *w);
        }
        for (k, t) in e.probes.iter().enumerate() {
            let post = column(&run.post, |(_, p)| p[k]);
            let up = column(&run.up, |(v, _)| v[k]);
            let (d, p) = if weights.iter().all(|&w| w == 1.0) {
                ks_two_sample(&up, &post)?
            } else {
                ks_weighted(&up, &weights, &post)?
            };
            rec.stat(format!("{label}_post_ks_distance_t{t}"), d);
            rec.stat(format!("{label}_post_ks_p_t{t}"), p);
            if id != "independence" {
                rec.check(format!("{label}_post_ks_p_t{t}_above_{level}"), p > level);
            }
            let pre = column(&run.post, |(p, _)| p[k]);
            let hat = column(&run.up_hat, |v| v[k]);
            let (d, p) = ks_two_sample(&hat, &pre)?;
            rec.stat(format!("{label}_pre_ks_distance_t{t}"), d);
            rec.stat(format!("{label}_pre_ks_p_t{t}"), p);
        }
        let k = e.probes.len() - 1;
        let r = correlation(&column(&run.post, |(p, _)| p[k]), &column(&run.post, |(_, p)| p[k]));
        let bound = 3.0 / (run.post.ok.len() as f64).sqrt();
        rec.stat(format!("{label}_slope_correlation"), r);
        rec.stat(format!("{label}_correlation_bound"), bound);
        if id != "post-law" {
            rec.check(format!("{label}_abs_correlation_below_3_over_sqrt_n"), r.abs() < bound);
        }
    }
    Ok(rec.finish())
}

/// Increment of the conditioned path over `[sigma_eps, sigma_eps + t]`
/// against a fresh conditioned path at `t`.
pub fn regeneration(cfg: &RunConfig) -> Result<Outcome> {
    let mut rec = Recorder::new("regeneration", cfg);
    let e = &cfg.experiment;
    let spec = cfg.spec();
    let h = cfg.grid.step_h;
    let t = e.horizon_t;
    let nt = (t / h).round() as usize;
    let after = replicate(e.n_replications, |rep| {
        let mut s = ConditionedSampler::new(
            &spec,
            LawTag::Up,
            Construction::TanakaR,
            h,
            stream(cfg, "regeneration", 0.0, rep, "path"),
        )?
        .with_max_points(e.max_points);
        let mut n = 64;
        let sigma = loop {
            s.ensure_len(n)?;
            match sigma_epsilon(&s.snapshot(), e.eps) {
                Ok(k) => break k,
                Err(Error::WindowTooSmall(_)) => n *= 2,
                Err(err) => return Err(err),
            }
        };
        s.ensure_len(sigma + nt + 1)?;
        Ok((sigma as f64 * h, s.values()[sigma + nt] - s.values()[sigma]))
    })?;
    let fresh = replicate(e.n_replications, |rep| {
        let mut s = ConditionedSampler::new(
            &spec,
            LawTag::Up,
            Construction::TanakaR,
            h,
            stream(cfg, "regeneration", 0.0, rep, "fresh"),
        )?
        .with_max_points(e.max_points);
        s.ensure_len(nt + 1)?;
        Ok(s.values()[nt])
    })?;
    rec.count(&after);
    rec.count(&fresh);
    for (rep, (sigma, y)) in &after.ok {
        rec.observe(t, *rep, "sigma_eps", *sigma);
        rec.observe(t, *rep, "increment_after_sigma", *y);
    }
    for (rep, y) in &fresh.ok {
        rec.observe(t, *rep, "fresh", *y);
    }
    let (d, p) = ks_two_sample(&column(&after, |v| v.1), &column(&fresh, |v| *v))?;
    rec.stat("ks_distance", d);
    rec.stat("ks_p", p);
    rec.check(format!("ks_p_above_{}", e.significance), p > e.significance);
    Ok(rec.finish())
}
