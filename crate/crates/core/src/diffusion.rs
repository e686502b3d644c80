//! The diffusion with generator `(1/2) e^V d/dx (e^{-V} d/dx)` in a frozen
//! environment, simulated by two engines.
//!
//! * `Chain`: nearest-neighbour jump process on the environment grid with
//!   conductances `exp(-(V_i + V_{i+1}) / 2) / h` and site weights
//!   `h exp(-V_i)`. Only differences of `V` enter the rates.
//! * `Brox`: Brownian motion read through the scale function and the time
//!   change. The Brownian step is chosen cell by cell so that each step adds
//!   exactly `dt` of diffusion time.
//!
//! Both engines start at the origin and grow sampled environments when the
//! path reaches the edge of the window.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::path::{exp_integral, TwoSidedPath};
use crate::rng::{exp1, stream_rng};
use crate::stable::EnvSampler;

/// An environment that may grow on demand.
#[derive(Debug, Clone)]
pub struct Environment {
    pub path: TwoSidedPath,
    sampler: Option<EnvSampler>,
    max_points: usize,
    pub extensions: usize,
}

impl Environment {
    /// A fixed window; leaving it is an error.
    pub fn fixed(path: TwoSidedPath) -> Self {
        Self {
            path,
            sampler: None,
            max_points: usize::MAX,
            extensions: 0,
        }
    }

    /// A window backed by the sampler that produced it.
    pub fn sampled(path: TwoSidedPath, sampler: EnvSampler, max_points: usize) -> Self {
        Self {
            path,
            sampler: Some(sampler),
            max_points,
            extensions: 0,
        }
    }

    /// Makes sure grid indices `j - 1 ..= j + 1` exist.
    fn cover(&mut self, j: i64) -> Result<()> {
        if self.path.contains(j - 1) && self.path.contains(j + 1) {
            return Ok(());
        }
        let Some(s) = self.sampler.as_mut() else {
            return Err(Error::WindowTooSmall(format!(
                "diffusion left the fixed window at grid index {j}"
            )));
        };
        let side_len = if j > 0 {
            self.path.plus.len()
        } else {
            self.path.minus.len()
        };
        let target = (side_len * 2).max(j.unsigned_abs() as usize + 2);
        if target > self.max_points {
            return Err(Error::Aborted(format!(
                "environment window exceeded {} points",
                self.max_points
            )));
        }
        let edge = if j > 0 { target as i64 } else { -(target as i64) };
        s.grow_to_index(&mut self.path, edge);
        self.extensions += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Engine {
    Brox,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRun {
    pub engine: Engine,
    pub horizon_t: f64,
    pub steps_or_jumps: u64,
    pub window_extensions: usize,
    pub rng_stream: u64,
    pub bin_h: f64,
    /// Bin index of `occupation[0]`; bin `i` covers `[i bin_h, (i + 1) bin_h)`
    /// for BROX and the site `i h` for CHAIN.
    pub first_bin: i64,
    pub occupation: Vec<f64>,
    pub final_position: f64,
}

impl DiffusionRun {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "engine": self.engine,
            "t": self.horizon_t,
            "steps_or_jumps": self.steps_or_jumps,
            "window_extensions": self.window_extensions,
        })
    }
}

/// Occupation times binned by position, extended in both directions on demand.
#[derive(Debug, Clone)]
struct Occupation {
    first: i64,
    cells: Vec<f64>,
}

impl Occupation {
    fn new(at: i64) -> Self {
        Self {
            first: at,
            cells: vec![0.0],
        }
    }

    fn add(&mut self, bin: i64, dt: f64) {
        if bin < self.first {
            let grow = (self.first - bin) as usize;
            let mut v = vec![0.0; grow + self.cells.len()];
            v[grow..].copy_from_slice(&self.cells);
            self.cells = v;
            self.first = bin;
        } else if bin >= self.first + self.cells.len() as i64 {
            self.cells.resize((bin - self.first + 1) as usize, 0.0);
        }
        self.cells[(bin - self.first) as usize] += dt;
    }
}

/// Knobs of the CHAIN engine. `rate_constant` is the factor in front of
/// `exp((V_i - V_j) / 2) / h^2`; the diffusion needs 1/2, other values exist
/// for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub rate_constant: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { rate_constant: 0.5 }
    }
}

pub fn chain_simulate(env: &mut Environment, horizon_t: f64, stream: u64) -> Result<DiffusionRun> {
    chain_simulate_with(env, horizon_t, stream, ChainOptions::default())
}

struct ChainTables {
    offset: i64,
    /// `1 / (r_left + r_right)`, zero when a rate overflows.
    mean_hold: Vec<f64>,
    p_right: Vec<f64>,
}

impl ChainTables {
    fn build(path: &TwoSidedPath, c0: f64) -> Self {
        let full = path.to_full();
        let v = &full.values;
        let n = v.len();
        let mut mean_hold = vec![f64::NAN; n];
        let mut p_right = vec![f64::NAN; n];
        let log_c0 = c0.ln();
        for k in 1..n - 1 {
            let lr = (v[k] - v[k + 1]) / 2.0;
            let ll = (v[k] - v[k - 1]) / 2.0;
            let hi = lr.max(ll);
            let log_total = log_c0 + hi + ((lr - hi).exp() + (ll - hi).exp()).ln();
            mean_hold[k] = (-log_total).exp();
            p_right[k] = 1.0 / (1.0 + (ll - lr).exp());
        }
        Self {
            offset: full.origin_index as i64,
            mean_hold,
            p_right,
        }
    }
}

pub fn chain_simulate_with(
    env: &mut Environment,
    horizon_t: f64,
    stream: u64,
    opts: ChainOptions,
) -> Result<DiffusionRun> {
    Ok(chain_checkpoints(env, &[horizon_t], stream, opts)?
        .pop()
        .expect("one checkpoint"))
}

/// One chain trajectory observed at several increasing horizons. The last
/// run equals `chain_simulate_with` at the last horizon with the same stream.
pub fn chain_checkpoints(
    env: &mut Environment,
    horizons: &[f64],
    stream: u64,
    opts: ChainOptions,
) -> Result<Vec<DiffusionRun>> {
    if horizons.is_empty() || !(horizons[0] > 0.0) || horizons.windows(2).any(|w| !(w[0] < w[1])) {
        return param("horizons must be positive and increasing");
    }
    let h = env.path.step_h();
    let c0 = opts.rate_constant / (h * h);
    let mut rng = stream_rng(0, stream);
    let mut tables = ChainTables::build(&env.path, c0);
    let mut occ = Occupation::new(0);
    let mut j: i64 = 0;
    let mut now = 0.0;
    let mut jumps = 0u64;
    let ext0 = env.extensions;
    let mut runs = Vec::with_capacity(horizons.len());
    loop {
        let mut k = (j + tables.offset) as usize;
        if k == 0 || k + 1 >= tables.mean_hold.len() {
            env.cover(j)?;
            tables = ChainTables::build(&env.path, c0);
            k = (j + tables.offset) as usize;
        }
        let end = now + exp1(&mut rng) * tables.mean_hold[k];
        while let Some(&t) = horizons.get(runs.len()).filter(|&&t| t <= end) {
            occ.add(j, t - now);
            now = t;
            runs.push(DiffusionRun {
                engine: Engine::Chain,
                horizon_t: t,
                steps_or_jumps: jumps,
                window_extensions: env.extensions - ext0,
                rng_stream: stream,
                bin_h: h,
                first_bin: occ.first,
                occupation: occ.cells.clone(),
                final_position: j as f64 * h,
            });
        }
        if runs.len() == horizons.len() {
            return Ok(runs);
        }
        occ.add(j, end - now);
        now = end;
        j += if rng.random::<f64>() < tables.p_right[k] { 1 } else { -1 };
        jumps += 1;
    }
}

/// `S(x) = int_0^x e^V` as `(sign, log |S|)`; `log |S| = -inf` at the origin.
pub fn scale_function(env: &TwoSidedPath, x: f64) -> Result<(f64, f64)> {
    if x >= 0.0 {
        Ok((1.0, exp_integral(env, 0.0, x, 1.0)?))
    } else {
        Ok((-1.0, exp_integral(env, x, 0.0, 1.0)?))
    }
}

/// Scale function on the grid, left Riemann sums, plain floating point.
/// Cells far above the start may overflow to infinite width; they act as
/// walls the Brownian motion cannot cross in finite time.
struct ScaleTable {
    offset: i64,
    h: f64,
    v: Vec<f64>,
    s: Vec<f64>,
}

impl ScaleTable {
    fn build(path: &TwoSidedPath) -> Result<Self> {
        let full = path.to_full();
        let h = full.step_h;
        let o = full.origin_index;
        let v = full.values;
        let mut s = vec![0.0; v.len()];
        for k in o + 1..v.len() {
            s[k] = s[k - 1] + h * v[k - 1].exp();
        }
        for k in (0..o).rev() {
            s[k] = s[k + 1] - h * v[k].exp();
        }
        Ok(Self {
            offset: o as i64,
            h,
            v,
            s,
        })
    }
}

/// Brownian motion through the scale function and time change. Each step
/// uses the Brownian time `dt * exp(2 V)` of the current cell, which adds
/// `dt` to the diffusion clock; occupation goes to bins of width `bin_h`.
pub fn brox_simulate(env: &mut Environment, horizon_t: f64, dt: f64, bin_h: f64, stream: u64) -> Result<DiffusionRun> {
    if !(horizon_t > 0.0 && dt > 0.0 && bin_h > 0.0) {
        return param("horizon, dt and bin_h must be positive");
    }
    let mut rng = stream_rng(0, stream);
    let mut tab = ScaleTable::build(&env.path)?;
    let h = tab.h;
    let mut occ = Occupation::new(0);
    let ext0 = env.extensions;
    let mut j: i64 = 0;
    let mut y = 0.0;
    let mut x = 0.0;
    let mut left = horizon_t;
    let mut steps = 0u64;
    while left > 0.0 {
        let take = dt.min(left);
        occ.add((x / bin_h).floor() as i64, take);
        left -= take;
        steps += 1;
        if left <= 0.0 {
            break;
        }
        let k = (j + tab.offset) as usize;
        let z: f64 = rng.sample(StandardNormal);
        y += (dt).sqrt() * tab.v[k].exp() * z;
        loop {
            let k = (j + tab.offset) as usize;
            if k + 1 >= tab.s.len() || k == 0 {
                env.cover(j)?;
                tab = ScaleTable::build(&env.path)?;
                continue;
            }
            if y >= tab.s[k + 1] {
                j += 1;
            } else if y < tab.s[k] {
                j -= 1;
            } else {
                break;
            }
        }
        let k = (j + tab.offset) as usize;
        x = j as f64 * h + (y - tab.s[k]) * (-tab.v[k]).exp();
        if !x.is_finite() {
            return Err(Error::Aborted(
                "BROX position left floating-point range; use the CHAIN engine".into(),
            ));
        }
    }
    Ok(DiffusionRun {
        engine: Engine::Brox,
        horizon_t,
        steps_or_jumps: steps,
        window_extensions: env.extensions - ext0,
        rng_stream: stream,
        bin_h,
        first_bin: occ.first,
        occupation: occ.cells,
        final_position: x,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    pub step_h: f64,
    /// Grid index of `values[0]`.
    pub first_index: i64,
    pub values: Vec<f64>,
    pub horizon_t: f64,
}

impl LocalTimeProfile {
    pub fn x(&self, k: usize) -> f64 {
        (self.first_index + k as i64) as f64 * self.step_h
    }

    /// Local time at grid index `j`, zero outside the visited range.
    pub fn at(&self, j: i64) -> f64 {
        let k = j - self.first_index;
        if k < 0 || k as usize >= self.values.len() {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    pub fn l_star(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.step_h * self.values.iter().sum::<f64>()
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,local_time")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{:?},{:?}", self.x(k), v)?;
        }
        Ok(())
    }
}

/// Occupation density: time spent in each bin divided by the bin width.
pub fn local_time_profile(run: &DiffusionRun) -> LocalTimeProfile {
    LocalTimeProfile {
        step_h: run.bin_h,
        first_index: run.first_bin,
        values: run.occupation.iter().map(|o| o / run.bin_h).collect(),
        horizon_t: run.horizon_t,
    }
}

/// Leftmost grid index where the profile is maximal.
pub fn favorite_point(profile: &LocalTimeProfile) -> i64 {
    let mut best = 0;
    for (k, &v) in profile.values.iter().enumerate() {
        if v > profile.values[best] {
            best = k;
        }
    }
    profile.first_index + best as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::GridPath;
    use crate::stable::StableLawSpec;
    use crate::stats::{ks_one_sample, ks_two_sample, normal_cdf};

    fn flat(h: f64, n: usize) -> TwoSidedPath {
        TwoSidedPath::from_fn(h, n, n, |_| 0.0)
    }

    #[test]
    fn scale_function_closed_forms() {
        let zero = flat(0.25, 20);
        let (s, l) = scale_function(&zero, 2.0).unwrap();
        assert_eq!(s, 1.0);
        assert!((l - 2f64.ln()).abs() < 1e-14);
        let (s, l) = scale_function(&zero, -1.0).unwrap();
        assert_eq!(s, -1.0);
        assert!(l.abs() < 1e-14);
        assert_eq!(scale_function(&zero, 0.0).unwrap().1, f64::NEG_INFINITY);
        let a = 3.0;
        let c = TwoSidedPath::from_fn(0.25, 20, 20, |_| a);
        let (_, l) = scale_function(&c, 1.5).unwrap();
        assert!((l - (a + 1.5f64.ln())).abs() < 1e-13);
        // Five segments of width 1 with values 0, 1, -1, 2, 0.5 (h = 0.5).
        let seg = [0.0, 1.0, -1.0, 2.0, 0.5];
        let values: Vec<f64> = (0..=10).map(|i| seg[(i / 2).min(4)]).collect();
        let env = TwoSidedPath {
            plus: GridPath::new(0.5, values),
            minus: GridPath::new(0.5, vec![0.0, 0.0]),
        };
        let want: f64 = seg.iter().map(|v| v.exp()).sum();
        let (_, l) = scale_function(&env, 5.0).unwrap();
        assert!((l.exp() - want).abs() < 1e-12);
        assert!(scale_function(&env, 6.0).is_err());
    }

    #[test]
    fn chain_in_flat_environment_is_brownian() {
        // Atoms of the lattice law must stay well below the KS resolution.
        let n = 10_000;
        let h = 0.01;
        let xs: Vec<f64> = (0..n)
            .map(|r| {
                let mut env = Environment::fixed(flat(h, 2000));
                chain_simulate(&mut env, 1.0, r).unwrap().final_position
            })
            .collect();
        let (_, p) = ks_one_sample(&xs, normal_cdf).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn wrong_rate_constant_is_detected() {
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|r| {
                let mut env = Environment::fixed(flat(0.1, 200));
                chain_simulate_with(&mut env, 1.0, r, ChainOptions { rate_constant: 1.0 })
                    .unwrap()
                    .final_position
            })
            .collect();
        let (_, p) = ks_one_sample(&xs, normal_cdf).unwrap();
        assert!(p < 0.01);
    }

    #[test]
    fn brox_in_flat_environment_is_brownian() {
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|r| {
                let mut env = Environment::fixed(flat(0.1, 200));
                brox_simulate(&mut env, 1.0, 0.0025, 0.1, r).unwrap().final_position
            })
            .collect();
        let (_, p) = ks_one_sample(&xs, normal_cdf).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn occupation_identity_and_zero_outside() {
        let spec = StableLawSpec::new(1.5, 0.0, 1.0);
        for r in 0..10 {
            let mut s = EnvSampler::new(&spec, 0.1, r).unwrap();
            let path = s.sample(50);
            let mut env = Environment::sampled(path, s, 1 << 20);
            let run = chain_simulate(&mut env, 200.0, r).unwrap();
            let prof = local_time_profile(&run);
            assert!((prof.total() - 200.0).abs() < 1e-9 * 200.0);
            assert!(prof.values.iter().all(|&v| v >= 0.0));
            assert_eq!(prof.at(prof.first_index - 1), 0.0);
            let run = brox_simulate(&mut env, 5.0, 0.0025, 0.1, r).unwrap();
            let prof = local_time_profile(&run);
            assert!((prof.total() - 5.0).abs() < 1e-9 * 5.0);
        }
    }

    #[test]
    fn flat_profile_is_symmetric() {
        let n = 1000;
        let h = 0.1;
        let mut right = Vec::new();
        let mut left = Vec::new();
        for r in 0..n {
            let mut env = Environment::fixed(flat(h, 200));
            let prof = local_time_profile(&chain_simulate(&mut env, 1.0, r).unwrap());
            assert!((prof.total() - 1.0).abs() < 1e-12);
            right.push(prof.at(5));
            left.push(prof.at(-5));
        }
        let (_, p) = ks_two_sample(&right, &left).unwrap();
        assert!(p > 0.01);
    }

    #[test]
    fn chain_stationary_law_in_a_well() {
        // Five interior sites between steep walls.
        let v = [40.0, 30.0, 1.0, 0.3, 0.0, 0.6, 1.5, 30.0, 40.0];
        let env = TwoSidedPath::from_full(&GridPath {
            origin_index: 4,
            step_h: 1.0,
            values: v.to_vec(),
        });
        let mut e = Environment::fixed(env);
        let run = chain_simulate(&mut e, 1e5, 3).unwrap();
        let prof = local_time_profile(&run);
        let z: f64 = v[2..7].iter().map(|x| (-x).exp()).sum();
        let mut chi2 = 0.0;
        for j in -2..=2 {
            let want = (-v[(j + 4) as usize]).exp() / z;
            let got = prof.at(j) / prof.horizon_t;
            chi2 += (got - want).powi(2) / want;
            assert!((got - want).abs() < 0.02, "site {j}: {got} vs {want}");
        }
        assert!(chi2 < 0.01);
    }

    #[test]
    fn checkpoints_match_single_runs() {
        let spec = StableLawSpec::brownian();
        let mut sampler = EnvSampler::new(&spec, 0.1, 11).unwrap();
        let path = sampler.sample(50);
        let mut e1 = Environment::sampled(path.clone(), sampler.clone(), 1 << 20);
        let runs = chain_checkpoints(&mut e1, &[1.0, 7.5, 40.0], 5, ChainOptions::default()).unwrap();
        let mut e2 = Environment::sampled(path, sampler, 1 << 20);
        let last = chain_simulate(&mut e2, 40.0, 5).unwrap();
        assert_eq!(runs[2], last);
        for r in &runs {
            let total: f64 = r.occupation.iter().sum();
            assert!((total - r.horizon_t).abs() < 1e-9 * r.horizon_t);
        }
        assert!(runs[0].steps_or_jumps <= runs[1].steps_or_jumps);
        assert!(chain_checkpoints(&mut e2, &[2.0, 1.0], 5, ChainOptions::default()).is_err());
    }

    #[test]
    fn profile_approaches_the_well_density() {
        let h = 0.25;
        let v: Vec<f64> = (-6..=6)
            .map(|i: i32| {
                if i.abs() >= 5 {
                    30.0
                } else {
                    (i as f64 * h).powi(2) * 4.0
                }
            })
            .collect();
        let env = TwoSidedPath::from_full(&GridPath {
            origin_index: 6,
            step_h: h,
            values: v.clone(),
        });
        let mut e = Environment::fixed(env);
        let run = chain_simulate(&mut e, 1e3, 4).unwrap();
        let prof = local_time_profile(&run);
        let z: f64 = v[2..11].iter().map(|x| h * (-x).exp()).sum();
        for j in -4..=4 {
            let want = (-v[(j + 6) as usize]).exp() / z;
            assert!((prof.at(j) / 1e3 - want).abs() < 0.05, "site {j}");
        }
        assert_eq!(favorite_point(&prof), 0);
    }

    #[test]
    fn favorite_point_cases() {
        let p = LocalTimeProfile {
            step_h: 0.5,
            first_index: -2,
            values: vec![0.1, 3.0, 0.2, 3.0],
            horizon_t: 1.0,
        };
        assert_eq!(favorite_point(&p), -1);
        let scaled = LocalTimeProfile {
            values: p.values.iter().map(|v| v * 7.5).collect(),
            ..p.clone()
        };
        assert_eq!(favorite_point(&scaled), favorite_point(&p));
        let single = LocalTimeProfile {
            values: vec![0.0, 1.0, 5.0, 2.0],
            ..p
        };
        assert_eq!(favorite_point(&single), 0);
        for seed in 0..20u64 {
            let mut r = stream_rng(seed, 1);
            let vals: Vec<f64> = (0..50).map(|_| r.random::<f64>()).collect();
            let prof = LocalTimeProfile {
                step_h: 0.1,
                first_index: 3,
                values: vals.clone(),
                horizon_t: 1.0,
            };
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let k = vals.iter().position(|&v| v == max).unwrap();
            assert_eq!(favorite_point(&prof), 3 + k as i64);
        }
    }

    #[test]
    fn engines_agree_on_a_small_environment() {
        // Constant environment a = 0.7: both engines against each other.
        let n = 2000;
        let a = 0.7;
        let chain: Vec<f64> = (0..n)
            .map(|r| {
                let mut e = Environment::fixed(TwoSidedPath::from_fn(0.1, 300, 300, |_| a));
                chain_simulate(&mut e, 2.0, r).unwrap().final_position
            })
            .collect();
        let brox: Vec<f64> = (0..n)
            .map(|r| {
                let mut e = Environment::fixed(TwoSidedPath::from_fn(0.1, 300, 300, |_| a));
                brox_simulate(&mut e, 2.0, 0.0025, 0.1, 1 << 30 | r)
                    .unwrap()
                    .final_position
            })
            .collect();
        let (_, p) = ks_two_sample(&chain, &brox).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn leaving_a_fixed_window_is_an_error() {
        let mut e = Environment::fixed(flat(0.1, 3));
        assert!(matches!(chain_simulate(&mut e, 10.0, 1), Err(Error::WindowTooSmall(_))));
        assert!(chain_simulate(&mut Environment::fixed(flat(0.1, 3)), 0.0, 1).is_err());
    }
}
