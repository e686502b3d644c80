//! Strictly stable environments sampled on a grid.
//!
//! The increment over a step `h` has characteristic function
//! `exp(-h psi(lambda))` with
//! `psi(lambda) = k |lambda|^alpha (1 - i beta sgn(lambda) tan(pi alpha / 2))`
//! for `alpha` in `(1, 2]` and `psi(lambda) = k |lambda| + i d lambda` for
//! `alpha = 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::path::{GridPath, TwoSidedPath};
use crate::rng::{derive_stream, exp1, open_unit, stream_rng, tag, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLawSpec {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub scale_k: f64,
    #[serde(default)]
    pub drift_d: f64,
    #[serde(default)]
    pub seed: u64,
}

impl StableLawSpec {
    pub fn new(alpha: f64, beta: f64, scale_k: f64) -> Self {
        Self {
            alpha,
            beta,
            scale_k,
            drift_d: 0.0,
            seed: 0,
        }
    }

    /// Standard Brownian environment, `psi(lambda) = lambda^2 / 2`.
    pub fn brownian() -> Self {
        Self::new(2.0, 0.0, 0.5)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0..=2.0).contains(&self.alpha) {
            return param(format!("alpha = {} outside [1, 2]", self.alpha));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return param(format!("beta = {} outside [-1, 1]", self.beta));
        }
        if !(self.scale_k > 0.0 && self.scale_k.is_finite()) {
            return param(format!("scale_k = {} must be positive", self.scale_k));
        }
        if !self.drift_d.is_finite() {
            return param("drift_d must be finite");
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    /// Law of `-V`.
    pub fn dual(&self) -> Self {
        Self {
            beta: -self.beta,
            drift_d: -self.drift_d,
            ..*self
        }
    }

    /// `psi(lambda)` as `(re, im)`.
    pub fn psi(&self, lambda: f64) -> (f64, f64) {
        let a = lambda.abs();
        if self.alpha == 1.0 {
            (self.scale_k * a, self.drift_d * lambda)
        } else {
            let re = self.scale_k * a.powf(self.alpha);
            let skew = if self.is_gaussian() {
                0.0
            } else {
                self.beta * (PI * self.alpha / 2.0).tan()
            };
            (re, -re * skew * lambda.signum())
        }
    }

    /// `exp(-h psi(lambda))` as `(re, im)`.
    pub fn charfn(&self, lambda: f64, h: f64) -> (f64, f64) {
        let (re, im) = self.psi(lambda);
        let m = (-h * re).exp();
        (m * (h * im).cos(), -m * (h * im).sin())
    }

    /// One increment over a step `h`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        let alpha = self.alpha;
        if alpha == 2.0 {
            let z: f64 = rng.sample(StandardNormal);
            return (2.0 * h * self.scale_k).sqrt() * z;
        }
        let v = PI * (open_unit(rng) - 0.5);
        let w = exp1(rng);
        if alpha == 1.0 {
            // Cauchy with scale h k, located so that the phase is -h d lambda.
            return h * self.scale_k * v.tan() - h * self.drift_d;
        }
        let gamma = (h * self.scale_k).powf(1.0 / alpha);
        let t = self.beta * (PI * alpha / 2.0).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
            * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
        gamma * x
    }
}

/// Endless supply of increments from one stream.
#[derive(Debug, Clone)]
pub struct IncrementStream {
    pub spec: StableLawSpec,
    pub step_h: f64,
    rng: StreamRng,
}

impl IncrementStream {
    pub fn new(spec: StableLawSpec, step_h: f64, stream_id: u64) -> Result<Self> {
        spec.validate()?;
        if !(step_h > 0.0) {
            return param("step_h must be positive");
        }
        Ok(Self {
            spec,
            step_h,
            rng: stream_rng(spec.seed, stream_id),
        })
    }

    pub fn next_increment(&mut self) -> f64 {
        self.spec.sample_increment(self.step_h, &mut self.rng)
    }

    /// Appends `n` steps to `values`, continuing from its last entry.
    pub fn extend(&mut self, values: &mut Vec<f64>, n: usize) {
        let mut v = values.last().copied().unwrap_or(0.0);
        if values.is_empty() {
            values.push(0.0);
        }
        values.reserve(n);
        for _ in 0..n {
            v += self.next_increment();
            values.push(v);
        }
    }
}

pub fn sample_one_sided(spec: &StableLawSpec, n_steps: usize, step_h: f64, stream_id: u64) -> Result<GridPath> {
    if n_steps == 0 {
        return param("n_steps must be at least 1");
    }
    let mut s = IncrementStream::new(*spec, step_h, stream_id)?;
    let mut values = Vec::with_capacity(n_steps + 1);
    s.extend(&mut values, n_steps);
    Ok(GridPath::new(step_h, values))
}

/// Source of a two-sided environment that can be grown on demand. The right
/// side follows `spec`, the left side follows the dual law, and each side
/// draws from its own stream, so growing the window never changes values
/// already handed out.
#[derive(Debug, Clone)]
pub struct EnvSampler {
    plus: IncrementStream,
    minus: IncrementStream,
}

impl EnvSampler {
    pub fn new(spec: &StableLawSpec, step_h: f64, stream: u64) -> Result<Self> {
        Ok(Self {
            plus: IncrementStream::new(*spec, step_h, derive_stream(&[stream, tag("plus")]))?,
            minus: IncrementStream::new(spec.dual(), step_h, derive_stream(&[stream, tag("minus")]))?,
        })
    }

    pub fn sample(&mut self, n_steps_each: usize) -> TwoSidedPath {
        let h = self.plus.step_h;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        self.plus.extend(&mut plus, n_steps_each);
        self.minus.extend(&mut minus, n_steps_each);
        TwoSidedPath {
            plus: GridPath::new(h, plus),
            minus: GridPath::new(h, minus),
        }
    }

    /// Grows each side of `env` to at least `n_steps_each` steps.
    pub fn grow(&mut self, env: &mut TwoSidedPath, n_steps_each: usize) {
        let np = (n_steps_each + 1).saturating_sub(env.plus.len());
        let nm = (n_steps_each + 1).saturating_sub(env.minus.len());
        self.plus.extend(&mut env.plus.values, np);
        self.minus.extend(&mut env.minus.values, nm);
    }

    /// Grows only the side that contains grid index `j`.
    pub fn grow_to_index(&mut self, env: &mut TwoSidedPath, j: i64) {
        if j > 0 {
            let n = (j as usize + 1).saturating_sub(env.plus.len());
            self.plus.extend(&mut env.plus.values, n);
        } else if j < 0 {
            let n = ((-j) as usize + 1).saturating_sub(env.minus.len());
            self.minus.extend(&mut env.minus.values, n);
        }
    }
}

pub fn sample_two_sided(spec: &StableLawSpec, n_steps_each: usize, step_h: f64) -> Result<TwoSidedPath> {
    if n_steps_each == 0 {
        return param("n_steps_each must be at least 1");
    }
    Ok(EnvSampler::new(spec, step_h, 0)?.sample(n_steps_each))
}

/// Modulus of the empirical characteristic function against `|exp(-h psi)|`
/// at each `lambda`.
pub fn charfn_check(increments: &[f64], spec: &StableLawSpec, step_h: f64, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if increments.is_empty() {
        return param("no increments");
    }
    spec.validate()?;
    Ok(lambdas
        .iter()
        .map(|&l| {
            let (re, im) = empirical_charfn(increments, l);
            let (tr, ti) = spec.charfn(l, step_h);
            (re.hypot(im), tr.hypot(ti))
        })
        .collect())
}

/// `(1/N) sum exp(i lambda x_j)` as `(re, im)`.
pub fn empirical_charfn(xs: &[f64], lambda: f64) -> (f64, f64) {
    let n = xs.len() as f64;
    let (re, im) = xs.iter().fold((0.0, 0.0), |(r, i), &x| {
        let (s, c) = (lambda * x).sin_cos();
        (r + c, i + s)
    });
    (re / n, im / n)
}

/// Monte Carlo estimate of `P(V(1) >= 0)`.
pub fn rho_estimate(spec: &StableLawSpec, n_samples: usize) -> Result<f64> {
    rho_estimate_at(spec, n_samples, 1.0)
}

pub fn rho_estimate_at(spec: &StableLawSpec, n_samples: usize, t: f64) -> Result<f64> {
    spec.validate()?;
    if n_samples == 0 {
        return param("n_samples must be positive");
    }
    let mut rng = stream_rng(spec.seed, derive_stream(&[tag("rho"), t.to_bits()]));
    let hits = (0..n_samples)
        .filter(|_| spec.sample_increment(t, &mut rng) >= 0.0)
        .count();
    Ok(hits as f64 / n_samples as f64)
}

/// Positivity parameter from the skewness. Only used to cross-check
/// [`rho_estimate`].
pub fn rho_closed_form(spec: &StableLawSpec) -> f64 {
    if spec.alpha == 1.0 || spec.is_gaussian() {
        return 0.5
            + if spec.alpha == 1.0 {
                (-spec.drift_d / spec.scale_k).atan() / PI
            } else {
                0.0
            };
    }
    0.5 + (spec.beta * (FRAC_PI_2 * spec.alpha).tan()).atan() / (PI * spec.alpha)
}
