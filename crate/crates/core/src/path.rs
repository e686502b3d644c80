//! Paths on a uniform spatial grid and the deterministic algebra on them.
//!
//! A [`GridPath`] stores values at grid points `x_i = (i - origin_index) * h`
//! and is read as a right-continuous step function: the value on
//! `[x_i, x_{i+1})` is `values[i]`, so the left limit at `x_i` is
//! `values[i - 1]`.
//!
//! A [`TwoSidedPath`] glues a right side and a left side at the origin. Grid
//! index `j >= 0` reads `plus[j]`, grid index `j < 0` reads `minus[-j]`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub origin_index: usize,
    pub step_h: f64,
    pub values: Vec<f64>,
}

impl GridPath {
    /// One-sided path starting at the origin.
    pub fn new(step_h: f64, values: Vec<f64>) -> Self {
        Self {
            origin_index: 0,
            step_h,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.origin_index as f64) * self.step_h
    }

    /// Value at the grid point nearest to `t` (one-sided paths), `None`
    /// beyond the stored window.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = (t / self.step_h).round();
        if i < 0.0 {
            return None;
        }
        self.values.get(self.origin_index + i as usize).copied()
    }

    /// Value at `t`, or the last stored value when `t` lies past the window.
    /// Used for paths stopped at the end of their window.
    pub fn at_stopped(&self, t: f64) -> f64 {
        let i = ((t / self.step_h).round().max(0.0) as usize + self.origin_index).min(self.len() - 1);
        self.values[i]
    }

    pub fn horizon(&self) -> f64 {
        self.x(self.len().saturating_sub(1))
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn negated(&self) -> GridPath {
        GridPath {
            origin_index: self.origin_index,
            step_h: self.step_h,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Index reflection `values[n - 1 - i]`.
    pub fn reversed(&self) -> GridPath {
        let mut values = self.values.clone();
        values.reverse();
        GridPath {
            origin_index: self.len() - 1 - self.origin_index,
            step_h: self.step_h,
            values,
        }
    }

    pub fn truncated(&self, len: usize) -> GridPath {
        GridPath {
            origin_index: self.origin_index,
            step_h: self.step_h,
            values: self.values[..len.min(self.len())].to_vec(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:?},{:?}", self.x(i), v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedPath {
    pub plus: GridPath,
    pub minus: GridPath,
}

impl TwoSidedPath {
    pub fn new(plus: GridPath, minus: GridPath) -> Result<Self> {
        if plus.is_empty() || minus.is_empty() {
            return param("both sides need at least the origin value");
        }
        if (plus.step_h - minus.step_h).abs() > GRID_TOL * plus.step_h {
            return param("sides use different grid steps");
        }
        Ok(Self { plus, minus })
    }

    /// Builds the path from values on grid indices `-(n_minus)..=n_plus`,
    /// given in ascending order with the origin at `origin_index`.
    pub fn from_full(full: &GridPath) -> Self {
        let o = full.origin_index;
        let plus = GridPath::new(full.step_h, full.values[o..].to_vec());
        let minus = GridPath::new(full.step_h, full.values[..=o].iter().rev().copied().collect());
        Self { plus, minus }
    }

    /// Builds a path by evaluating `f` at grid indices `-n_minus..=n_plus`.
    pub fn from_fn(step_h: f64, n_minus: usize, n_plus: usize, f: impl Fn(f64) -> f64) -> Self {
        let plus = GridPath::new(step_h, (0..=n_plus).map(|j| f(j as f64 * step_h)).collect());
        let minus = GridPath::new(step_h, (0..=n_minus).map(|j| f(-(j as f64) * step_h)).collect());
        Self { plus, minus }
    }

    pub fn step_h(&self) -> f64 {
        self.plus.step_h
    }

    pub fn min_index(&self) -> i64 {
        -(self.minus.len() as i64 - 1)
    }

    pub fn max_index(&self) -> i64 {
        self.plus.len() as i64 - 1
    }

    pub fn contains(&self, j: i64) -> bool {
        j >= self.min_index() && j <= self.max_index()
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        if j >= 0 {
            self.plus.values.get(j as usize).copied()
        } else {
            self.minus.values.get((-j) as usize).copied()
        }
    }

    /// Value at grid index `j`; panics outside the window.
    pub fn value(&self, j: i64) -> f64 {
        self.get(j).unwrap_or_else(|| panic!("grid index {j} outside window"))
    }

    pub fn x(&self, j: i64) -> f64 {
        j as f64 * self.step_h()
    }

    /// Nearest grid index to the real position `x`.
    pub fn index_of(&self, x: f64) -> i64 {
        (x / self.step_h()).round() as i64
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.get(self.index_of(x))
    }

    /// Ascending single-array view; the origin sits at `origin_index`.
    pub fn to_full(&self) -> GridPath {
        let mut values: Vec<f64> = self.minus.values[1..].iter().rev().copied().collect();
        let origin_index = values.len();
        values.extend_from_slice(&self.plus.values);
        GridPath {
            origin_index,
            step_h: self.step_h(),
            values,
        }
    }

    pub fn negated(&self) -> TwoSidedPath {
        TwoSidedPath {
            plus: self.plus.negated(),
            minus: self.minus.negated(),
        }
    }

    /// Grid indices `j` with `a <= x_j < b`, or a range error if any of them
    /// lie outside the stored window.
    pub fn index_range(&self, a: f64, b: f64) -> Result<std::ops::Range<i64>> {
        if !(a <= b) {
            return param(format!("interval [{a}, {b}) is reversed"));
        }
        let h = self.step_h();
        let lo = (a / h - GRID_TOL).ceil() as i64;
        let hi = (b / h - GRID_TOL).ceil() as i64;
        if lo < hi && (!self.contains(lo) || !self.contains(hi - 1)) {
            return Err(Error::Range(format!(
                "[{a}, {b}) leaves the window [{}, {}]",
                self.x(self.min_index()),
                self.x(self.max_index())
            )));
        }
        Ok(lo..hi)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_full().write_csv(path)
    }
}

pub fn running_infimum(path: &GridPath) -> GridPath {
    scan(path, f64::min)
}

pub fn running_supremum(path: &GridPath) -> GridPath {
    scan(path, f64::max)
}

fn scan(path: &GridPath, op: fn(f64, f64) -> f64) -> GridPath {
    let mut acc = f64::NAN;
    let values = path
        .values
        .iter()
        .map(|&v| {
            acc = if acc.is_nan() { v } else { op(acc, v) };
            acc
        })
        .collect();
    GridPath {
        origin_index: path.origin_index,
        step_h: path.step_h,
        values,
    }
}

/// `min(values[i..])` over the stored window.
pub fn future_infimum(path: &GridPath) -> GridPath {
    let mut values = path.values.clone();
    for i in (0..values.len().saturating_sub(1)).rev() {
        values[i] = values[i].min(values[i + 1]);
    }
    GridPath {
        origin_index: path.origin_index,
        step_h: path.step_h,
        values,
    }
}

/// `y -> V(x0 + y) - V(x0)` on the part of the window that survives the shift.
pub fn recenter(path: &TwoSidedPath, x0: i64) -> Result<TwoSidedPath> {
    if !path.contains(x0) {
        return Err(Error::Range(format!("recentering point {x0} outside window")));
    }
    let base = path.value(x0);
    let h = path.step_h();
    let plus = (x0..=path.max_index()).map(|j| path.value(j) - base).collect();
    let minus = (path.min_index()..=x0).rev().map(|j| path.value(j) - base).collect();
    Ok(TwoSidedPath {
        plus: GridPath::new(h, plus),
        minus: GridPath::new(h, minus),
    })
}

/// `x -> c^{-1} V(c^alpha x)`. The new grid step is `h / c^alpha`, so every
/// new grid point lands exactly on an old one.
pub fn rescale(path: &TwoSidedPath, c: f64, alpha: f64) -> Result<TwoSidedPath> {
    if !(c > 0.0) {
        return param("rescale factor must be positive");
    }
    let h = path.step_h() / c.powf(alpha);
    let side = |g: &GridPath| GridPath::new(h, g.values.iter().map(|v| v / c).collect());
    Ok(TwoSidedPath {
        plus: side(&path.plus),
        minus: side(&path.minus),
    })
}

/// `log(sum exp(x))`, `-inf` on empty input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log( h * sum_{x_i in [a, b)} exp(sign * V(x_i)) )`, left Riemann rule.
pub fn exp_integral(path: &TwoSidedPath, a: f64, b: f64, sign: f64) -> Result<f64> {
    if sign != 1.0 && sign != -1.0 {
        return param("sign must be +1 or -1");
    }
    let range = path.index_range(a, b)?;
    Ok(path.step_h().ln() + log_sum_exp(range.map(|j| sign * path.value(j))))
}

/// Density `exp(-V) / int exp(-V)` restricted to `[a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileWeights {
    pub step_h: f64,
    /// Grid index of `log_weights[0]`.
    pub first_index: i64,
    pub log_weights: Vec<f64>,
    pub log_normalizer: f64,
}

impl ProfileWeights {
    pub fn x(&self, k: usize) -> f64 {
        (self.first_index + k as i64) as f64 * self.step_h
    }

    pub fn density(&self, k: usize) -> f64 {
        (self.log_weights[k] - self.log_normalizer).exp()
    }

    /// Density at grid index `j`, zero outside the support.
    pub fn density_at(&self, j: i64) -> f64 {
        let k = j - self.first_index;
        if k < 0 || k as usize >= self.log_weights.len() {
            0.0
        } else {
            self.density(k as usize)
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.step_h * (0..self.log_weights.len()).map(|k| self.density(k)).sum::<f64>()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,density")?;
        for k in 0..self.log_weights.len() {
            writeln!(out, "{:?},{:?}", self.x(k), self.density(k))?;
        }
        Ok(())
    }
}

pub fn normalize_profile(path: &TwoSidedPath, a: f64, b: f64) -> Result<ProfileWeights> {
    if !(a < b) {
        return param("normalize_profile needs a < b");
    }
    let range = path.index_range(a, b)?;
    let first_index = range.start;
    let log_weights: Vec<f64> = range.map(|j| -path.value(j)).collect();
    let log_normalizer = path.step_h().ln() + log_sum_exp(log_weights.iter().copied());
    Ok(ProfileWeights {
        step_h: path.step_h(),
        first_index,
        log_weights,
        log_normalizer,
    })
}

/// `int_a^b e^{-c V} / int_{alpha_in}^{beta_in} e^{-c V}`, computed as
/// `1 + tails / inner` so that values within `1e-16` of one keep their
/// precision.
pub fn laplace_ratio(path: &TwoSidedPath, c: f64, a: f64, b: f64, alpha_in: f64, beta_in: f64) -> Result<f64> {
    if !(a <= alpha_in && alpha_in < 0.0 && 0.0 < beta_in && beta_in <= b) {
        return param(format!(
            "need a <= alpha < 0 < beta <= b, got {a}, {alpha_in}, {beta_in}, {b}"
        ));
    }
    if !(c >= 0.0) {
        return param("laplace_ratio needs c >= 0");
    }
    let outer = path.index_range(a, b)?;
    let inner = path.index_range(alpha_in, beta_in)?;
    if path.value(0) != 0.0 {
        return param("path must vanish at the origin");
    }
    if let Some(j) = outer.clone().find(|&j| j != 0 && !(path.value(j) > 0.0)) {
        return param(format!(
            "origin is not the unique minimum: V({}) = {}",
            path.x(j),
            path.value(j)
        ));
    }
    let log_inner = log_sum_exp(inner.clone().map(|j| -c * path.value(j)));
    let log_tails = log_sum_exp(outer.filter(|j| !inner.contains(j)).map(|j| -c * path.value(j)));
    Ok(1.0 + (log_tails - log_inner).exp())
}
