//! Lévy processes conditioned to stay positive, valley slopes and the
//! two-sided limit environment.
//!
//! Three constructions of the conditioned law are available:
//!
//! * `Bessel3`: for `alpha = 2` the conditioned process is a scaled
//!   3-dimensional Bessel process, sampled as the norm of three independent
//!   Brownian coordinates.
//! * `TanakaR`: the increments of each excursion of `sup V - V` are
//!   replayed in reverse order. On a grid this is the exact random-walk
//!   version of the conditioning and every block end is a point where the
//!   output meets its future infimum.
//! * `Bertoin`: only the steps that land in `(0, inf)` are kept. At finite
//!   `h` this is an approximation and serves as a cross-check.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::path::{exp_integral, future_infimum, GridPath, TwoSidedPath};
use crate::rng::{derive_stream, stream_rng, tag, StreamRng};
use crate::stable::{IncrementStream, StableLawSpec};
use crate::valley::one_sided_stats;

/// Default cap on the number of input points a single conditioned path may
/// consume.
pub const DEFAULT_MAX_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LawTag {
    Up,
    UpHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Construction {
    Bessel3,
    Bertoin,
    TanakaR,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedPath {
    pub path: GridPath,
    pub law_tag: LawTag,
    pub construction: Construction,
}

impl ConditionedPath {
    /// Writes `x,value` rows to `csv` and `{law_tag, construction}` next to it.
    pub fn write(&self, csv: &std::path::Path, sidecar: &std::path::Path) -> Result<()> {
        self.path.write_csv(csv)?;
        let meta = serde_json::json!({ "law_tag": self.law_tag, "construction": self.construction });
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// `A+` on the grid and the grid version of its right-continuous inverse:
/// `map[k]` is the index of the `(k+1)`-th point where the path is positive.
pub fn time_above_zero(path: &GridPath) -> (GridPath, Vec<usize>) {
    let mut count = 0usize;
    let mut map = Vec::new();
    let values = path
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                count += 1;
                map.push(i);
            }
            count as f64 * path.step_h
        })
        .collect();
    (
        GridPath {
            origin_index: path.origin_index,
            step_h: path.step_h,
            values,
        },
        map,
    )
}

/// Sum of the increments of the steps that land in `(0, inf)`, read on the
/// clock `A+`. Expanding the jump corrections step by step leaves exactly
/// this sum: a step entering `(0, inf)` contributes its full size, a step
/// leaving it is dropped together with the negative stretch that follows.
pub fn bertoin_transform(path: &GridPath) -> ConditionedPath {
    let mut out = vec![0.0];
    for w in path.values.windows(2) {
        if w[1] > 0.0 {
            let last = *out.last().unwrap();
            out.push(last + (w[1] - w[0]));
        }
    }
    ConditionedPath {
        path: GridPath::new(path.step_h, out),
        law_tag: LawTag::Up,
        construction: Construction::Bertoin,
    }
}

/// Reverses the increments inside every excursion of `sup V - V` away from
/// zero, i.e. between successive strict records of the running maximum.
/// The output stops at the last record in the window.
pub fn tanaka_transform(path: &GridPath) -> ConditionedPath {
    let mut out = vec![0.0];
    let mut block = Vec::new();
    let mut record = path.values.first().copied().unwrap_or(0.0);
    for w in path.values.windows(2) {
        block.push(w[1] - w[0]);
        if w[1] > record {
            flush_block(&mut out, &mut block);
            record = w[1];
        }
    }
    ConditionedPath {
        path: GridPath::new(path.step_h, out),
        law_tag: LawTag::Up,
        construction: Construction::TanakaR,
    }
}

fn flush_block(out: &mut Vec<f64>, block: &mut Vec<f64>) {
    let mut v = *out.last().unwrap();
    for &x in block.iter().rev() {
        v += x;
        out.push(v);
    }
    block.clear();
}

enum Source {
    Bessel {
        sd: f64,
        rng: StreamRng,
        coords: [f64; 3],
    },
    Tanaka {
        incs: IncrementStream,
        cur: f64,
        record: f64,
        block: Vec<f64>,
    },
    Bertoin {
        incs: IncrementStream,
        cur: f64,
    },
}

/// A conditioned path that grows on demand. Growth only appends, so a path
/// stopped at some event and then extended keeps its prefix.
pub struct ConditionedSampler {
    law_tag: LawTag,
    construction: Construction,
    step_h: f64,
    max_points: usize,
    consumed: usize,
    source: Source,
    out: Vec<f64>,
}

impl ConditionedSampler {
    pub fn new(
        spec: &StableLawSpec,
        law_tag: LawTag,
        construction: Construction,
        step_h: f64,
        stream: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if !(step_h > 0.0) {
            return param("step_h must be positive");
        }
        let input = match law_tag {
            LawTag::Up => *spec,
            LawTag::UpHat => spec.dual(),
        };
        let s = derive_stream(&[stream, tag("conditioned")]);
        let source = match construction {
            Construction::Bessel3 => {
                if !spec.is_gaussian() {
                    return param("BESSEL3 construction needs alpha = 2");
                }
                Source::Bessel {
                    sd: (2.0 * spec.scale_k * step_h).sqrt(),
                    rng: stream_rng(spec.seed, s),
                    coords: [0.0; 3],
                }
            }
            Construction::TanakaR => Source::Tanaka {
                incs: IncrementStream::new(input, step_h, s)?,
                cur: 0.0,
                record: 0.0,
                block: Vec::new(),
            },
            Construction::Bertoin => Source::Bertoin {
                incs: IncrementStream::new(input, step_h, s)?,
                cur: 0.0,
            },
        };
        Ok(Self {
            law_tag,
            construction,
            step_h,
            max_points: DEFAULT_MAX_POINTS,
            consumed: 0,
            source,
            out: vec![0.0],
        })
    }

    /// The default construction for `spec`: `Bessel3` at `alpha = 2`,
    /// `TanakaR` otherwise.
    pub fn default_for(spec: &StableLawSpec, law_tag: LawTag, step_h: f64, stream: u64) -> Result<Self> {
        let construction = if spec.is_gaussian() {
            Construction::Bessel3
        } else {
            Construction::TanakaR
        };
        Self::new(spec, law_tag, construction, step_h, stream)
    }

    pub fn with_max_points(mut self, max_points: usize) -> Self {
        self.max_points = max_points;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.out
    }

    pub fn step_h(&self) -> f64 {
        self.step_h
    }

    /// Input points drawn so far.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    fn step(&mut self) -> Result<()> {
        if self.consumed >= self.max_points {
            return Err(Error::Aborted(format!(
                "conditioned path needed more than {} input points",
                self.max_points
            )));
        }
        self.consumed += 1;
        match &mut self.source {
            Source::Bessel { sd, rng, coords } => {
                for c in coords.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *c += *sd * z;
                }
                self.out
                    .push((coords[0] * coords[0] + coords[1] * coords[1] + coords[2] * coords[2]).sqrt());
            }
            Source::Tanaka {
                incs,
                cur,
                record,
                block,
            } => {
                let x = incs.next_increment();
                *cur += x;
                block.push(x);
                if *cur > *record {
                    *record = *cur;
                    flush_block(&mut self.out, block);
                }
            }
            Source::Bertoin { incs, cur } => {
                let x = incs.next_increment();
                *cur += x;
                if *cur > 0.0 {
                    let last = *self.out.last().unwrap();
                    self.out.push(last + x);
                }
            }
        }
        Ok(())
    }

    /// Grows the output to at least `n_points` values.
    pub fn ensure_len(&mut self, n_points: usize) -> Result<()> {
        while self.out.len() < n_points {
            self.step()?;
        }
        Ok(())
    }

    /// Grows the output until it covers `[0, horizon]`.
    pub fn ensure_horizon(&mut self, horizon: f64) -> Result<()> {
        self.ensure_len((horizon / self.step_h - 1e-9).ceil() as usize + 1)
    }

    /// First index where the output reaches `level`, growing as needed.
    pub fn first_passage(&mut self, level: f64) -> Result<usize> {
        let mut from = 0;
        loop {
            if let Some(k) = self.out[from..].iter().position(|&v| v >= level) {
                return Ok(from + k);
            }
            from = self.out.len();
            self.step()?;
        }
    }

    pub fn snapshot(&self) -> ConditionedPath {
        ConditionedPath {
            path: GridPath::new(self.step_h, self.out.clone()),
            law_tag: self.law_tag,
            construction: self.construction,
        }
    }

    pub fn into_path(self) -> ConditionedPath {
        ConditionedPath {
            path: GridPath::new(self.step_h, self.out),
            law_tag: self.law_tag,
            construction: self.construction,
        }
    }
}

/// A conditioned path covering `[0, horizon]` with the default construction.
pub fn sample_conditioned(
    spec: &StableLawSpec,
    law_tag: LawTag,
    horizon: f64,
    step_h: f64,
    stream: u64,
) -> Result<ConditionedPath> {
    let mut s = ConditionedSampler::default_for(spec, law_tag, step_h, stream)?;
    s.ensure_horizon(horizon)?;
    Ok(s.into_path())
}

/// Pre-infimum path `V(m - t) - V(m)` on `[0, m]` and post-infimum path
/// `V(m + t) - V(m)` on `[0, tau - m]`, where `m` and `tau` come from
/// [`one_sided_stats`] at height `c`.
pub fn pre_post_split(path: &GridPath, c: f64) -> Result<(GridPath, GridPath)> {
    let s = one_sided_stats(path, c)?;
    let v = &path.values;
    let base = v[s.m_c];
    let pre = (0..=s.m_c).map(|j| v[s.m_c - j] - base).collect();
    let post = (s.m_c..=s.tau_c).map(|i| v[i] - base).collect();
    Ok((GridPath::new(path.step_h, pre), GridPath::new(path.step_h, post)))
}

/// First grid index after a gap `path - future_infimum` above `eps` where
/// the gap closes again. The future infimum is taken over the stored window.
pub fn sigma_epsilon(path: &ConditionedPath, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return param("eps must be positive");
    }
    let v = &path.path.values;
    let fut = future_infimum(&path.path);
    let mut opened = false;
    for i in 1..v.len() {
        let gap = v[i] - fut.values[i];
        if gap > eps {
            opened = true;
        } else if opened && gap == 0.0 {
            return Ok(i);
        }
    }
    Err(Error::WindowTooSmall(format!(
        "no excursion above the future infimum higher than {eps} closes in the window"
    )))
}

/// Last zero of `path - future_infimum` before that gap first reaches `c`.
pub fn hat_m(path: &GridPath, c: f64) -> Result<usize> {
    let fut = future_infimum(path);
    let gap: Vec<f64> = path.values.iter().zip(&fut.values).map(|(v, f)| v - f).collect();
    let tau = gap
        .iter()
        .position(|&g| g >= c)
        .ok_or_else(|| Error::WindowTooSmall(format!("gap never reaches {c}")))?;
    Ok((0..=tau).rev().find(|&i| gap[i] == 0.0).unwrap_or(0))
}

/// Normaliser of the post-infimum density `x^{-alpha rho} / Z`, estimated on
/// values `omega(tau_1)` of conditioned paths at their first passage above 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Calibration {
    pub exponent: f64,
    pub z_hat: f64,
    pub trivial: bool,
}

impl F1Calibration {
    pub fn new(spec: &StableLawSpec, rho: f64, overshoots: &[f64]) -> Result<Self> {
        spec.validate()?;
        if spec.is_gaussian() {
            return param("the post-infimum density applies to alpha < 2");
        }
        if overshoots.is_empty() {
            return param("empty calibration set");
        }
        let exponent = spec.alpha * rho;
        // Without positive jumps the passage value is the level itself and
        // the density is identically one.
        let trivial = spec.beta == -1.0;
        let z_hat = if trivial {
            1.0
        } else {
            overshoots.iter().map(|x| x.powf(-exponent)).sum::<f64>() / overshoots.len() as f64
        };
        Ok(Self {
            exponent,
            z_hat,
            trivial,
        })
    }

    pub fn weight_of(&self, passage_value: f64) -> f64 {
        if self.trivial {
            1.0
        } else {
            passage_value.powf(-self.exponent) / self.z_hat
        }
    }
}

/// Value of `path` at its first passage above 1.
pub fn passage_value(path: &GridPath) -> Result<f64> {
    passage_value_at(path, 1.0)
}

/// Value at the first passage above `level`, divided by `level`.
pub fn passage_value_at(path: &GridPath, level: f64) -> Result<f64> {
    path.values
        .iter()
        .copied()
        .find(|&v| v >= level)
        .map(|v| v / level)
        .ok_or_else(|| Error::WindowTooSmall(format!("path never reaches {level}")))
}

pub fn f1_weight(post_path: &GridPath, calibration: &F1Calibration) -> Result<f64> {
    Ok(calibration.weight_of(passage_value(post_path)?))
}

/// Two-sided environment with a conditioned path on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeEnvironment {
    pub two_sided: TwoSidedPath,
    /// `log int exp(-V)` over the stored window.
    pub log_integral: f64,
}

impl TildeEnvironment {
    /// `exp(-V(x)) / int exp(-V)` at grid index `j`.
    pub fn profile_at(&self, j: i64) -> f64 {
        (-self.two_sided.value(j) - self.log_integral).exp()
    }

    pub fn inverse_integral(&self) -> f64 {
        (-self.log_integral).exp()
    }
}

/// Samples `UP` on the right and `UP_HAT` on the left, doubling the window
/// from `half_window` until `log int exp(-V)` moves by less than `1e-6`.
pub fn sample_tilde(spec: &StableLawSpec, half_window: f64, step_h: f64, stream: u64) -> Result<TildeEnvironment> {
    let construction = if spec.is_gaussian() {
        Construction::Bessel3
    } else {
        Construction::TanakaR
    };
    sample_tilde_with(spec, construction, half_window, step_h, stream)
}

pub fn sample_tilde_with(
    spec: &StableLawSpec,
    construction: Construction,
    half_window: f64,
    step_h: f64,
    stream: u64,
) -> Result<TildeEnvironment> {
    let mut plus = ConditionedSampler::new(spec, LawTag::Up, construction, step_h, derive_stream(&[stream, 1]))?;
    let mut minus = ConditionedSampler::new(spec, LawTag::UpHat, construction, step_h, derive_stream(&[stream, 2]))?;
    let mut w = half_window.max(step_h);
    let mut prev = f64::NAN;
    loop {
        plus.ensure_horizon(w + step_h)?;
        minus.ensure_horizon(w + step_h)?;
        let env = TwoSidedPath {
            plus: GridPath::new(step_h, plus.values().to_vec()),
            minus: GridPath::new(step_h, minus.values().to_vec()),
        };
        let li = exp_integral(&env, -w, w, -1.0)?;
        if (li - prev).abs() < 1e-6 {
            return Ok(TildeEnvironment {
                two_sided: env,
                log_integral: li,
            });
        }
        prev = li;
        w *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::sample_one_sided;
    use crate::stats::{bessel3_cdf, correlation, ks_one_sample, ks_two_sample, ks_weighted};

    fn gp(v: &[f64]) -> GridPath {
        GridPath::new(1.0, v.to_vec())
    }

    #[test]
    fn time_above_zero_cases() {
        let (a, map) = time_above_zero(&gp(&[1.0, 2.0, 3.0]));
        assert_eq!(a.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(map, vec![0, 1, 2]);
        let (a, map) = time_above_zero(&gp(&[-1.0, -2.0]));
        assert_eq!(a.values, vec![0.0, 0.0]);
        assert!(map.is_empty());
        let v = [0.0, 1.0, -1.0, 2.0, 0.5, -3.0, 1.0];
        let (a, map) = time_above_zero(&gp(&v));
        for i in 0..v.len() {
            assert_eq!(a.values[i], v[..=i].iter().filter(|&&x| x > 0.0).count() as f64);
        }
        assert_eq!(map, vec![1, 3, 4, 6]);
    }

    #[test]
    fn bertoin_hand_path() {
        let p = bertoin_transform(&gp(&[0.0, 1.0, 3.0, 5.0]));
        assert_eq!(p.path.values, vec![0.0, 1.0, 3.0, 5.0]);
        // Down-crossing at index 3, recovery at index 6.
        let v = [0.0, 1.0, 2.0, -0.5, -1.5, -0.5, 0.7, 1.2, -0.2, 0.4];
        let p = bertoin_transform(&gp(&v));
        // Entry steps count in full: -0.5 -> 0.7 adds 1.2, -0.2 -> 0.4 adds 0.6.
        let want = [0.0, 1.0, 2.0, 3.2, 3.7, 4.3];
        assert_eq!(p.path.len(), want.len());
        for (a, b) in p.path.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tanaka_hand_paths() {
        let up = tanaka_transform(&gp(&[0.0, 0.5, 1.0, 4.0]));
        assert_eq!(up.path.values, vec![0.0, 0.5, 1.0, 4.0]);
        let p = tanaka_transform(&gp(&[0.0, 1.0, 0.0, 2.0, 1.0, 3.0]));
        assert_eq!(p.path.values, vec![0.0, 1.0, 3.0, 2.0, 4.0, 3.0]);
        // Incomplete final excursion is dropped.
        let p = tanaka_transform(&gp(&[0.0, 1.0, 0.0, 2.0, 1.0, 1.5]));
        assert_eq!(p.path.values, vec![0.0, 1.0, 3.0, 2.0]);
    }

    #[test]
    fn positivity_of_all_constructions() {
        let spec = StableLawSpec::new(1.5, 0.3, 1.0);
        for c in [Construction::TanakaR, Construction::Bertoin] {
            for tag in [LawTag::Up, LawTag::UpHat] {
                let mut s = ConditionedSampler::new(&spec, tag, c, 0.01, 3).unwrap();
                s.ensure_horizon(5.0).unwrap();
                assert!(s.values()[1..].iter().all(|&v| v > 0.0));
            }
        }
        let p = sample_conditioned(&StableLawSpec::brownian(), LawTag::Up, 5.0, 0.01, 1).unwrap();
        assert_eq!(p.construction, Construction::Bessel3);
        assert!(p.path.values[1..].iter().all(|&v| v > 0.0));
        assert!(p.path.horizon() >= 5.0 - 1e-9);
    }

    fn up_marginals(spec: &StableLawSpec, c: Construction, h: f64, ts: &[f64], n: usize, salt: u64) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(n); ts.len()];
        let mut aborted = 0;
        for r in 0..n as u64 {
            let mut s = ConditionedSampler::new(spec, LawTag::Up, c, h, derive_stream(&[salt, r])).unwrap();
            let tmax = ts.iter().cloned().fold(0.0, f64::max);
            if let Err(e) = s.ensure_horizon(tmax) {
                assert!(matches!(e, Error::Aborted(_)));
                aborted += 1;
                continue;
            }
            for (k, &t) in ts.iter().enumerate() {
                out[k].push(s.values()[(t / h).round() as usize]);
            }
        }
        assert!(aborted * 100 <= n, "{aborted} aborted");
        out
    }

    #[test]
    fn bessel3_sampler_matches_closed_form() {
        let spec = StableLawSpec::brownian();
        let xs = &up_marginals(&spec, Construction::Bessel3, 0.05, &[1.0], 10_000, 1)[0];
        let (_, p) = ks_one_sample(xs, |r| bessel3_cdf(r, 1.0)).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn stability_of_the_conditioned_law() {
        // c^{-1} X(c^alpha) against X(1) for alpha = 1.5.
        let spec = StableLawSpec::new(1.5, 0.0, 1.0);
        let c: f64 = 2.0;
        let h = 0.02;
        let n = 3000;
        let tc = c.powf(1.5);
        let m = up_marginals(&spec, Construction::TanakaR, h, &[1.0, tc], n, 2);
        let m2 = up_marginals(&spec, Construction::TanakaR, h, &[1.0], n, 3);
        let scaled: Vec<f64> = m[1].iter().map(|x| x / c).collect();
        let (_, p) = ks_two_sample(&scaled, &m2[0]).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn drifts_upward() {
        let spec = StableLawSpec::new(1.5, 0.0, 1.0);
        let m = up_marginals(&spec, Construction::TanakaR, 0.05, &[1.0, 4.0, 16.0], 1000, 4);
        let means: Vec<f64> = m.iter().map(|v| crate::stats::mean(v)).collect();
        assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
    }

    #[test]
    fn pre_post_split_cases() {
        let vee = GridPath::new(1.0, vec![0.0, -1.0, -2.0, -3.0, -2.0, -1.0, 0.0, 1.0]);
        let (pre, post) = pre_post_split(&vee, 3.0).unwrap();
        assert_eq!(pre.values, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(post.values, vec![0.0, 1.0, 2.0, 3.0]);
        let v = [0.0, 0.5, -1.0, 0.2, -2.0, -1.5, -2.5, -1.0, -0.5, 1.0];
        let (pre, post) = pre_post_split(&gp(&v), 2.0).unwrap();
        // m = 6 (value -2.5), tau = 8 (gap 2.0).
        assert_eq!(pre.values, vec![0.0, 1.0, 0.5, 2.7, 1.5, 3.0, 2.5]);
        assert_eq!(post.values, vec![0.0, 1.5, 2.0]);
        assert!(pre.values.iter().chain(&post.values).all(|&x| x >= 0.0));
    }

    #[test]
    fn sigma_epsilon_cases() {
        let inc = ConditionedPath {
            path: GridPath::new(1.0, (0..20).map(f64::from).collect()),
            law_tag: LawTag::Up,
            construction: Construction::TanakaR,
        };
        assert!(matches!(sigma_epsilon(&inc, 0.5), Err(Error::WindowTooSmall(_))));
        let one = ConditionedPath {
            path: GridPath::new(1.0, vec![0.0, 1.0, 3.0, 2.0, 1.5, 4.0, 5.0]),
            ..inc.clone()
        };
        // Gap: 0, 0, 1.5, 0.5, 0, 0, 0.
        assert_eq!(sigma_epsilon(&one, 1.0).unwrap(), 4);
        assert_eq!(sigma_epsilon(&one, 0.2).unwrap(), 4);
    }

    #[test]
    fn sigma_epsilon_is_a_tanaka_block_end() {
        let spec = StableLawSpec::new(1.5, 0.0, 1.0);
        let mut s = ConditionedSampler::new(&spec, LawTag::Up, Construction::TanakaR, 0.01, 9).unwrap();
        s.ensure_horizon(20.0).unwrap();
        let p = s.snapshot();
        let k = sigma_epsilon(&p, 0.5).unwrap();
        let v = &p.path.values;
        assert!(v[k + 1..].iter().all(|&x| x > v[k]));
    }

    #[test]
    fn f1_calibration() {
        let neg = StableLawSpec::new(1.5, -1.0, 1.0);
        let cal = F1Calibration::new(&neg, 2.0 / 3.0, &[1.01, 1.2]).unwrap();
        assert_eq!(cal.weight_of(1.3), 1.0);
        let sym = StableLawSpec::new(1.5, 0.0, 1.0);
        let xs = [1.0, 1.5, 2.0, 4.0];
        let cal = F1Calibration::new(&sym, 0.5, &xs).unwrap();
        let mean: f64 = xs.iter().map(|&x| cal.weight_of(x)).sum::<f64>() / 4.0;
        assert!((mean - 1.0).abs() < 1e-14);
        assert!((cal.weight_of(2.0) / cal.weight_of(1.0) - 2f64.powf(-0.75)).abs() < 1e-14);
        assert!(F1Calibration::new(&StableLawSpec::brownian(), 0.5, &xs).is_err());
    }

    #[test]
    fn tilde_environment_is_integrable() {
        let spec = StableLawSpec::brownian();
        let n = 300;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for r in 0..n {
            let t = sample_tilde(&spec, 10.0, 0.1, r).unwrap();
            let inv = t.inverse_integral();
            assert!(inv > 0.0 && inv.is_finite());
            let w = t
                .two_sided
                .x(t.two_sided.max_index())
                .min(-t.two_sided.x(t.two_sided.min_index()));
            let li = exp_integral(&t.two_sided, -w / 2.0, w / 2.0, -1.0).unwrap();
            assert!((li - t.log_integral).abs() < 1e-6);
            plus.push(t.two_sided.value(10));
            minus.push(t.two_sided.value(-10));
        }
        assert!(correlation(&plus, &minus).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn spectrally_negative_post_slope_matches_up() {
        // Post-infimum path at height 1, stopped at its end, against the
        // conditioned law stopped at its first passage above 1.
        let spec = StableLawSpec::new(1.5, -1.0, 1.0);
        let (h, t, n) = (0.01, 0.2, 2000);
        let k = (t / h) as usize;
        let post: Vec<f64> = (0..n as u64)
            .map(|r| {
                let mut len = 256;
                loop {
                    let g = sample_one_sided(&spec, len, h, r).unwrap();
                    if let Ok((_, post)) = pre_post_split(&g, 1.0) {
                        return post.values[k.min(post.len() - 1)];
                    }
                    len *= 4;
                }
            })
            .collect();
        let up: Vec<f64> = (0..n as u64)
            .map(|r| {
                let mut s = ConditionedSampler::default_for(&spec, LawTag::Up, h, 1 << 32 | r).unwrap();
                let tau = s.first_passage(1.0).unwrap();
                s.ensure_len(k + 1).unwrap();
                s.values()[k.min(tau)]
            })
            .collect();
        let w = vec![1.0; n];
        let (_, p) = ks_weighted(&up, &w, &post).unwrap();
        assert!(p > 0.01, "p = {p}");
    }
}
