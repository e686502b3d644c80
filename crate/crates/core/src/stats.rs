//! Goodness-of-fit statistics used by the experiments.

use libm::erf;

use crate::error::{param, Result};

const MIN_SAMPLE: usize = 30;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// CDF at `r` of the norm of a standard 3-dimensional Brownian motion at time `t`.
pub fn bessel3_cdf(r: f64, t: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let s = r / t.sqrt();
    erf(s / std::f64::consts::SQRT_2) - (2.0 / std::f64::consts::PI).sqrt() * s * (-s * s / 2.0).exp()
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=8)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let j = j as f64;
                let sign = if j as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * j * j * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn ks_p(distance: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * distance)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return param("sample contains NaN");
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov distance and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < MIN_SAMPLE || b.len() < MIN_SAMPLE {
        return param(format!(
            "KS needs at least {MIN_SAMPLE} points per sample, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    let a = sorted(a)?;
    let b = sorted(b)?;
    let wa = vec![1.0; a.len()];
    let wb = vec![1.0; b.len()];
    let d = sup_distance(&a, &wa, &b, &wb);
    let (n, m) = (a.len() as f64, b.len() as f64);
    Ok((d, ks_p(d, n * m / (n + m))))
}

/// Two-sample KS where the first sample carries nonnegative weights. The
/// weighted sample enters with its Kish effective size.
pub fn ks_weighted(a: &[f64], weights: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != weights.len() {
        return param("weights and sample differ in length");
    }
    if a.len() < MIN_SAMPLE || b.len() < MIN_SAMPLE {
        return param("weighted KS needs at least 30 points per sample");
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return param("weights must be finite and nonnegative");
    }
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let sa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let sw: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
    let b = sorted(b)?;
    let wb = vec![1.0; b.len()];
    let d = sup_distance(&sa, &sw, &b, &wb);
    let sum: f64 = weights.iter().sum();
    let sum2: f64 = weights.iter().map(|w| w * w).sum();
    let n = sum * sum / sum2;
    let m = b.len() as f64;
    Ok((d, ks_p(d, n * m / (n + m))))
}

/// Sup distance between two weighted empirical CDFs on sorted samples.
fn sup_distance(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> f64 {
    let ta: f64 = wa.iter().sum();
    let tb: f64 = wb.iter().sum();
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            fa += wa[i];
            i += 1;
        }
        while j < b.len() && b[j] == x {
            fb += wb[j];
            j += 1;
        }
        d = d.max((fa / ta - fb / tb).abs());
    }
    d.min(1.0)
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if xs.len() < MIN_SAMPLE {
        return param("KS needs at least 30 points");
    }
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok((d, ks_p(d, n)))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
    (var / xs.len() as f64).sqrt()
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation. Heavy-tailed marginals make Pearson
/// correlation useless as an independence check; ranks are not affected.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    correlation(&ranks(a), &ranks(b))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && xs[idx[e + 1]] == xs[idx[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0;
        for &i in &idx[k..=e] {
            r[i] = avg;
        }
        k = e + 1;
    }
    r
}
