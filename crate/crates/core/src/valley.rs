//! c-extrema, the standard valley around the origin and its one-sided
//! statistics.
//!
//! On the grid a point `i` is a c-minimum when, walking left, the path
//! climbs to `v[i] + c` while staying strictly above `v[i]`, and walking
//! right it climbs to `v[i] + c` while staying at or above `v[i]`. The
//! asymmetry makes the leftmost of several equal minima the extremum.
//! c-maxima are c-minima of the negated path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{running_infimum, running_supremum, GridPath, TwoSidedPath};
use crate::stable::EnvSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Plus,
    Minus,
}

/// Grid index (relative to the origin) and kind of each c-extremum, in
/// ascending order.
pub fn find_c_extrema(path: &TwoSidedPath, c: f64) -> Vec<(i64, ExtremumKind)> {
    let full = path.to_full();
    let o = full.origin_index as i64;
    c_extrema_of(&full.values, c)
        .into_iter()
        .map(|(i, k)| (i as i64 - o, k))
        .collect()
}

#[derive(Clone, Copy)]
enum Phase {
    Start,
    Falling,
    Rising,
}

/// Single pass over `v`: one candidate extremum at a time, confirmed once
/// the path moves `c` away from it in the opposite direction.
pub fn c_extrema_of(v: &[f64], c: f64) -> Vec<(usize, ExtremumKind)> {
    let mut out = Vec::new();
    if v.is_empty() || !(c > 0.0) {
        return out;
    }
    let mut phase = Phase::Start;
    let (mut i_max, mut i_min) = (0, 0);
    for j in 1..v.len() {
        let x = v[j];
        match phase {
            Phase::Start => {
                if x > v[i_max] {
                    i_max = j;
                }
                if x < v[i_min] {
                    i_min = j;
                }
                if x <= v[i_max] - c {
                    phase = Phase::Falling;
                    i_min = j;
                } else if x >= v[i_min] + c {
                    phase = Phase::Rising;
                    i_max = j;
                }
            }
            Phase::Falling => {
                if x < v[i_min] {
                    i_min = j;
                } else if x >= v[i_min] + c {
                    out.push((i_min, ExtremumKind::Min));
                    phase = Phase::Rising;
                    i_max = j;
                }
            }
            Phase::Rising => {
                if x > v[i_max] {
                    i_max = j;
                } else if x <= v[i_max] - c {
                    out.push((i_max, ExtremumKind::Max));
                    phase = Phase::Falling;
                    i_min = j;
                }
            }
        }
    }
    out
}

/// Direct check of the grid definition at index `i`.
pub fn is_c_minimum(v: &[f64], i: usize, c: f64) -> bool {
    let base = v[i];
    let left = v[..i].iter().rev().take_while(|&&x| x > base).any(|&x| x >= base + c);
    let right = v[i + 1..].iter().take_while(|&&x| x >= base).any(|&x| x >= base + c);
    left && right
}

pub fn is_c_maximum(v: &[f64], i: usize, c: f64) -> bool {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    is_c_minimum(&neg, i, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSidedStats {
    /// First grid index with `V - inf V >= c`.
    pub tau_c: usize,
    /// Last grid index at or before `tau_c` where `V` equals its running infimum.
    pub m_c: usize,
    /// `(V(m_c) + c) max sup_{[0, m_c]} V`.
    pub j_c: f64,
}

pub fn one_sided_stats(path: &GridPath, c: f64) -> Result<OneSidedStats> {
    let inf = running_infimum(path);
    let v = &path.values;
    let tau_c = (0..v.len())
        .find(|&i| v[i] - inf.values[i] >= c)
        .ok_or_else(|| Error::WindowTooSmall(format!("path never rises {c} above its infimum")))?;
    let m_c = (0..=tau_c)
        .rev()
        .find(|&i| v[i] == inf.values[i])
        .expect("index 0 is a zero");
    let sup = running_supremum(path).values[m_c];
    Ok(OneSidedStats {
        tau_c,
        m_c,
        j_c: (v[m_c] + c).max(sup),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Valley {
    pub height_c: f64,
    pub step_h: f64,
    /// Grid indices relative to the origin. `p` and `q` are `None` when the
    /// bounding c-maxima are not confirmed inside the window.
    pub p: Option<i64>,
    pub m: i64,
    pub q: Option<i64>,
    pub side: Side,
    pub j_plus: f64,
    pub j_minus: f64,
    pub boundary_extended: bool,
}

impl Valley {
    pub fn m_x(&self) -> f64 {
        self.m as f64 * self.step_h
    }

    pub fn to_json(&self) -> serde_json::Value {
        let x = |j: Option<i64>| j.map(|j| j as f64 * self.step_h);
        serde_json::json!({
            "c": self.height_c,
            "p": x(self.p),
            "m": self.m_x(),
            "q": x(self.q),
            "side": self.side,
            "J_plus": self.j_plus,
            "J_minus": self.j_minus,
            "boundary_extended": self.boundary_extended,
        })
    }
}

/// The c-max, c-min, c-max triplet whose outer points bracket the origin.
/// On a grid the origin itself can be a c-maximum; the triplet to its right
/// is taken then, matching the tie `J+ = J-` that this produces.
pub fn valley_triplet(path: &TwoSidedPath, c: f64) -> Option<(i64, i64, i64)> {
    let ext = find_c_extrema(path, c);
    ext.windows(3).find_map(|w| match w {
        [(p, ExtremumKind::Max), (m, ExtremumKind::Min), (q, ExtremumKind::Max)] if *p <= 0 && 0 < *q => {
            Some((*p, *m, *q))
        }
        _ => None,
    })
}

/// Standard valley of height `c` on a fixed window. The bottom comes from
/// comparing `J+` and `J-` (ties go to the right side); when the bounding
/// c-maxima are confirmed in the window the triplet is also located by
/// direct detection and the two bottoms must agree.
pub fn standard_valley(env: &TwoSidedPath, c: f64) -> Result<Valley> {
    if !(c > 0.0) {
        return Err(Error::Parameter("valley height must be positive".into()));
    }
    let plus = one_sided_stats(&env.plus, c)?;
    let minus = one_sided_stats(&env.minus, c)?;
    let (side, m) = if plus.j_c <= minus.j_c {
        (Side::Plus, plus.m_c as i64)
    } else {
        (Side::Minus, -(minus.m_c as i64))
    };
    let (p, q) = match valley_triplet(env, c) {
        Some((p, tm, q)) => {
            if tm != m {
                return Err(Error::Range(format!(
                    "valley bottom disagrees between routes: J comparison gives {m}, triplet gives {tm}"
                )));
            }
            (Some(p), Some(q))
        }
        None => (None, None),
    };
    Ok(Valley {
        height_c: c,
        step_h: env.step_h(),
        p,
        m,
        q,
        side,
        j_plus: plus.j_c,
        j_minus: minus.j_c,
        boundary_extended: false,
    })
}

/// Standard valley of a sampled environment, doubling both sides until the
/// valley (including its bounding maxima) is resolved or `max_points` per
/// side is reached. A valley without `p`/`q` at the cap is still returned;
/// an unresolved bottom is an abort.
pub fn standard_valley_sampled(
    env: &mut TwoSidedPath,
    sampler: &mut EnvSampler,
    c: f64,
    max_points: usize,
) -> Result<Valley> {
    let mut extended = false;
    loop {
        let at_cap = env.plus.len() >= max_points && env.minus.len() >= max_points;
        match standard_valley(env, c) {
            Ok(mut v) if v.p.is_some() || at_cap => {
                v.boundary_extended = extended;
                return Ok(v);
            }
            Ok(_) | Err(Error::WindowTooSmall(_)) if !at_cap => {
                let n = (env.plus.len().max(env.minus.len()) * 2).min(max_points);
                sampler.grow(env, n - 1);
                extended = true;
            }
            Err(Error::WindowTooSmall(msg)) => return Err(Error::Aborted(msg)),
            Err(e) => return Err(e),
            Ok(_) => unreachable!(),
        }
    }
}

/// `(a, b)`: the last grid index at or left of the origin and the first at or
/// right of it where the recentered environment exceeds `c r`.
pub fn ab_window(env_recentered: &TwoSidedPath, c: f64, r: f64) -> Result<(i64, i64)> {
    let level = c * r;
    let b = env_recentered.plus.values.iter().position(|&v| v > level);
    let a = env_recentered.minus.values.iter().position(|&v| v > level);
    match (a, b) {
        (Some(a), Some(b)) => Ok((-(a as i64), b as i64)),
        _ => Err(Error::WindowTooSmall(format!(
            "environment does not exceed {level} on both sides"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{recenter, rescale};
    use crate::stable::StableLawSpec;
    use proptest::prelude::*;

    /// All (xi, x0, zeta) triples against the grid definition.
    fn exhaustive(v: &[f64], c: f64) -> Vec<(usize, ExtremumKind)> {
        let n = v.len();
        let min_at = |w: &dyn Fn(usize) -> f64, x0: usize| {
            (0..x0).any(|xi| {
                (x0 + 1..n).any(|zeta| {
                    w(xi) >= w(x0) + c
                        && w(zeta) >= w(x0) + c
                        && (xi + 1..x0).all(|y| w(y) > w(x0))
                        && (x0 + 1..zeta).all(|y| w(y) >= w(x0))
                })
            })
        };
        let mut out = Vec::new();
        for x0 in 0..n {
            if min_at(&|i| v[i], x0) {
                out.push((x0, ExtremumKind::Min));
            }
            if min_at(&|i| -v[i], x0) {
                out.push((x0, ExtremumKind::Max));
            }
        }
        out
    }

    fn from_values(v: &[f64], origin: usize, h: f64) -> TwoSidedPath {
        TwoSidedPath::from_full(&GridPath {
            origin_index: origin,
            step_h: h,
            values: v.to_vec(),
        })
    }

    #[test]
    fn seven_point_path() {
        let v = [3.0, 1.0, 2.0, 0.0, 1.5, 0.5, 3.0];
        let p = from_values(&v, 3, 1.0);
        assert_eq!(find_c_extrema(&p, 2.0), vec![(0, ExtremumKind::Min)]);
        assert_eq!(exhaustive(&v, 2.0), vec![(3, ExtremumKind::Min)]);
    }

    #[test]
    fn monotone_and_well() {
        let inc = TwoSidedPath::from_fn(0.1, 50, 50, |x| x);
        assert!(find_c_extrema(&inc, 0.5).is_empty());
        let well = TwoSidedPath::from_fn(0.5, 10, 10, |x| x.abs());
        assert_eq!(find_c_extrema(&well, 1.0), vec![(0, ExtremumKind::Min)]);
    }

    proptest! {
        #[test]
        fn scan_matches_exhaustive_oracle(
            v in prop::collection::vec(-6i32..6, 2..60),
            c in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 5.0]),
        ) {
            // Small integers force plenty of ties.
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            prop_assert_eq!(c_extrema_of(&v, c), exhaustive(&v, c));
        }

        #[test]
        fn scan_matches_oracle_on_long_walks(seed in 0u64..1000) {
            let spec = StableLawSpec::new(1.5, 0.0, 1.0).with_seed(seed);
            let g = crate::stable::sample_one_sided(&spec, 199, 0.05, 0).unwrap();
            for c in [0.3, 1.0] {
                let got = c_extrema_of(&g.values, c);
                prop_assert_eq!(&got, &exhaustive(&g.values, c));
                for w in got.windows(2) {
                    prop_assert_ne!(w[0].1, w[1].1);
                }
                for &(i, k) in &got {
                    let ok = match k {
                        ExtremumKind::Min => is_c_minimum(&g.values, i, c),
                        ExtremumKind::Max => is_c_maximum(&g.values, i, c),
                    };
                    prop_assert!(ok);
                }
            }
        }
    }

    #[test]
    fn one_sided_examples() {
        let s = one_sided_stats(&GridPath::new(1.0, vec![0.0, -1.0, 1.0, -2.0, 3.0]), 2.0).unwrap();
        assert_eq!(
            s,
            OneSidedStats {
                tau_c: 2,
                m_c: 1,
                j_c: 1.0
            }
        );
        let s = one_sided_stats(&GridPath::new(1.0, vec![0.0, -2.0, -4.0, -2.0, 0.0]), 2.0).unwrap();
        assert_eq!(
            s,
            OneSidedStats {
                tau_c: 3,
                m_c: 2,
                j_c: 0.0
            }
        );
        // A decreasing path equals its running infimum, so the gap never opens.
        let ramp = GridPath::new(1.0, (0..20).map(|i| -f64::from(i)).collect());
        assert!(matches!(one_sided_stats(&ramp, 1.0), Err(Error::WindowTooSmall(_))));
        let up = GridPath::new(1.0, (0..20).map(f64::from).collect());
        assert_eq!(one_sided_stats(&up, 1.5).unwrap().tau_c, 2);
    }

    #[test]
    fn valley_of_a_symmetric_well() {
        let well = TwoSidedPath::from_fn(0.1, 40, 40, |x| x.abs());
        let v = standard_valley(&well, 1.0).unwrap();
        assert_eq!(v.m, 0);
        assert_eq!(v.side, Side::Plus);
        assert_eq!(v.j_plus, v.j_minus);
        assert_eq!((v.p, v.q), (None, None));
    }

    #[test]
    fn valley_of_the_padded_seven_point_path() {
        let full = [-1.0, 6.0, 3.0, 1.0, 2.0, 0.0, 1.5, 0.5, 3.0, 6.0, 3.0];
        let p = from_values(&full, 5, 1.0);
        let val = standard_valley(&p, 2.0).unwrap();
        assert_eq!(val.m, 0);
        assert_eq!(val.p, Some(-4));
        assert_eq!(val.q, Some(4));
        let json = val.to_json();
        assert_eq!(json["side"], "PLUS");
        assert_eq!(json["m"], 0.0);
    }

    #[test]
    fn brownian_valley_side_is_fair() {
        let spec = StableLawSpec::brownian().with_seed(11);
        let n = 1000;
        let mut plus = 0;
        for r in 0..n {
            let mut s = EnvSampler::new(&spec, 0.05, r).unwrap();
            let mut env = s.sample(512);
            let v = standard_valley_sampled(&mut env, &mut s, 4.0, 1 << 22).unwrap();
            let bottom = env.value(v.m);
            let (p, q) = (v.p.unwrap(), v.q.unwrap());
            assert!((p..=q).all(|j| env.value(j) >= bottom));
            assert!(env.value(p) >= bottom + 4.0 && env.value(q) >= bottom + 4.0);
            if v.side == Side::Plus {
                plus += 1;
            }
        }
        let frac = plus as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{frac}");
    }

    #[test]
    fn valley_bottom_scales() {
        let spec = StableLawSpec::new(1.5, 0.0, 1.0).with_seed(5);
        let (alpha, c) = (1.5f64, 4.0f64);
        for r in 0..30 {
            let mut s = EnvSampler::new(&spec, 0.01, r).unwrap();
            let mut env = s.sample(1024);
            let v = standard_valley_sampled(&mut env, &mut s, c, 1 << 22).unwrap();
            let scaled = rescale(&env, c, alpha).unwrap();
            let v1 = standard_valley(&scaled, 1.0).unwrap();
            assert_eq!(v1.m, v.m);
            assert!((v1.m_x() - v.m_x() / c.powf(alpha)).abs() <= scaled.step_h());
        }
    }

    #[test]
    fn ab_window_examples() {
        let h = 0.1;
        let well = TwoSidedPath::from_fn(h, 40, 40, |x| x.abs());
        let (a, b) = ab_window(&well, 2.0, 0.5).unwrap();
        assert_eq!((a, b), (-11, 11));
        let steep = TwoSidedPath::from_fn(h, 40, 40, |x| 2.0 * x.abs());
        assert_eq!(ab_window(&steep, 2.0, 0.5).unwrap(), (-6, 6));
        assert!(ab_window(&well, 20.0, 0.5).is_err());
        // Linear-scan oracle on a recentered random environment.
        let spec = StableLawSpec::new(1.2, 0.3, 1.0);
        let mut s = EnvSampler::new(&spec, 0.05, 1).unwrap();
        let mut env = s.sample(200);
        let v = standard_valley_sampled(&mut env, &mut s, 2.0, 1 << 20).unwrap();
        let rec = recenter(&env, v.m).unwrap();
        let (a, b) = ab_window(&rec, 2.0, 0.5).unwrap();
        let oracle_b = (0..=rec.max_index()).find(|&j| rec.value(j) > 1.0).unwrap();
        let oracle_a = (rec.min_index()..=0).rev().find(|&j| rec.value(j) > 1.0).unwrap();
        assert_eq!((a, b), (oracle_a, oracle_b));
    }
}
