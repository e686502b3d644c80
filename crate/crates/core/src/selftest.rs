//! Fast self-checks over every module: closed-form examples plus small
//! Monte Carlo oracles (at most 10^4 draws each).

use crate::conditioned::{
    bertoin_transform, pre_post_split, sample_conditioned, sample_tilde, sigma_epsilon, tanaka_transform,
    time_above_zero, ConditionedPath, Construction, F1Calibration, LawTag,
};
use crate::diffusion::{
    chain_simulate, chain_simulate_with, favorite_point, local_time_profile, scale_function, ChainOptions, Environment,
    LocalTimeProfile,
};
use crate::error::Error;
use crate::path::{
    exp_integral, future_infimum, laplace_ratio, normalize_profile, recenter, rescale, running_infimum,
    running_supremum, GridPath, TwoSidedPath,
};
use crate::stable::{charfn_check, rho_estimate, sample_one_sided, sample_two_sided, EnvSampler, StableLawSpec};
use crate::stats::{correlation, ks_one_sample, ks_two_sample, normal_cdf};
use crate::valley::{ab_window, c_extrema_of, one_sided_stats, standard_valley, ExtremumKind, Side};

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    /// Rate constant handed to the CHAIN engine in the Brownian check; the
    /// correct value is 1/2, anything else must make that check fail.
    pub chain_rate_constant: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            chain_rate_constant: ChainOptions::default().rate_constant,
        }
    }
}

pub struct Check {
    pub module: &'static str,
    pub op: &'static str,
    run: fn(&SelftestOptions) -> Result<(), String>,
}

impl Check {
    pub fn run(&self, opts: &SelftestOptions) -> Result<(), String> {
        (self.run)(opts)
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} vs {b} (tol {tol})"))
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn gp(v: &[f64]) -> GridPath {
    GridPath::new(1.0, v.to_vec())
}

fn abs_path(h: f64, half: usize, slope: f64) -> TwoSidedPath {
    TwoSidedPath::from_fn(h, half, half, move |x| slope * x.abs())
}

fn brownian_increments(_: &SelftestOptions) -> Result<(), String> {
    let spec = StableLawSpec::new(2.0, 0.0, 0.5).with_seed(7);
    let p = e(sample_one_sided(&spec, 10_000, 1.0, 1))?;
    let (_, pv) = e(ks_one_sample(&p.increments(), normal_cdf))?;
    ensure(pv > 0.01, || format!("increments are not standard normal, p = {pv}"))?;
    let again = e(sample_one_sided(&spec, 10_000, 1.0, 1))?;
    ensure(p == again, || "same seed and stream gave different paths".into())?;
    ensure(
        matches!(
            sample_one_sided(&StableLawSpec::new(2.5, 0.0, 1.0), 10, 1.0, 1),
            Err(Error::Parameter(_))
        ),
        || "alpha = 2.5 accepted".into(),
    )
}

fn two_sided(_: &SelftestOptions) -> Result<(), String> {
    let spec = StableLawSpec::brownian().with_seed(3);
    let env = e(sample_two_sided(&spec, 10, 0.1))?;
    ensure(env.value(0) == 0.0 && env.eval(0.0) == Some(0.0), || "V(0) != 0".into())?;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for s in 0..10_000 {
        let env = e(EnvSampler::new(&spec, 0.1, s))?.sample(10);
        plus.push(env.plus.values[10]);
        minus.push(env.minus.values[10]);
    }
    let (_, p) = e(ks_two_sample(&plus, &minus))?;
    ensure(p > 0.01, || format!("plus and minus sides differ in law, p = {p}"))?;
    let r = correlation(&plus, &minus);
    ensure(r.abs() < 3.0 / 100.0, || format!("sides correlated: {r}"))
}

fn charfn(_: &SelftestOptions) -> Result<(), String> {
    let spec = StableLawSpec::new(2.0, 0.0, 0.5).with_seed(5);
    let incs = e(sample_one_sided(&spec, 10_000, 1.0, 2))?.increments();
    let out = e(charfn_check(&incs, &spec, 1.0, &[0.0, 1.0]))?;
    close(out[0].0, 1.0, 1e-12, "empirical modulus at 0")?;
    close(out[0].1, 1.0, 1e-12, "theoretical modulus at 0")?;
    close(out[1].1, (-0.5f64).exp(), 1e-12, "theoretical modulus at 1")?;
    close(out[1].0, out[1].1, 0.03, "empirical modulus at 1")?;
    ensure(charfn_check(&[], &spec, 1.0, &[1.0]).is_err(), || {
        "empty increments accepted".into()
    })
}

fn rho(_: &SelftestOptions) -> Result<(), String> {
    for alpha in [2.0, 1.5] {
        let r = e(rho_estimate(&StableLawSpec::new(alpha, 0.0, 1.0).with_seed(9), 10_000))?;
        close(r, 0.5, 0.03, "rho of a symmetric law")?;
    }
    Ok(())
}

fn running_extrema(_: &SelftestOptions) -> Result<(), String> {
    let p = gp(&[0.0, 1.0, -1.0, 2.0]);
    ensure(running_infimum(&p).values == [0.0, 0.0, -1.0, -1.0], || {
        "running infimum".into()
    })?;
    ensure(running_supremum(&p).values == [0.0, 1.0, 1.0, 2.0], || {
        "running supremum".into()
    })?;
    ensure(future_infimum(&p).values == [-1.0, -1.0, -1.0, 2.0], || {
        "future infimum".into()
    })?;
    let up = gp(&[0.0, 0.5, 2.0, 3.0]);
    let down = gp(&[0.0, -0.5, -2.0, -3.0]);
    ensure(running_infimum(&up).values == [0.0; 4], || {
        "monotone running infimum".into()
    })?;
    ensure(running_supremum(&down).values == [0.0; 4], || {
        "monotone running supremum".into()
    })?;
    ensure(future_infimum(&up).values == up.values, || {
        "monotone future infimum".into()
    })
}

fn recenter_rescale(_: &SelftestOptions) -> Result<(), String> {
    let env = e(sample_two_sided(
        &StableLawSpec::new(1.5, 0.2, 1.0).with_seed(4),
        40,
        0.25,
    ))?;
    ensure(e(recenter(&env, 0))? == env, || {
        "recentering at 0 is not the identity".into()
    })?;
    for x0 in [-7, 3, 12] {
        ensure(e(recenter(&env, x0))?.value(0) == 0.0, || {
            format!("recentered path at {x0} does not vanish")
        })?;
    }
    ensure(e(rescale(&env, 1.0, 1.5))? == env, || {
        "rescaling by 1 is not the identity".into()
    })?;
    let zero = TwoSidedPath::from_fn(0.25, 8, 8, |_| 0.0);
    ensure(
        e(rescale(&zero, 3.0, 2.0))?.to_full().values.iter().all(|&v| v == 0.0),
        || "rescaled zero path".into(),
    )
}

fn integrals(_: &SelftestOptions) -> Result<(), String> {
    let zero = TwoSidedPath::from_fn(0.25, 8, 8, |_| 0.0);
    close(e(exp_integral(&zero, 0.0, 1.0, 1.0))?, 0.0, 1e-12, "log int_0^1 e^0")?;
    let five = TwoSidedPath::from_fn(0.25, 8, 8, |_| 5.0);
    close(
        e(exp_integral(&five, 0.0, 2.0, 1.0))?,
        5.0 + 2f64.ln(),
        1e-12,
        "log int_0^2 e^5",
    )?;
    let w = e(normalize_profile(&zero, 0.0, 1.0))?;
    close(w.total_mass(), 1.0, 1e-10, "normalized mass")?;
    ensure(
        (0..w.log_weights.len()).all(|k| (w.density(k) - 1.0).abs() < 1e-12),
        || "flat density".into(),
    )?;
    let spike = TwoSidedPath::from_fn(1.0, 3, 3, |x| if x == 0.0 { 0.0 } else { 1e6 });
    let w = e(normalize_profile(&spike, -3.0, 3.0))?;
    close(w.density_at(0), 1.0, 1e-12, "degenerate well")
}

fn laplace(_: &SelftestOptions) -> Result<(), String> {
    let v = abs_path(0.01, 300, 1.0);
    let r = e(laplace_ratio(&v, 100.0, -2.0, 2.0, -1.0, 1.0))?;
    ensure((1.0..=1.0 + 1e-40).contains(&r), || format!("ratio at c = 100: {r}"))?;
    close(
        e(laplace_ratio(&v, 0.0, -2.0, 2.0, -1.0, 1.0))?,
        2.0,
        1e-12,
        "ratio at c = 0",
    )
}

fn extrema(_: &SelftestOptions) -> Result<(), String> {
    let ramp: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
    ensure(c_extrema_of(&ramp, 0.5).is_empty(), || {
        "increasing path has c-extrema".into()
    })?;
    let v = abs_path(0.1, 50, 1.0).to_full();
    let mins: Vec<usize> = c_extrema_of(&v.values, 1.0)
        .into_iter()
        .filter(|e| e.1 == ExtremumKind::Min)
        .map(|e| e.0)
        .collect();
    ensure(mins == [v.origin_index], || format!("|x| has c-minima {mins:?}"))
}

fn valley(_: &SelftestOptions) -> Result<(), String> {
    let env = abs_path(0.1, 50, 1.0);
    let v = e(standard_valley(&env, 1.0))?;
    ensure(v.m == 0 && v.side == Side::Plus && v.j_plus == v.j_minus, || {
        format!("valley of |x|: {v:?}")
    })?;
    let down = gp(&(0..20).map(|i| -(i as f64)).collect::<Vec<_>>());
    ensure(
        matches!(one_sided_stats(&down, 1.0), Err(Error::WindowTooSmall(_))),
        || "decreasing ramp".into(),
    )?;
    let h = 0.1;
    let (a, b) = e(ab_window(&abs_path(h, 50, 1.0), 2.0, 0.5))?;
    ensure((a, b) == (-11, 11), || format!("ab window of |x|: {a}, {b}"))?;
    let (a, b) = e(ab_window(&abs_path(h, 50, 2.0), 2.0, 0.5))?;
    ensure((a, b) == (-6, 6), || format!("ab window of 2|x|: {a}, {b}"))
}

fn transforms(_: &SelftestOptions) -> Result<(), String> {
    let (a, map) = time_above_zero(&gp(&[1.0, 2.0, 3.0]));
    ensure(a.values == [1.0, 2.0, 3.0] && map == [0, 1, 2], || {
        "all-positive time change".into()
    })?;
    let (a, map) = time_above_zero(&gp(&[-1.0, -2.0]));
    ensure(a.values == [0.0, 0.0] && map.is_empty(), || {
        "all-negative time change".into()
    })?;
    let pos = gp(&[0.0, 0.5, 1.5, 1.7]);
    ensure(bertoin_transform(&pos).path == pos, || {
        "positive path changed by concatenation".into()
    })?;
    ensure(tanaka_transform(&pos).path == pos, || {
        "increasing path changed by reversal".into()
    })?;
    let p = e(sample_conditioned(
        &StableLawSpec::new(1.5, 0.0, 1.0).with_seed(2),
        LawTag::Up,
        3.0,
        0.01,
        4,
    ))?;
    ensure(p.construction == Construction::TanakaR, || {
        "default construction".into()
    })?;
    ensure(p.path.values[1..].iter().all(|&v| v > 0.0), || {
        "conditioned path not positive".into()
    })
}

fn slopes(_: &SelftestOptions) -> Result<(), String> {
    let vee = gp(&[0.0, -1.0, -2.0, -3.0, -2.0, -1.0, 0.0, 1.0]);
    let (pre, post) = e(pre_post_split(&vee, 3.0))?;
    ensure(
        pre.values == [0.0, 1.0, 2.0, 3.0] && post.values == [0.0, 1.0, 2.0, 3.0],
        || "V-shaped split".into(),
    )?;
    let inc = ConditionedPath {
        path: gp(&[0.0, 1.0, 2.0, 3.0]),
        law_tag: LawTag::Up,
        construction: Construction::TanakaR,
    };
    ensure(
        matches!(sigma_epsilon(&inc, 0.5), Err(Error::WindowTooSmall(_))),
        || "sigma on an increasing path".into(),
    )?;
    let spec = StableLawSpec::new(1.5, -1.0, 1.0);
    let cal = e(F1Calibration::new(&spec, 2.0 / 3.0, &[1.0, 1.2]))?;
    ensure(cal.weight_of(1.0) == 1.0 && cal.weight_of(1.7) == 1.0, || {
        "spectrally negative weight".into()
    })
}

fn tilde(_: &SelftestOptions) -> Result<(), String> {
    let spec = StableLawSpec::brownian().with_seed(8);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for s in 0..200 {
        let t = e(sample_tilde(&spec, 5.0, 0.05, s))?;
        let z = t.inverse_integral();
        ensure(z.is_finite() && z > 0.0, || format!("inverse integral {z}"))?;
        plus.push(t.two_sided.value(20));
        minus.push(t.two_sided.value(-20));
    }
    let r = correlation(&plus, &minus);
    ensure(r.abs() < 3.0 / (200f64).sqrt(), || {
        format!("tilde sides correlated: {r}")
    })
}

fn scale(_: &SelftestOptions) -> Result<(), String> {
    let zero = TwoSidedPath::from_fn(0.1, 20, 20, |_| 0.0);
    let (s, l) = e(scale_function(&zero, 1.5))?;
    close(s * l.exp(), 1.5, 1e-12, "S(x) in a flat environment")?;
    let a = 0.7;
    let flat = TwoSidedPath::from_fn(0.1, 20, 20, move |_| a);
    let (s, l) = e(scale_function(&flat, -1.0))?;
    close(s * l.exp(), -a.exp(), 1e-12, "S(x) in a constant environment")
}

fn chain_brownian(opts: &SelftestOptions) -> Result<(), String> {
    let h = 0.05;
    let flat = TwoSidedPath::from_fn(h, 200, 200, |_| 0.0);
    let mut xs = Vec::new();
    for s in 0..4000 {
        let mut env = Environment::fixed(flat.clone());
        let run = e(chain_simulate_with(
            &mut env,
            1.0,
            s,
            ChainOptions {
                rate_constant: opts.chain_rate_constant,
            },
        ))?;
        let prof = local_time_profile(&run);
        close(prof.total(), 1.0, 1e-9, "occupation identity")?;
        ensure(
            prof.at(prof.first_index - 1) == 0.0 && prof.at(prof.first_index + prof.values.len() as i64) == 0.0,
            || "mass outside the visited range".into(),
        )?;
        xs.push(run.final_position);
    }
    let (_, p) = e(ks_one_sample(&xs, normal_cdf))?;
    ensure(p > 0.01, || format!("X(1) is not standard normal, p = {p}"))
}

fn well(_: &SelftestOptions) -> Result<(), String> {
    let v = [40.0, 30.0, 1.0, 0.3, 0.0, 0.6, 1.5, 30.0, 40.0];
    let env = TwoSidedPath::from_full(&GridPath {
        origin_index: 4,
        step_h: 1.0,
        values: v.to_vec(),
    });
    let run = e(chain_simulate(&mut Environment::fixed(env), 1e4, 1))?;
    let prof = local_time_profile(&run);
    ensure(favorite_point(&prof) == 0, || {
        "favorite point away from the well bottom".into()
    })
}

fn favorite(_: &SelftestOptions) -> Result<(), String> {
    let prof = |values: Vec<f64>| LocalTimeProfile {
        step_h: 1.0,
        first_index: -2,
        values,
        horizon_t: 1.0,
    };
    ensure(favorite_point(&prof(vec![0.1, 0.5, 2.0, 0.3])) == 0, || {
        "single peak".into()
    })?;
    ensure(favorite_point(&prof(vec![0.1, 2.0, 1.0, 2.0])) == -1, || {
        "tie goes left".into()
    })?;
    let scaled = prof(vec![0.3, 6.0, 3.0, 6.0]);
    ensure(favorite_point(&scaled) == -1, || "argmax changes under scaling".into())
}

fn ks(_: &SelftestOptions) -> Result<(), String> {
    let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
    let (d, p) = e(ks_two_sample(&a, &a))?;
    ensure(d == 0.0 && p == 1.0, || format!("identical samples: {d}, {p}"))?;
    let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
    ensure(e(ks_two_sample(&a, &b))?.0 == 1.0, || "disjoint samples".into())?;
    ensure(ks_two_sample(&a[..10], &a).is_err(), || {
        "undersized sample accepted".into()
    })
}

fn scaling_identity(_: &SelftestOptions) -> Result<(), String> {
    let mut sampler = e(EnvSampler::new(&StableLawSpec::brownian(), 0.1, 3))?;
    let path = sampler.sample(200);
    let scaled = e(rescale(&path, 1.0, 2.0))?;
    let a = e(chain_simulate(
        &mut Environment::sampled(path, sampler.clone(), 1 << 20),
        5.0,
        9,
    ))?;
    let b = e(chain_simulate(
        &mut Environment::sampled(scaled, sampler, 1 << 20),
        5.0,
        9,
    ))?;
    ensure(a == b, || "c = 1 pipelines differ".into())
}

/// Every check, in module order.
pub fn checks() -> Vec<Check> {
    vec![
        Check {
            module: "stable_env",
            op: "sample_one_sided",
            run: brownian_increments,
        },
        Check {
            module: "stable_env",
            op: "sample_two_sided",
            run: two_sided,
        },
        Check {
            module: "stable_env",
            op: "charfn_check",
            run: charfn,
        },
        Check {
            module: "stable_env",
            op: "rho_estimate",
            run: rho,
        },
        Check {
            module: "path_core",
            op: "running_extrema",
            run: running_extrema,
        },
        Check {
            module: "path_core",
            op: "recenter_rescale",
            run: recenter_rescale,
        },
        Check {
            module: "path_core",
            op: "exp_integral",
            run: integrals,
        },
        Check {
            module: "path_core",
            op: "laplace_ratio",
            run: laplace,
        },
        Check {
            module: "valley",
            op: "find_c_extrema",
            run: extrema,
        },
        Check {
            module: "valley",
            op: "standard_valley",
            run: valley,
        },
        Check {
            module: "conditioned",
            op: "transforms",
            run: transforms,
        },
        Check {
            module: "conditioned",
            op: "slopes",
            run: slopes,
        },
        Check {
            module: "conditioned",
            op: "sample_tilde",
            run: tilde,
        },
        Check {
            module: "diffusion",
            op: "scale_function",
            run: scale,
        },
        Check {
            module: "diffusion",
            op: "chain_simulate",
            run: chain_brownian,
        },
        Check {
            module: "diffusion",
            op: "local_time_profile",
            run: well,
        },
        Check {
            module: "diffusion",
            op: "favorite_point",
            run: favorite,
        },
        Check {
            module: "verify",
            op: "ks_two_sample",
            run: ks,
        },
        Check {
            module: "verify",
            op: "scaling_experiment",
            run: scaling_identity,
        },
    ]
}

/// Runs the checks in order and stops at the first failure, returning the
/// failing check and its message.
pub fn run_selftest(
    opts: &SelftestOptions,
    mut on_pass: impl FnMut(&Check),
) -> Result<usize, (&'static str, &'static str, String)> {
    let all = checks();
    for c in &all {
        c.run(opts).map_err(|m| (c.module, c.op, m))?;
        on_pass(c);
    }
    Ok(all.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        assert_eq!(
            run_selftest(&SelftestOptions::default(), |_| {}).unwrap(),
            checks().len()
        );
    }

    #[test]
    fn corrupted_rate_constant_is_caught() {
        let err = run_selftest(
            &SelftestOptions {
                chain_rate_constant: 1.0,
            },
            |_| {},
        )
        .unwrap_err();
        assert_eq!((err.0, err.1), ("diffusion", "chain_simulate"));
    }
}
