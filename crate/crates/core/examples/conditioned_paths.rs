//! Processes conditioned to stay positive: the two path transforms side by
//! side, the exact Bessel(3) law at alpha = 2, and the two-sided environment
//! that appears in the limit.
//!
//! cargo run --release --example conditioned_paths

use levy_env::conditioned::{sample_conditioned, sample_tilde, ConditionedSampler, Construction, LawTag};
use levy_env::stable::StableLawSpec;
use levy_env::stats::{bessel3_cdf, ks_one_sample, ks_two_sample};

fn marginals(spec: &StableLawSpec, construction: Construction, n: u64, t: f64) -> levy_env::Result<Vec<f64>> {
    (0..n)
        .map(|s| {
            let mut up = ConditionedSampler::new(spec, LawTag::Up, construction, 0.01, s)?.with_max_points(1 << 20);
            up.ensure_horizon(t)?;
            Ok(up.values()[(t / 0.01).round() as usize])
        })
        .filter(|r| !matches!(r, Err(levy_env::Error::Aborted(_))))
        .collect()
}

fn main() -> levy_env::Result<()> {
    let stable = StableLawSpec::new(1.5, 0.0, 1.0).with_seed(3);
    let tanaka = marginals(&stable, Construction::TanakaR, 2_000, 1.0)?;
    let bertoin = marginals(&stable, Construction::Bertoin, 2_000, 1.0)?;
    let (d, p) = ks_two_sample(&tanaka, &bertoin)?;
    println!("alpha = 1.5 at t = 1: Tanaka vs Bertoin KS distance {d:.4}, p = {p:.3}");

    let bm = StableLawSpec::brownian().with_seed(3);
    let tanaka = marginals(&bm, Construction::TanakaR, 2_000, 1.0)?;
    let (d, p) = ks_one_sample(&tanaka, |r| bessel3_cdf(r, 1.0))?;
    println!("alpha = 2 Tanaka vs exact Bessel(3): KS distance {d:.4}, p = {p:.3}");

    let path = sample_conditioned(&stable, LawTag::Up, 5.0, 0.01, 11)?;
    let lowest = path.path.values[1..].iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "one UP path on [0, 5]: {} points, minimum after 0 is {lowest:.4}",
        path.path.len()
    );

    let tilde = sample_tilde(&stable, 5.0, 0.01, 5)?;
    println!(
        "two-sided limit environment on [{}, {}]: 1 / int exp(-V) = {:.4}",
        tilde.two_sided.x(tilde.two_sided.min_index()),
        tilde.two_sided.x(tilde.two_sided.max_index()),
        tilde.inverse_integral()
    );
    Ok(())
}
