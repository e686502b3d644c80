//! Local time at the valley bottom against the limit functional: for one
//! environment and growing c, `L(e^c, m_c + x) / e^c` next to the mean of
//! `exp(-V~(x)) / int exp(-V~)` over independent two-sided conditioned paths.
//!
//! cargo run --release --example limit_functional -- [n_limit]

use levy_env::conditioned::{sample_tilde_with, Construction};
use levy_env::diffusion::{chain_checkpoints, local_time_profile, ChainOptions, Environment};
use levy_env::stable::{EnvSampler, StableLawSpec};
use levy_env::valley::standard_valley_sampled;

fn main() -> levy_env::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(200, |a| a.parse().expect("n_limit"));
    let h = 0.1;
    let spec = StableLawSpec::brownian().with_seed(9);
    let probes = [-1.0, 0.0, 1.0];
    let cs = [4.0, 8.0, 12.0];

    let mut sampler = EnvSampler::new(&spec, h, 0)?;
    let mut path = sampler.sample(100);
    let mut bottoms = Vec::new();
    for c in cs {
        bottoms.push(standard_valley_sampled(&mut path, &mut sampler, c, 1 << 22)?.m);
    }
    let mut env = Environment::sampled(path, sampler, 1 << 22);
    let runs = chain_checkpoints(&mut env, &cs.map(f64::exp), 1, ChainOptions::default())?;
    for ((run, m), c) in runs.iter().zip(&bottoms).zip(cs) {
        let prof = local_time_profile(run);
        let at: Vec<String> = probes
            .iter()
            .map(|x| format!("{:.4}", prof.at(m + (x / h).round() as i64) / run.horizon_t))
            .collect();
        println!(
            "c = {c:4}: m_c = {:7.1}, L/t at m_c + {probes:?} = {}",
            *m as f64 * h,
            at.join(" ")
        );
    }

    let mut mean = [0.0; 3];
    let mut kept = 0.0;
    for s in 0..n {
        let Ok(tilde) = sample_tilde_with(&spec, Construction::TanakaR, 10.0, h, s) else {
            continue;
        };
        for (acc, x) in mean.iter_mut().zip(probes) {
            *acc += tilde.profile_at((x / h).round() as i64);
        }
        kept += 1.0;
    }
    println!(
        "limit mean over {kept} samples: {}",
        mean.map(|v| format!("{:.4}", v / kept)).join(" ")
    );
    Ok(())
}
