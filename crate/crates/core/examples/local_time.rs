//! Both engines in one Brownian environment up to t = e^6. The favorite
//! point tracks the bottom of the valley of height log t.
//!
//! cargo run --release --example local_time -- [seed] [out_dir]

use std::path::PathBuf;

use levy_env::diffusion::{brox_simulate, chain_simulate, favorite_point, local_time_profile, Environment};
use levy_env::stable::{EnvSampler, StableLawSpec};
use levy_env::valley::standard_valley_sampled;

fn main() -> levy_env::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(2, |a| a.parse().expect("seed"));
    let out = args.get(1).map(PathBuf::from);
    let (h, c) = (0.1, 6.0);
    let t = f64::exp(c);
    let mut sampler = EnvSampler::new(&StableLawSpec::brownian().with_seed(seed), h, 0)?;
    let mut path = sampler.sample(100);
    let valley = standard_valley_sampled(&mut path, &mut sampler, c, 1 << 22)?;
    println!("valley bottom m_c = {:.2}", valley.m_x());

    let mut env = Environment::sampled(path, sampler, 1 << 22);
    let chain = chain_simulate(&mut env, t, 1)?;
    let brox = brox_simulate(&mut env, t, h * h / 4.0, h, 1)?;
    for run in [&chain, &brox] {
        let prof = local_time_profile(run);
        println!(
            "{:?}: favorite point {:.2}, L*/t = {:.4}, h sum L / t = {:.6}, final position {:.2}",
            run.engine,
            favorite_point(&prof) as f64 * h,
            prof.l_star() / t,
            prof.total() / t,
            run.final_position
        );
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            prof.write_csv(&dir.join(format!("local_time_{:?}.csv", run.engine).to_lowercase()))?;
        }
    }
    Ok(())
}
