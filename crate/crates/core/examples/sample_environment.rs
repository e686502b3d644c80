//! Samples a two-sided stable environment, checks its increments against the
//! characteristic function and, given a directory, writes `env.csv` there.
//!
//! cargo run --release --example sample_environment -- [alpha] [beta] [out_dir]

use std::path::PathBuf;

use levy_env::stable::{charfn_check, rho_closed_form, rho_estimate, sample_one_sided, EnvSampler, StableLawSpec};

fn main() -> levy_env::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let alpha: f64 = args.first().map_or(1.5, |a| a.parse().expect("alpha"));
    let beta: f64 = args.get(1).map_or(0.0, |a| a.parse().expect("beta"));
    let spec = StableLawSpec::new(alpha, beta, 1.0).with_seed(42);
    spec.validate()?;

    let h = 0.01;
    let env = EnvSampler::new(&spec, h, 0)?.sample(2_000);
    let (lo, hi) = (env.min_index(), env.max_index());
    let (vmin, vmax) = (lo..=hi)
        .map(|j| env.value(j))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    println!(
        "window [{}, {}], V ranges over [{vmin:.3}, {vmax:.3}]",
        env.x(lo),
        env.x(hi)
    );

    let incs = sample_one_sided(&spec, 50_000, 1.0, 1)?.increments();
    println!("lambda  |empirical cf|  |exact cf|");
    for (lambda, (emp, exact)) in
        [0.25, 0.5, 1.0, 2.0]
            .iter()
            .zip(charfn_check(&incs, &spec, 1.0, &[0.25, 0.5, 1.0, 2.0])?)
    {
        println!("{lambda:6.2}  {emp:13.4}  {exact:10.4}");
    }
    println!(
        "rho: estimated {:.4}, closed form {:.4}",
        rho_estimate(&spec, 50_000)?,
        rho_closed_form(&spec)
    );

    if let Some(dir) = args.get(2).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        env.write_csv(&dir.join("env.csv"))?;
        println!("wrote {}", dir.join("env.csv").display());
    }
    Ok(())
}
