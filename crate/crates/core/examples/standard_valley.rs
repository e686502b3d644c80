//! Standard valleys of one Brownian environment at growing heights: the
//! bottom moves away from the origin roughly like c^2.
//!
//! cargo run --release --example standard_valley -- [seed]

use levy_env::path::recenter;
use levy_env::stable::{EnvSampler, StableLawSpec};
use levy_env::valley::{ab_window, standard_valley_sampled};

fn main() -> levy_env::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(7, |a| a.parse().expect("seed"));
    let h = 0.05;
    let mut sampler = EnvSampler::new(&StableLawSpec::brownian().with_seed(seed), h, 0)?;
    let mut env = sampler.sample(200);
    println!("    c        p        m        q  side   J+      J-      a_cr    b_cr");
    for c in [1.0, 2.0, 4.0, 8.0] {
        let v = standard_valley_sampled(&mut env, &mut sampler, c, 1 << 22)?;
        let x = |j: Option<i64>| j.map_or("    -".to_string(), |j| format!("{:8.2}", j as f64 * h));
        let (a, b) = ab_window(&recenter(&env, v.m)?, c, 0.5)?;
        println!(
            "{c:5.1} {} {:8.2} {} {:>5} {:7.3} {:7.3} {:7.2} {:7.2}",
            x(v.p),
            v.m_x(),
            x(v.q),
            format!("{:?}", v.side),
            v.j_plus,
            v.j_minus,
            a as f64 * h,
            b as f64 * h
        );
    }
    Ok(())
}
