//! Post-infimum law at beta = 0.5 with both candidate exponents of the
//! reweighting density `x^{-e} / Z`: `e = alpha rho` and `e = alpha (1 - rho)`.
//! At beta = 0 the two coincide.
//!
//! cargo run --release --example f1_exponent -- [n] [beta]

use levy_env::config::RunConfig;
use levy_env::verify::{valley_law_with, F1Exponent};

fn main() -> levy_env::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = RunConfig::preset("post-law");
    cfg.experiment.n_replications = args.first().map_or(2_000, |a| a.parse().expect("n"));
    cfg.law.beta = args.get(1).map_or(0.5, |a| a.parse().expect("beta"));
    for exponent in [F1Exponent::AlphaRho, F1Exponent::AlphaOneMinusRho] {
        let r = valley_law_with(&cfg, exponent)?.report;
        println!("{exponent:?}: verdict {:?}", r.verdict);
        for (k, v) in r.statistics.iter().filter(|(k, _)| k.starts_with("weighted_")) {
            println!("  {k} = {v:.4}");
        }
    }
    Ok(())
}
