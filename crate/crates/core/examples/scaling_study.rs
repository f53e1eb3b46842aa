//! Regret growth with the horizon: fits the log-log slope, which should sit
//! near 1/2.
//!
//! ```bash
//! cargo run --release -p advice-bandit --example scaling_study
//! ```

use advice_bandit::{scaling_study, Algorithm, EnvSpec, ExperimentConfig, ProblemDims};

fn main() -> advice_bandit::Result<()> {
    let dims = ProblemDims::new(8, 4, 2, 1)?;
    let mut cfg = ExperimentConfig::new(dims, Algorithm::PolyInf, EnvSpec::LowerBound);
    cfg.runs = 30;
    cfg.seed = 11;
    cfg.workers = 4;
    let horizons = [1 << 10, 1 << 12, 1 << 14];
    let res = scaling_study(&cfg, &horizons)?;
    print!("{}", res.to_csv());
    match res.slope() {
        Some(s) => println!("log-log slope {s:.3}"),
        None => println!("log-log slope undefined"),
    }
    Ok(())
}
