//! Monte-Carlo regret against the hidden-best-expert adversary, with CSV
//! output, compared to the theoretical curves.
//!
//! ```bash
//! cargo run --release -p advice-bandit --example lower_bound_experiment [out-dir]
//! ```

use std::path::PathBuf;

use advice_bandit::{run_experiment, write_outputs, Algorithm, EnvSpec, ExperimentConfig, ProblemDims};

fn main() -> advice_bandit::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("advice-bandit-lower-bound"), PathBuf::from);
    let dims = ProblemDims::new(8, 4, 2, 10_000)?;

    for algo in [Algorithm::Mw, Algorithm::PolyInf] {
        let mut cfg = ExperimentConfig::new(dims, algo, EnvSpec::LowerBound);
        cfg.runs = 40;
        cfg.seed = 2024;
        cfg.workers = 4;
        let res = run_experiment(&cfg)?;
        let dir = out.join(algo.name());
        write_outputs(&res, &dir)?;

        let hits = res
            .records
            .iter()
            .filter(|r| r.hidden_best == Some(r.best_expert()))
            .count();
        println!(
            "{algo:>7}: mean regret {:.1} +/- {:.1}  (upper bound mw {:.1} / polyinf {:.1}, lower {:.1}); eps {:.5}; h* realized best in {hits}/{} runs",
            res.mean_regret, res.stderr, res.bounds.mw, res.bounds.polyinf, res.bounds.lower, res.epsilon, cfg.runs
        );
        println!("         CSVs in {}", dir.display());
    }
    Ok(())
}
