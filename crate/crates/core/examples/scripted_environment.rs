//! A deterministic scripted environment, saved to and replayed from the
//! CSV script format.
//!
//! ```bash
//! cargo run -p advice-bandit --example scripted_environment
//! ```

use advice_bandit::{run_experiment, Algorithm, EnvSpec, ExperimentConfig, ProblemDims, ScriptedEnv};

fn main() -> advice_bandit::Result<()> {
    // four experts, two arms; arm 2 is always better and experts 2 and 4 know it
    let rounds = 2_000;
    let rows = (0..rounds)
        .map(|t| {
            let noisy = if t % 7 == 0 { 1 } else { 0 };
            (vec![0, 1, noisy, 1], vec![0.8, 0.3])
        })
        .collect();
    let script = ScriptedEnv::new(rows)?;
    let path = std::env::temp_dir().join("advice-bandit-script.csv");
    script.save(&path)?;
    println!("script written to {}", path.display());

    let dims = ProblemDims::new(4, 2, 2, rounds)?;
    for algo in [Algorithm::Mw, Algorithm::PolyInf] {
        let mut cfg = ExperimentConfig::new(dims, algo, EnvSpec::Script(path.clone()));
        cfg.runs = 20;
        let res = run_experiment(&cfg)?;
        let best = &res.records[0];
        println!(
            "{algo:>7}: mean regret {:.2} +/- {:.2}; expert losses {:?}",
            res.mean_regret, res.stderr, best.expert_losses
        );
    }
    Ok(())
}
