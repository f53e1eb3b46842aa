//! Balls-into-bins maximum load and the gap it implies for the lower-bound
//! construction.
//!
//! ```bash
//! cargo run --release -p advice-bandit --example max_load
//! ```

use advice_bandit::{epsilon_setting, estimate_max_load, MaxLoadEstimate, ProblemDims, RngStream};

fn main() -> advice_bandit::Result<()> {
    let mut rng = RngStream::new(0, 0);
    println!(" K   M   f(K,M)   +/-     max(ln K, M/K)");
    for (k, m) in [(2, 2), (4, 2), (4, 8), (16, 4), (16, 64), (64, 16)] {
        let f = estimate_max_load(k, m, 100_000, &mut rng)?;
        println!(
            "{k:>2} {m:>3}  {:>7.4}  {:.4}  {:>7.4}",
            f.mean,
            f.stderr,
            MaxLoadEstimate::asymptotic(k, m)
        );
    }

    let f = estimate_max_load(4, 2, 100_000, &mut rng)?;
    for t in [1_000, 10_000, 100_000] {
        let dims = ProblemDims::new(8, 4, 2, t)?;
        println!("N=8 K=4 M=2 T={t}: epsilon = {:.5}", epsilon_setting(&dims, f.mean)?);
    }
    Ok(())
}
