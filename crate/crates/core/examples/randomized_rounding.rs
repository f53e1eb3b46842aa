//! Rounding general advice to a single recommended arm.
//!
//! ```bash
//! cargo run -p advice-bandit --example randomized_rounding
//! ```

use advice_bandit::{randomized_round, AdviceVector, RngStream};

fn main() -> advice_bandit::Result<()> {
    let advice = AdviceVector::new(vec![0.1, 0.6, 0.0, 0.3])?;
    let mut rng = RngStream::new(42, 0);

    let draws = 200_000;
    let mut counts = vec![0usize; advice.arms()];
    for _ in 0..draws {
        let arm = randomized_round(&advice, &mut rng).basis_index().expect("basis vector");
        counts[arm] += 1;
    }

    println!("arm  advice  empirical");
    for (a, (&p, &c)) in advice.probs().iter().zip(&counts).enumerate() {
        println!("{:>3}  {:>6.3}  {:>9.4}", a + 1, p, c as f64 / draws as f64);
    }

    let e2 = AdviceVector::basis(4, 1);
    assert_eq!(randomized_round(&e2, &mut rng), e2);
    println!("basis advice e_2 is returned unchanged");
    Ok(())
}
