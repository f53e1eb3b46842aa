//! One round of the limited-advice algorithm, step by step.
//!
//! Only the sampled group's advice is read; the importance-weighted
//! estimate lands on the played arm and on that group's experts.
//!
//! ```bash
//! cargo run -p advice-bandit --example single_round
//! ```

use advice_bandit::{
    group_arm_distribution, group_distribution, partition_experts, play_round, AdviceMatrix,
    EnvironmentStep, ExpertDistribution, LossVector, ProblemDims, RngStream, RoundGate,
};

fn main() -> advice_bandit::Result<()> {
    let dims = ProblemDims::new(6, 4, 2, 1)?;
    let part = partition_experts(&dims)?;
    let q = ExpertDistribution::new(vec![0.05, 0.25, 0.1, 0.1, 0.3, 0.2])?;
    let step = EnvironmentStep {
        advice: AdviceMatrix::from_choices(4, &[0, 1, 1, 1, 2, 3])?,
        losses: LossVector::new(vec![0.9, 0.2, 0.5, 0.4])?,
    };

    let r = group_distribution(&q, &part);
    println!("groups {:?}", part.groups());
    println!("group distribution r = {r:?}");
    for (i, g) in part.groups().iter().enumerate() {
        let rows: Vec<_> = g.iter().map(|&h| step.advice.row(h).clone()).collect();
        println!("  p^{} = {:?}", i + 1, group_arm_distribution(&q, g, &rows, r[i]));
    }

    let mut rng = RngStream::new(3, 1);
    for _ in 0..3 {
        let mut gate = RoundGate::new(&step, dims.budget);
        let out = play_round(&q, &part, &mut gate, &mut rng)?;
        println!(
            "group {} arm {} loss {} Pr {:.3} -> arm estimates {:?}, expert losses {:?}",
            out.sampled_group + 1,
            out.played_arm + 1,
            out.observed_loss,
            out.probability,
            out.estimated_arm_losses,
            out.expert_losses.as_slice()
        );
    }
    Ok(())
}
