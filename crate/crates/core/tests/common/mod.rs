//! Test-only oracles. Nothing here calls the library's sampling or
//! distribution code; only the estimator under test is invoked per outcome.

#![allow(dead_code)]

use advice_bandit::{estimate_losses, AdviceVector, ExpertDistribution, GroupPartition, ProblemDims, RngStream};

/// A single-round instance with basis advice.
#[derive(Debug, Clone)]
pub struct Instance {
    pub experts: usize,
    pub arms: usize,
    pub budget: usize,
    pub q: Vec<f64>,
    /// recommended arm of each expert
    pub advice: Vec<usize>,
    pub losses: Vec<f64>,
}

impl Instance {
    pub fn groups(&self) -> usize {
        self.experts / self.budget
    }

    pub fn effective_arms(&self) -> usize {
        self.arms.min(self.budget)
    }

    pub fn dims(&self) -> ProblemDims {
        ProblemDims::new(self.experts, self.arms, self.budget, 1).unwrap()
    }

    pub fn members(&self, group: usize) -> Vec<usize> {
        (group * self.budget..(group + 1) * self.budget).collect()
    }
}

/// N ≤ 6, K ≤ 4, M ∈ {1, 2, 3} dividing N, q strictly positive.
pub fn random_instance(rng: &mut RngStream) -> Instance {
    loop {
        let experts = 1 + rng.below(6);
        let arms = 1 + rng.below(4);
        let budget = 1 + rng.below(3);
        if budget > experts || experts % budget != 0 {
            continue;
        }
        let raw: Vec<f64> = (0..experts).map(|_| 0.01 + rng.uniform()).collect();
        let z: f64 = raw.iter().sum();
        let q = raw.iter().map(|x| x / z).collect();
        let advice = (0..experts).map(|_| rng.below(arms)).collect();
        let losses = (0..arms)
            .map(|_| if rng.bernoulli(0.2) { rng.below(2) as f64 } else { rng.uniform() })
            .collect();
        return Instance {
            experts,
            arms,
            budget,
            q,
            advice,
            losses,
        };
    }
}

/// One `(group, arm)` outcome with its probability and the estimator's output.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub group: usize,
    pub arm: usize,
    pub prob: f64,
    pub expert_losses: Vec<f64>,
}

/// All outcomes of positive probability, with `Pr[i, a]` computed by
/// direct summation over the instance.
pub fn enumerate(inst: &Instance) -> Vec<Outcome> {
    let part = GroupPartition::contiguous(&inst.dims()).unwrap();
    let mut out = Vec::new();
    for i in 0..inst.groups() {
        let members = inst.members(i);
        let r_i: f64 = members.iter().map(|&h| inst.q[h]).sum();
        let group_advice: Vec<AdviceVector> = members
            .iter()
            .map(|&h| AdviceVector::basis(inst.arms, inst.advice[h]))
            .collect();
        for a in 0..inst.arms {
            let mass: f64 = members
                .iter()
                .filter(|&&h| inst.advice[h] == a)
                .map(|&h| inst.q[h])
                .sum();
            let prob = r_i * (mass / r_i);
            if prob <= 0.0 {
                continue;
            }
            let (_, y) = estimate_losses(&part, i, &group_advice, a, inst.losses[a], prob);
            out.push(Outcome {
                group: i,
                arm: a,
                prob,
                expert_losses: y.as_slice().to_vec(),
            });
        }
    }
    out
}

/// `E[Y^h]` for every expert.
pub fn expected_expert_losses(outcomes: &[Outcome], experts: usize) -> Vec<f64> {
    let mut e = vec![0.0; experts];
    for o in outcomes {
        for (eh, y) in e.iter_mut().zip(&o.expert_losses) {
            *eh += o.prob * y;
        }
    }
    e
}

/// `E[ℓ(A)]`.
pub fn expected_played_loss(inst: &Instance, outcomes: &[Outcome]) -> f64 {
    outcomes.iter().map(|o| o.prob * inst.losses[o.arm]).sum()
}

/// `E[Σ_h q(h)^α Y_h²]`.
pub fn weighted_second_moment(inst: &Instance, outcomes: &[Outcome], alpha: f64) -> f64 {
    outcomes
        .iter()
        .map(|o| {
            o.prob
                * o.expert_losses
                    .iter()
                    .zip(&inst.q)
                    .map(|(y, q)| q.powf(alpha) * y * y)
                    .sum::<f64>()
        })
        .sum()
}

pub fn distribution(inst: &Instance) -> ExpertDistribution {
    ExpertDistribution::new(inst.q.clone()).unwrap()
}

/// `q_{t+1} = q_t ∘ exp(−η y) / Z`, computed in probability space.
pub fn naive_mw(experts: usize, eta: f64, losses: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut q = vec![1.0 / experts as f64; experts];
    let mut traj = vec![q.clone()];
    for y in losses {
        let w: Vec<f64> = q.iter().zip(y).map(|(qh, yh)| qh * (-eta * yh).exp()).collect();
        let z: f64 = w.iter().sum();
        q = w.iter().map(|x| x / z).collect();
        traj.push(q.clone());
    }
    traj
}

/// Plain bisection for `Σ_h [η(L_h + C)]^{−c} = 1` on `C > 1/η − min L`.
pub fn bisect_polyinf_constant(cum: &[f64], eta: f64, c: f64) -> f64 {
    let g = |x: f64| cum.iter().map(|l| (eta * (l + x)).powf(-c)).sum::<f64>();
    let l_min = cum.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = 1.0 / eta - l_min;
    let mut hi = lo + 1.0;
    while g(hi) >= 1.0 {
        hi = lo + 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
