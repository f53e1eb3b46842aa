//! The limited-advice bandit algorithm.
//!
//! Experts are split into `R = N/M` fixed groups of `M`. Each round the
//! algorithm samples a group `I_t` with probability equal to the group's
//! forecaster mass, reads the advice of that group only, samples an arm
//! `A_t` from the group's advice mixture, and charges every queried expert
//! the importance-weighted estimate `ξ^h(A_t) ℓ_t(A_t) / Pr_t[I_t, A_t]`.

use crate::domain::{randomized_round, AdviceVector, ProblemDims, RngStream};
use crate::environment::{Diagnostics, Environment, RoundGate};
use crate::error::{Error, Result};
use crate::forecaster::{Algorithm, AnyForecaster, ExpertDistribution, ExpertLossVector, Forecaster};

/// Lower clamp on `Pr_t[I_t, A_t]` before dividing.
pub const PROB_FLOOR: f64 = 1e-300;

/// Disjoint groups of `M` experts covering all `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl GroupPartition {
    /// Contiguous blocks `[0, M)`, `[M, 2M)`, ...
    pub fn contiguous(dims: &ProblemDims) -> Result<Self> {
        let order: Vec<usize> = (0..dims.experts).collect();
        Self::from_order(dims, &order)
    }

    /// Blocks of a seeded random permutation of the experts.
    pub fn shuffled(dims: &ProblemDims, rng: &mut RngStream) -> Result<Self> {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..dims.experts).collect();
        order.shuffle(rng);
        Self::from_order(dims, &order)
    }

    fn from_order(dims: &ProblemDims, order: &[usize]) -> Result<Self> {
        if dims.groups().is_none() {
            return Err(Error::Config(format!(
                "advice budget M={} must divide the expert count N={}; pad the expert set or pick another M",
                dims.budget, dims.experts
            )));
        }
        let groups: Vec<Vec<usize>> = order.chunks(dims.budget).map(<[usize]>::to_vec).collect();
        let mut group_of = vec![0; dims.experts];
        for (i, g) in groups.iter().enumerate() {
            for &h in g {
                group_of[h] = i;
            }
        }
        Ok(Self { groups, group_of })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, expert: usize) -> usize {
        self.group_of[expert]
    }

    pub fn experts(&self) -> usize {
        self.group_of.len()
    }
}

pub fn partition_experts(dims: &ProblemDims) -> Result<GroupPartition> {
    GroupPartition::contiguous(dims)
}

/// `r(i) = Σ_{h ∈ B_i} q(h)`.
pub fn group_distribution(q: &ExpertDistribution, part: &GroupPartition) -> Vec<f64> {
    part.groups()
        .iter()
        .map(|g| g.iter().map(|&h| q.get(h)).sum())
        .collect()
}

/// `p(a) = Σ_{h ∈ B_i} q(h) ξ^h(a) / r_i`, with `advice[j]` belonging to `group[j]`.
///
/// When `r_i = 0` the result is uniform over the arms the group recommends.
pub fn group_arm_distribution(
    q: &ExpertDistribution,
    group: &[usize],
    advice: &[AdviceVector],
    r_i: f64,
) -> Vec<f64> {
    assert_eq!(group.len(), advice.len(), "one advice row per group member");
    let arms = advice.first().map_or(0, AdviceVector::arms);
    let mut p = vec![0.0; arms];
    if r_i > 0.0 {
        for (&h, xi) in group.iter().zip(advice) {
            let w = q.get(h) / r_i;
            for (pa, x) in p.iter_mut().zip(xi.probs()) {
                *pa += w * x;
            }
        }
    } else {
        for xi in advice {
            for (pa, x) in p.iter_mut().zip(xi.probs()) {
                if *x > 0.0 {
                    *pa = 1.0;
                }
            }
        }
        let active = p.iter().filter(|x| **x > 0.0).count() as f64;
        p.iter_mut().for_each(|x| *x /= active);
    }
    p
}

/// Importance-weighted estimates for one realized `(group, arm)` outcome.
///
/// Returns the arm-loss estimate (nonzero only at `played_arm`) and the
/// expert losses `Y^h = ξ^h · ℓ̂`, nonzero only inside the sampled group.
pub fn estimate_losses(
    part: &GroupPartition,
    group: usize,
    group_advice: &[AdviceVector],
    played_arm: usize,
    observed_loss: f64,
    prob: f64,
) -> (Vec<f64>, ExpertLossVector) {
    let arms = group_advice[0].arms();
    let mut arm_est = vec![0.0; arms];
    arm_est[played_arm] = observed_loss / prob.max(PROB_FLOOR);
    let mut y = vec![0.0; part.experts()];
    for (&h, xi) in part.group(group).iter().zip(group_advice) {
        y[h] = xi.probs()[played_arm] * arm_est[played_arm];
    }
    (arm_est, ExpertLossVector::new(y).expect("estimates are nonnegative"))
}

/// Access the algorithm has to the environment in one round: the advice of
/// the experts it names, and the loss of the arm it plays.
pub trait AdviceSource {
    fn query_advice(&mut self, experts: &[usize]) -> Result<Vec<AdviceVector>>;
    fn observe_loss(&mut self, arm: usize) -> Result<f64>;
}

/// Everything the algorithm did and saw in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub sampled_group: usize,
    pub played_arm: usize,
    pub observed_loss: f64,
    /// `Pr_t[I_t, A_t] = r_t(I_t) p_t^{I_t}(A_t)`.
    pub probability: f64,
    pub estimated_arm_losses: Vec<f64>,
    pub expert_losses: ExpertLossVector,
    /// Rounded advice of the queried group, aligned with `part.group(sampled_group)`.
    pub group_advice: Vec<AdviceVector>,
}

/// One round of the algorithm against `source`.
pub fn play_round(
    q: &ExpertDistribution,
    part: &GroupPartition,
    source: &mut dyn AdviceSource,
    rng: &mut RngStream,
) -> Result<RoundOutcome> {
    let r = group_distribution(q, part);
    let group = rng.categorical(&r);
    let members = part.group(group);
    let raw = source.query_advice(members)?;
    if raw.len() != members.len() {
        return Err(Error::Internal(format!(
            "asked for {} advice rows, received {}",
            members.len(),
            raw.len()
        )));
    }
    let group_advice: Vec<AdviceVector> = raw.iter().map(|xi| randomized_round(xi, rng)).collect();
    debug_assert!(r[group] > 0.0, "sampled a group with zero mass");
    let p = group_arm_distribution(q, members, &group_advice, r[group]);
    let arm = rng.categorical(&p);
    let observed_loss = source.observe_loss(arm)?;
    let probability = r[group] * p[arm];
    if probability <= 0.0 {
        return Err(Error::Internal(format!(
            "sampled group {group}, arm {arm} with zero probability"
        )));
    }
    debug_assert!(probability >= PROB_FLOOR, "probability floor binds");
    let (estimated_arm_losses, expert_losses) =
        estimate_losses(part, group, &group_advice, arm, observed_loss, probability);
    Ok(RoundOutcome {
        sampled_group: group,
        played_arm: arm,
        observed_loss,
        probability,
        estimated_arm_losses,
        expert_losses,
        group_advice,
    })
}

/// The algorithm as a stateful agent: forecaster, partition and its own
/// random stream.
#[derive(Debug, Clone)]
pub struct LimitedAdviceBandit {
    forecaster: AnyForecaster,
    partition: GroupPartition,
    rng: RngStream,
}

impl LimitedAdviceBandit {
    pub fn new(forecaster: AnyForecaster, partition: GroupPartition, rng: RngStream) -> Result<Self> {
        if forecaster.experts() != partition.experts() {
            return Err(Error::Config(format!(
                "forecaster has {} experts, partition {}",
                forecaster.experts(),
                partition.experts()
            )));
        }
        Ok(Self {
            forecaster,
            partition,
            rng,
        })
    }

    /// Tuned backend, contiguous partition.
    pub fn build(
        dims: &ProblemDims,
        algorithm: Algorithm,
        eta_override: Option<f64>,
        rng: RngStream,
    ) -> Result<Self> {
        let partition = partition_experts(dims)?;
        let forecaster = algorithm.build(dims, eta_override)?;
        Self::new(forecaster, partition, rng)
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn forecaster(&self) -> &AnyForecaster {
        &self.forecaster
    }

    pub fn distribution(&self) -> ExpertDistribution {
        self.forecaster.distribution()
    }

    /// Plays one round and feeds the expert-loss estimates to the forecaster.
    pub fn step(&mut self, source: &mut dyn AdviceSource) -> Result<RoundOutcome> {
        let q = self.forecaster.distribution();
        let outcome = play_round(&q, &self.partition, source, &mut self.rng)?;
        self.forecaster.update(&outcome.expert_losses)?;
        Ok(outcome)
    }
}

/// Logging stride: every round up to 10^4 rounds, `⌈T / 10^4⌉` beyond.
pub fn trace_stride(horizon: usize) -> usize {
    const FULL: usize = 10_000;
    if horizon <= FULL {
        1
    } else {
        horizon.div_ceil(FULL)
    }
}

/// Cumulative quantities at one logged round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: usize,
    pub alg_cum_loss: f64,
    pub best_expert_cum_loss: f64,
    pub regret: f64,
    pub l_count: u64,
    pub n_count: u64,
}

/// One replication: strided trace plus final totals.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: u64,
    pub trace: Vec<TracePoint>,
    pub alg_loss: f64,
    pub expert_losses: Vec<f64>,
    /// Regret against the realized best expert.
    pub regret: f64,
    /// Hidden best expert of a lower-bound environment.
    pub hidden_best: Option<usize>,
    /// Regret against `hidden_best`, when there is one.
    pub hidden_best_regret: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl RunRecord {
    pub fn best_expert(&self) -> usize {
        argmin(&self.expert_losses)
    }
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// Runs `T` rounds of `bandit` against `env`. Expert losses `Σ ξ^h · ℓ_t`
/// are tallied from the environment's full disclosure, which the algorithm
/// never sees. Diagnostics are counted for `env.hidden_best()`, or for
/// `diag_expert` when the environment has none.
pub fn run_episode(
    bandit: &mut LimitedAdviceBandit,
    env: &mut dyn Environment,
    horizon: usize,
    run: u64,
    diag_expert: Option<usize>,
) -> Result<RunRecord> {
    let experts = bandit.partition.experts();
    if env.experts() != experts {
        return Err(Error::Config(format!(
            "environment has {} experts, algorithm {experts}",
            env.experts()
        )));
    }
    let budget = bandit.partition.group(0).len();
    let stride = trace_stride(horizon);
    let hidden_best = env.hidden_best();
    let tracked = hidden_best.or(diag_expert);

    let mut alg_loss = 0.0;
    let mut expert_losses = vec![0.0; experts];
    let mut diagnostics = Diagnostics::default();
    let mut trace = Vec::with_capacity(horizon / stride + 1);

    for t in 1..=horizon {
        let step = env.step(t)?;
        let outcome = {
            let mut gate = RoundGate::new(&step, budget);
            bandit.step(&mut gate)?
        };
        alg_loss += outcome.observed_loss;
        for (total, xi) in expert_losses.iter_mut().zip(step.advice.rows()) {
            *total += xi.dot(step.losses.as_slice());
        }
        if let Some(h) = tracked {
            diagnostics.record(h, &bandit.partition, &outcome);
        }
        if t % stride == 0 || t == horizon {
            let best = expert_losses.iter().copied().fold(f64::INFINITY, f64::min);
            trace.push(TracePoint {
                t,
                alg_cum_loss: alg_loss,
                best_expert_cum_loss: best,
                regret: alg_loss - best,
                l_count: diagnostics.l_count,
                n_count: diagnostics.n_count,
            });
        }
    }

    let best = expert_losses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RunRecord {
        run,
        trace,
        alg_loss,
        regret: alg_loss - best,
        hidden_best_regret: hidden_best.map(|h| alg_loss - expert_losses[h]),
        hidden_best,
        expert_losses,
        diagnostics,
    })
}
