//! Shared value types: problem dimensions, advice and loss vectors, seeded
//! random streams, and randomized rounding of advice to a single arm.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Size parameters of one limited-advice bandit problem.
///
/// `budget` is the number of experts whose advice may be read per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemDims {
    pub experts: usize,
    pub arms: usize,
    pub budget: usize,
    pub horizon: usize,
}

impl ProblemDims {
    pub fn new(experts: usize, arms: usize, budget: usize, horizon: usize) -> Result<Self> {
        if experts == 0 || arms == 0 || budget == 0 || horizon == 0 {
            return Err(Error::Validation(format!(
                "dimensions must be positive (N={experts}, K={arms}, M={budget}, T={horizon})"
            )));
        }
        if budget > experts {
            return Err(Error::Validation(format!(
                "advice budget M={budget} exceeds expert count N={experts}"
            )));
        }
        Ok(Self {
            experts,
            arms,
            budget,
            horizon,
        })
    }

    /// `min(K, M)`: the most distinct arms one queried group can recommend.
    pub fn effective_arms(&self) -> usize {
        effective_arms(self)
    }

    /// Number of expert groups `N / M`, or `None` when `M` does not divide `N`.
    pub fn groups(&self) -> Option<usize> {
        self.experts.is_multiple_of(self.budget).then(|| self.experts / self.budget)
    }

    pub fn with_horizon(self, horizon: usize) -> Result<Self> {
        Self::new(self.experts, self.arms, self.budget, horizon)
    }
}

pub fn effective_arms(dims: &ProblemDims) -> usize {
    dims.arms.min(dims.budget)
}

fn check_probabilities(probs: &mut [f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Validation("empty probability vector".into()));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::Validation(format!("entry {i} is {p}, not a probability")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::Validation(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

/// One expert's recommendation: a probability distribution over the arms.
#[derive(Debug, Clone, PartialEq)]
pub struct AdviceVector {
    probs: Vec<f64>,
}

impl AdviceVector {
    /// Validates and (within [`PROB_SUM_TOL`]) renormalizes `probs`.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&mut probs)?;
        Ok(Self { probs })
    }

    /// The standard basis vector recommending `arm` out of `arms`.
    pub fn basis(arms: usize, arm: usize) -> Self {
        assert!(arm < arms, "arm {arm} out of range for {arms} arms");
        let mut probs = vec![0.0; arms];
        probs[arm] = 1.0;
        Self { probs }
    }

    pub fn arms(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The recommended arm if this is a standard basis vector.
    pub fn basis_index(&self) -> Option<usize> {
        let mut found = None;
        for (a, &p) in self.probs.iter().enumerate() {
            if p == 1.0 && found.is_none() {
                found = Some(a);
            } else if p != 0.0 {
                return None;
            }
        }
        found
    }

    /// `ξ · ℓ`, the expected loss of following this advice.
    pub fn dot(&self, losses: &[f64]) -> f64 {
        self.probs.iter().zip(losses).map(|(p, l)| p * l).sum()
    }
}

/// Per-arm losses for one round, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    losses: Vec<f64>,
}

impl LossVector {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::Validation("empty loss vector".into()));
        }
        if let Some((a, l)) = losses
            .iter()
            .enumerate()
            .find(|(_, l)| !(0.0..=1.0).contains(*l))
        {
            return Err(Error::Validation(format!("loss of arm {a} is {l}, outside [0, 1]")));
        }
        Ok(Self { losses })
    }

    pub fn constant(arms: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; arms])
    }

    pub fn arms(&self) -> usize {
        self.losses.len()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.losses[arm]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.losses
    }
}

/// Advice of all `N` experts for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct AdviceMatrix {
    rows: Vec<AdviceVector>,
}

impl AdviceMatrix {
    pub fn new(rows: Vec<AdviceVector>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Validation("advice matrix has no experts".into()));
        };
        let arms = first.arms();
        if rows.iter().any(|r| r.arms() != arms) {
            return Err(Error::Validation("advice rows disagree on arm count".into()));
        }
        Ok(Self { rows })
    }

    /// Basis advice: expert `h` recommends `choices[h]`.
    pub fn from_choices(arms: usize, choices: &[usize]) -> Result<Self> {
        if let Some(&bad) = choices.iter().find(|&&a| a >= arms) {
            return Err(Error::Validation(format!("recommended arm {bad} out of range")));
        }
        Self::new(choices.iter().map(|&a| AdviceVector::basis(arms, a)).collect())
    }

    pub fn experts(&self) -> usize {
        self.rows.len()
    }

    pub fn arms(&self) -> usize {
        self.rows[0].arms()
    }

    pub fn row(&self, expert: usize) -> &AdviceVector {
        &self.rows[expert]
    }

    pub fn rows(&self) -> &[AdviceVector] {
        &self.rows
    }
}

/// Which party a random stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Environment,
    Algorithm,
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose 64-bit stream selector keeps distinct ids
/// independent under a single master seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Replication `run` draws environment randomness from stream `2 run`
    /// and algorithm randomness from stream `2 run + 1`.
    pub fn for_run(seed: u64, run: u64, role: Role) -> Self {
        let id = match role {
            Role::Environment => 2 * run,
            Role::Algorithm => 2 * run + 1,
        };
        Self::new(seed, id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Inverse-CDF sample from `probs` using one uniform draw; the first
    /// index whose cumulative mass exceeds the draw wins.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        sample_index(probs, u)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Index selected by the uniform value `u` under inverse-CDF order.
///
/// Falls back to the last index with positive mass when rounding leaves
/// the total slightly below `u`.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("probability vector with no mass")
}

/// Replaces a general advice vector by a basis vector `e_a` with `a`
/// drawn from the advice itself, so that the rounded vector is unbiased.
/// Basis inputs come back unchanged and consume no randomness.
pub fn randomized_round(advice: &AdviceVector, rng: &mut RngStream) -> AdviceVector {
    if advice.basis_index().is_some() {
        return advice.clone();
    }
    let a = rng.categorical(advice.probs());
    AdviceVector::basis(advice.arms(), a)
}
