//! Multiarmed bandits with limited expert advice.
//!
//! `N` experts advise on `K` arms every round, but only `M` of them may be
//! consulted. The algorithm here groups the experts into `N/M` blocks,
//! samples one block and one arm per round, and feeds importance-weighted
//! loss estimates to a full-information forecaster (Multiplicative Weights
//! or PolyINF). Its expected regret grows as `√(min(K, M) N / M · T)` up to
//! logarithmic factors.
//!
//! Alongside the algorithm the crate ships the adversaries used to probe
//! it: a hidden-best-expert construction that forces `Ω(√T)` regret, its
//! exchangeable null counterpart, scripted environments, and a seeded
//! Monte-Carlo harness that writes CSV.
//!
//! ```
//! use advice_bandit::{
//!     run_episode, Algorithm, LimitedAdviceBandit, LowerBoundEnv, ProblemDims, RngStream,
//! };
//!
//! let dims = ProblemDims::new(8, 4, 2, 500).unwrap();
//! let env_rng = RngStream::new(7, 0);
//! let mut env = LowerBoundEnv::with_random_hstar(dims, 0.1, env_rng).unwrap();
//! let mut bandit =
//!     LimitedAdviceBandit::build(&dims, Algorithm::Mw, None, RngStream::new(7, 1)).unwrap();
//! let record = run_episode(&mut bandit, &mut env, dims.horizon, 0, None).unwrap();
//! assert!(record.regret <= record.alg_loss);
//! ```

pub mod bandit;
pub mod domain;
pub mod environment;
pub mod error;
pub mod fmt;
pub mod forecaster;
pub mod harness;

pub use bandit::{
    estimate_losses, group_arm_distribution, group_distribution, partition_experts, play_round,
    run_episode, AdviceSource, GroupPartition, LimitedAdviceBandit, RoundOutcome, RunRecord,
    TracePoint,
};
pub use domain::{
    effective_arms, randomized_round, AdviceMatrix, AdviceVector, LossVector, ProblemDims, Role,
    RngStream,
};
pub use environment::{
    epsilon_setting, estimate_max_load, lower_bound_step, null_step, Diagnostics, EnvSpec,
    Environment, EnvironmentStep, ExpertQueryCounters, LowerBoundConfig, LowerBoundEnv,
    MaxLoadEstimate, NullEnv, RoundGate, ScriptedEnv,
};
pub use error::{Error, Result};
pub use forecaster::{
    mw_eta, polyinf_params, Algorithm, AnyForecaster, ExpertDistribution, ExpertLossVector,
    Forecaster, MwForecaster, PolyInfForecaster, PolyInfParams,
};
pub use harness::{
    run_experiment, scaling_study, theoretical_bounds, write_outputs, ExperimentConfig,
    ExperimentResult, ScalingResult, TheoreticalBounds,
};
