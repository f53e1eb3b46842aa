//! Adversaries.
//!
//! Every environment produces the full advice matrix and loss vector for a
//! round. The algorithm only reaches them through a [`RoundGate`], which
//! hands out at most `M` advice rows and one arm's loss per round.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bandit::{AdviceSource, GroupPartition, RoundOutcome};
use crate::domain::{AdviceMatrix, AdviceVector, LossVector, ProblemDims, RngStream};
use crate::error::{Error, Result};
use crate::fmt::fmt_g17;

/// Largest gap handed out by [`epsilon_setting`].
pub const EPSILON_CAP: f64 = 0.25;

/// Default trial count for [`estimate_max_load`].
pub const DEFAULT_MAX_LOAD_TRIALS: usize = 100_000;

/// One round as chosen by the adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentStep {
    pub advice: AdviceMatrix,
    pub losses: LossVector,
}

pub trait Environment {
    fn experts(&self) -> usize;
    fn arms(&self) -> usize;

    /// Round `t`, counted from 1.
    fn step(&mut self, t: usize) -> Result<EnvironmentStep>;

    /// The expert the environment secretly favours, if any.
    fn hidden_best(&self) -> Option<usize> {
        None
    }
}

/// Per-round view of an [`EnvironmentStep`] handed to the algorithm.
///
/// One advice query of at most `budget` experts and one loss observation
/// are allowed; anything more is an error.
#[derive(Debug)]
pub struct RoundGate<'a> {
    step: &'a EnvironmentStep,
    budget: usize,
    queried: bool,
    observed: bool,
}

impl<'a> RoundGate<'a> {
    pub fn new(step: &'a EnvironmentStep, budget: usize) -> Self {
        Self {
            step,
            budget,
            queried: false,
            observed: false,
        }
    }
}

impl AdviceSource for RoundGate<'_> {
    fn query_advice(&mut self, experts: &[usize]) -> Result<Vec<AdviceVector>> {
        if self.queried {
            return Err(Error::Contract("advice already queried this round".into()));
        }
        if experts.len() > self.budget {
            return Err(Error::Contract(format!(
                "queried {} experts with a budget of {}",
                experts.len(),
                self.budget
            )));
        }
        let n = self.step.advice.experts();
        if let Some(&h) = experts.iter().find(|&&h| h >= n) {
            return Err(Error::Contract(format!("no expert {h}")));
        }
        self.queried = true;
        Ok(experts.iter().map(|&h| self.step.advice.row(h).clone()).collect())
    }

    fn observe_loss(&mut self, arm: usize) -> Result<f64> {
        if self.observed {
            return Err(Error::Contract("loss already observed this round".into()));
        }
        if arm >= self.step.losses.arms() {
            return Err(Error::Contract(format!("no arm {arm}")));
        }
        self.observed = true;
        Ok(self.step.losses.get(arm))
    }
}

/// Parameters of the lower-bound adversary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundConfig {
    pub hstar: usize,
    pub epsilon: f64,
    pub dims: ProblemDims,
}

impl LowerBoundConfig {
    pub fn new(dims: ProblemDims, hstar: usize, epsilon: f64) -> Result<Self> {
        if hstar >= dims.experts {
            return Err(Error::Config(format!(
                "hidden expert {hstar} out of range for N={}",
                dims.experts
            )));
        }
        check_gap(epsilon)?;
        Ok(Self { hstar, epsilon, dims })
    }
}

fn check_gap(epsilon: f64) -> Result<()> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::Parameter(format!("gap epsilon must lie in [0, 1/2), got {epsilon}")));
    }
    Ok(())
}

fn uniform_advice(dims: &ProblemDims, rng: &mut RngStream) -> (AdviceMatrix, Vec<usize>) {
    let choices: Vec<usize> = (0..dims.experts).map(|_| rng.below(dims.arms)).collect();
    let advice = AdviceMatrix::from_choices(dims.arms, &choices).expect("choices are in range");
    (advice, choices)
}

fn bernoulli_loss(rng: &mut RngStream, p: f64) -> f64 {
    if rng.bernoulli(p) {
        1.0
    } else {
        0.0
    }
}

/// Every expert recommends an independent uniform arm; the arm recommended
/// by `hstar` has loss `Bernoulli(1/2 − ε)`, every other arm `Bernoulli(1/2)`.
pub fn lower_bound_step(cfg: &LowerBoundConfig, rng: &mut RngStream) -> EnvironmentStep {
    let (advice, choices) = uniform_advice(&cfg.dims, rng);
    let favoured = choices[cfg.hstar];
    let losses = (0..cfg.dims.arms)
        .map(|a| {
            let p = if a == favoured { 0.5 - cfg.epsilon } else { 0.5 };
            bernoulli_loss(rng, p)
        })
        .collect();
    EnvironmentStep {
        advice,
        losses: LossVector::new(losses).expect("bernoulli losses"),
    }
}

/// Uniform random advice; every arm's loss i.i.d. `Bernoulli(1/2 − ε/K)`.
pub fn null_step(dims: &ProblemDims, epsilon: f64, rng: &mut RngStream) -> EnvironmentStep {
    let (advice, _) = uniform_advice(dims, rng);
    let p = null_loss_mean(dims.arms, epsilon);
    let losses = (0..dims.arms).map(|_| bernoulli_loss(rng, p)).collect();
    EnvironmentStep {
        advice,
        losses: LossVector::new(losses).expect("bernoulli losses"),
    }
}

/// Marginal loss mean of any arm under either construction, `1/2 − ε/K`.
pub fn null_loss_mean(arms: usize, epsilon: f64) -> f64 {
    0.5 - epsilon / arms as f64
}

#[derive(Debug, Clone)]
pub struct LowerBoundEnv {
    cfg: LowerBoundConfig,
    rng: RngStream,
}

impl LowerBoundEnv {
    pub fn new(cfg: LowerBoundConfig, rng: RngStream) -> Self {
        Self { cfg, rng }
    }

    /// Draws the hidden expert uniformly from `rng`, then uses `rng` for
    /// all later rounds.
    pub fn with_random_hstar(dims: ProblemDims, epsilon: f64, mut rng: RngStream) -> Result<Self> {
        let hstar = rng.below(dims.experts);
        Ok(Self::new(LowerBoundConfig::new(dims, hstar, epsilon)?, rng))
    }

    pub fn config(&self) -> &LowerBoundConfig {
        &self.cfg
    }
}

impl Environment for LowerBoundEnv {
    fn experts(&self) -> usize {
        self.cfg.dims.experts
    }

    fn arms(&self) -> usize {
        self.cfg.dims.arms
    }

    fn step(&mut self, _t: usize) -> Result<EnvironmentStep> {
        Ok(lower_bound_step(&self.cfg, &mut self.rng))
    }

    fn hidden_best(&self) -> Option<usize> {
        Some(self.cfg.hstar)
    }
}

#[derive(Debug, Clone)]
pub struct NullEnv {
    dims: ProblemDims,
    epsilon: f64,
    rng: RngStream,
}

impl NullEnv {
    pub fn new(dims: ProblemDims, epsilon: f64, rng: RngStream) -> Result<Self> {
        check_gap(epsilon)?;
        Ok(Self { dims, epsilon, rng })
    }
}

impl Environment for NullEnv {
    fn experts(&self) -> usize {
        self.dims.experts
    }

    fn arms(&self) -> usize {
        self.dims.arms
    }

    fn step(&mut self, _t: usize) -> Result<EnvironmentStep> {
        Ok(null_step(&self.dims, self.epsilon, &mut self.rng))
    }
}

/// A precomputed table of advice and losses, replayed verbatim.
///
/// File form is CSV with header `t,a_1,...,a_N,l_1,...,l_K`; `a_h` is the
/// 1-based arm expert `h` recommends and `l_k` the loss of arm `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedEnv {
    experts: usize,
    arms: usize,
    choices: Vec<Vec<usize>>,
    steps: Vec<EnvironmentStep>,
}

impl ScriptedEnv {
    /// Rows of (0-based recommended arm per expert, loss per arm).
    pub fn new(rows: Vec<(Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let Some((first_choices, first_losses)) = rows.first() else {
            return Err(Error::Validation("script has no rounds".into()));
        };
        let experts = first_choices.len();
        let arms = first_losses.len();
        if experts == 0 {
            return Err(Error::Validation("script has no experts".into()));
        }
        let mut choices = Vec::with_capacity(rows.len());
        let mut steps = Vec::with_capacity(rows.len());
        for (t, (c, l)) in rows.into_iter().enumerate() {
            if c.len() != experts || l.len() != arms {
                return Err(Error::Validation(format!("script round {} has the wrong width", t + 1)));
            }
            steps.push(EnvironmentStep {
                advice: AdviceMatrix::from_choices(arms, &c)?,
                losses: LossVector::new(l)?,
            });
            choices.push(c);
        }
        Ok(Self {
            experts,
            arms,
            choices,
            steps,
        })
    }

    /// The same step repeated `rounds` times.
    pub fn constant(choices: Vec<usize>, losses: Vec<f64>, rounds: usize) -> Result<Self> {
        Self::new(vec![(choices, losses); rounds])
    }

    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    /// Step `t` (1-based) of the script.
    pub fn fixed_env_step(&self, t: usize) -> Result<&EnvironmentStep> {
        t.checked_sub(1)
            .and_then(|i| self.steps.get(i))
            .ok_or_else(|| {
                Error::Config(format!("round {t} outside script of {} rounds", self.rounds()))
            })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Script {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(err(1, "header must start with `t`".into()));
        }
        let experts = cols.iter().filter(|c| c.starts_with("a_")).count();
        let arms = cols.iter().filter(|c| c.starts_with("l_")).count();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=experts).map(|h| format!("a_{h}")))
            .chain((1..=arms).map(|k| format!("l_{k}")))
            .collect();
        if cols != expected || experts == 0 || arms == 0 {
            return Err(err(1, format!("expected header `{}`", expected.join(","))));
        }

        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != expected.len() {
                return Err(err(lineno, format!("expected {} fields, got {}", expected.len(), fields.len())));
            }
            let t: usize = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad round index `{}`", fields[0])))?;
            if t != rows.len() + 1 {
                return Err(err(lineno, format!("rounds must run 1, 2, ...; found {t}")));
            }
            let choices = fields[1..=experts]
                .iter()
                .map(|f| match f.parse::<usize>() {
                    Ok(a) if (1..=arms).contains(&a) => Ok(a - 1),
                    _ => Err(err(lineno, format!("advice `{f}` is not an arm in 1..={arms}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let losses = fields[experts + 1..]
                .iter()
                .map(|f| match f.parse::<f64>() {
                    Ok(l) if (0.0..=1.0).contains(&l) => Ok(l),
                    _ => Err(err(lineno, format!("loss `{f}` is not in [0, 1]"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((choices, losses));
        }
        if rows.is_empty() {
            return Err(err(1, "script has no rounds".into()));
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for h in 1..=self.experts {
            let _ = write!(out, ",a_{h}");
        }
        for k in 1..=self.arms {
            let _ = write!(out, ",l_{k}");
        }
        out.push('\n');
        for (t, (choices, step)) in self.choices.iter().zip(&self.steps).enumerate() {
            let _ = write!(out, "{}", t + 1);
            for a in choices {
                let _ = write!(out, ",{}", a + 1);
            }
            for l in step.losses.as_slice() {
                let _ = write!(out, ",{}", fmt_g17(*l));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

impl Environment for ScriptedEnv {
    fn experts(&self) -> usize {
        self.experts
    }

    fn arms(&self) -> usize {
        self.arms
    }

    fn step(&mut self, t: usize) -> Result<EnvironmentStep> {
        self.fixed_env_step(t).cloned()
    }
}

/// Monte-Carlo estimate of the expected maximum bin load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxLoadEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl MaxLoadEstimate {
    /// Order-of-magnitude reference `max(ln K, M/K)`.
    pub fn asymptotic(arms: usize, balls: usize) -> f64 {
        (arms as f64).ln().max(balls as f64 / arms as f64)
    }
}

/// Throws `balls` balls uniformly into `bins` bins `trials` times and
/// averages the fullest bin's count.
pub fn estimate_max_load(bins: usize, balls: usize, trials: usize, rng: &mut RngStream) -> Result<MaxLoadEstimate> {
    if bins == 0 || balls == 0 || trials == 0 {
        return Err(Error::Parameter(format!(
            "max load needs positive bins, balls and trials (got {bins}, {balls}, {trials})"
        )));
    }
    if bins == 1 || balls == 1 {
        let exact = if bins == 1 { balls } else { 1 } as f64;
        return Ok(MaxLoadEstimate {
            mean: exact,
            stderr: 0.0,
            trials,
        });
    }
    let mut counts = vec![0u32; bins];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..balls {
            counts[rng.below(bins)] += 1;
        }
        let max = f64::from(*counts.iter().max().expect("bins > 0"));
        sum += max;
        sum_sq += max * max;
    }
    let n = trials as f64;
    let mean = sum / n;
    let stderr = if trials > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(MaxLoadEstimate { mean, stderr, trials })
}

/// Gap `ε = (1/8) √(N / (f T))`, capped at [`EPSILON_CAP`].
pub fn epsilon_setting(dims: &ProblemDims, max_load: f64) -> Result<f64> {
    if !(max_load.is_finite() && max_load > 0.0) {
        return Err(Error::Parameter(format!("max load must be positive, got {max_load}")));
    }
    let eps = (dims.experts as f64 / (max_load * dims.horizon as f64)).sqrt() / 8.0;
    if eps > EPSILON_CAP {
        log::warn!("gap {eps} exceeds {EPSILON_CAP} at T={}; capping", dims.horizon);
        return Ok(EPSILON_CAP);
    }
    Ok(eps)
}

/// Counters for one candidate hidden expert `h*`: rounds where `h*` was
/// queried (`l_count`) and rounds where additionally the played arm was
/// `h*`'s recommendation (`n_count`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub l_count: u64,
    pub n_count: u64,
}

impl Diagnostics {
    pub fn record(&mut self, hstar: usize, part: &GroupPartition, outcome: &RoundOutcome) {
        let (queried, matched) = query_match(hstar, part, outcome);
        self.l_count += u64::from(queried);
        self.n_count += u64::from(matched);
    }
}

fn query_match(expert: usize, part: &GroupPartition, outcome: &RoundOutcome) -> (bool, bool) {
    if part.group_of(expert) != outcome.sampled_group {
        return (false, false);
    }
    let pos = part
        .group(outcome.sampled_group)
        .iter()
        .position(|&h| h == expert)
        .expect("expert belongs to its group");
    let matched = outcome.group_advice[pos].basis_index() == Some(outcome.played_arm);
    (true, matched)
}

/// [`Diagnostics`] for every expert at once, for averaging over `h*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertQueryCounters {
    pub per_expert: Vec<Diagnostics>,
}

impl ExpertQueryCounters {
    pub fn new(experts: usize) -> Self {
        Self {
            per_expert: vec![Diagnostics::default(); experts],
        }
    }

    pub fn record(&mut self, part: &GroupPartition, outcome: &RoundOutcome) {
        for (h, d) in self.per_expert.iter_mut().enumerate() {
            d.record(h, part, outcome);
        }
    }

    pub fn total_l(&self) -> u64 {
        self.per_expert.iter().map(|d| d.l_count).sum()
    }

    pub fn total_n(&self) -> u64 {
        self.per_expert.iter().map(|d| d.n_count).sum()
    }
}

/// Where an experiment's environment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    LowerBound,
    Null,
    Script(PathBuf),
}

impl std::str::FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower_bound" => Ok(EnvSpec::LowerBound),
            "null" => Ok(EnvSpec::Null),
            _ => match s.strip_prefix("script:") {
                Some(path) if !path.is_empty() => Ok(EnvSpec::Script(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "unknown environment `{s}` (expected lower_bound, null or script:<path>)"
                ))),
            },
        }
    }
}

impl std::fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvSpec::LowerBound => f.write_str("lower_bound"),
            EnvSpec::Null => f.write_str("null"),
            EnvSpec::Script(p) => write!(f, "script:{}", p.display()),
        }
    }
}
