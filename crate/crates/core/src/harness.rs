//! Seeded Monte-Carlo experiments: replications, theoretical bound curves,
//! CSV output and the √T scaling study.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bandit::{run_episode, LimitedAdviceBandit, RunRecord};
use crate::domain::{ProblemDims, Role, RngStream};
use crate::environment::{
    epsilon_setting, estimate_max_load, EnvSpec, Environment, LowerBoundEnv, MaxLoadEstimate,
    NullEnv, ScriptedEnv, DEFAULT_MAX_LOAD_TRIALS,
};
use crate::error::{Error, Result};
use crate::fmt::fmt_g17;
use crate::forecaster::Algorithm;

/// Stream id reserved for the max-load estimate of an experiment.
pub const MAX_LOAD_STREAM: u64 = u64::MAX;

pub const TIMESERIES_HEADER: &str = "run,t,alg_cum_loss,best_expert_cum_loss,regret,L_count,N_count";
pub const SUMMARY_HEADER: &str =
    "algo,N,K,M,T,runs,mean_regret,stderr,mw_bound,polyinf_bound,lower_bound_estimate";
pub const SCALING_HEADER: &str = "T,mean_regret,stderr,mw_bound,polyinf_bound,lower_bound_estimate";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: ProblemDims,
    pub algorithm: Algorithm,
    pub env: EnvSpec,
    pub runs: usize,
    pub seed: u64,
    pub eta_override: Option<f64>,
    pub epsilon_override: Option<f64>,
    pub workers: usize,
    pub max_load_trials: usize,
}

impl ExperimentConfig {
    pub fn new(dims: ProblemDims, algorithm: Algorithm, env: EnvSpec) -> Self {
        Self {
            dims,
            algorithm,
            env,
            runs: 1,
            seed: 0,
            eta_override: None,
            epsilon_override: None,
            workers: 1,
            max_load_trials: DEFAULT_MAX_LOAD_TRIALS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if self.max_load_trials == 0 {
            return Err(Error::Config("max-load trials must be positive".into()));
        }
        if let Some(eta) = self.eta_override {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::Config(format!("--eta must be positive, got {eta}")));
            }
        }
        if let Some(eps) = self.epsilon_override {
            if !(0.0..0.5).contains(&eps) {
                return Err(Error::Config(format!("--epsilon must lie in [0, 1/2), got {eps}")));
            }
        }
        if self.dims.groups().is_none() {
            return Err(Error::Config(format!(
                "advice budget M={} must divide N={}; pad the expert set or pick another M",
                self.dims.budget, self.dims.experts
            )));
        }
        Ok(())
    }
}

/// Regret guarantees of both backends and the lower-bound construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalBounds {
    /// `√(2 K′ N ln N / M · T)`
    pub mw: f64,
    /// `4 √(K′ N ln(8M/K′) / M · T)`
    pub polyinf: f64,
    /// `(1/32) √(N / f(K, M) · T)`
    pub lower: f64,
}

/// Bounds for `dims` given a max-load value `f(K, M)`. A single expert
/// has zero regret, so every bound is reported as 0.
pub fn theoretical_bounds(dims: &ProblemDims, max_load: f64) -> TheoreticalBounds {
    if dims.experts == 1 {
        return TheoreticalBounds {
            mw: 0.0,
            polyinf: 0.0,
            lower: 0.0,
        };
    }
    let n = dims.experts as f64;
    let m = dims.budget as f64;
    let k_eff = dims.effective_arms() as f64;
    let t = dims.horizon as f64;
    TheoreticalBounds {
        mw: (2.0 * k_eff * n * n.ln() / m * t).sqrt(),
        polyinf: 4.0 * (k_eff * n * (8.0 * m / k_eff).ln() / m * t).sqrt(),
        lower: (n / max_load * t).sqrt() / 32.0,
    }
}

/// Max-load estimate used by experiments with master seed `seed`.
pub fn experiment_max_load(dims: &ProblemDims, trials: usize, seed: u64) -> Result<MaxLoadEstimate> {
    estimate_max_load(dims.arms, dims.budget, trials, &mut RngStream::new(seed, MAX_LOAD_STREAM))
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub epsilon: f64,
    pub max_load: MaxLoadEstimate,
    pub bounds: TheoreticalBounds,
    pub records: Vec<RunRecord>,
    pub mean_regret: f64,
    pub stderr: f64,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

enum EnvSource {
    LowerBound(f64),
    Null(f64),
    Script(ScriptedEnv),
}

impl EnvSource {
    fn instantiate(&self, dims: &ProblemDims, rng: RngStream) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvSource::LowerBound(eps) => Box::new(LowerBoundEnv::with_random_hstar(*dims, *eps, rng)?),
            EnvSource::Null(eps) => Box::new(NullEnv::new(*dims, *eps, rng)?),
            EnvSource::Script(s) => Box::new(s.clone()),
        })
    }
}

fn run_one(cfg: &ExperimentConfig, source: &EnvSource, run: u64) -> Result<RunRecord> {
    let mut env = source.instantiate(&cfg.dims, RngStream::for_run(cfg.seed, run, Role::Environment))?;
    let alg_rng = RngStream::for_run(cfg.seed, run, Role::Algorithm);
    let mut bandit = LimitedAdviceBandit::build(&cfg.dims, cfg.algorithm, cfg.eta_override, alg_rng)?;
    // exchangeable environments: track expert 0 as the reference h*
    run_episode(&mut bandit, env.as_mut(), cfg.dims.horizon, run, Some(0))
}

/// Runs `cfg.runs` independent replications. Results come back in run
/// order whatever the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let dims = cfg.dims;
    let max_load = experiment_max_load(&dims, cfg.max_load_trials, cfg.seed)?;
    let epsilon = match cfg.epsilon_override {
        Some(eps) => eps,
        None => epsilon_setting(&dims, max_load.mean)?,
    };
    let source = match &cfg.env {
        EnvSpec::LowerBound => EnvSource::LowerBound(epsilon),
        EnvSpec::Null => EnvSource::Null(epsilon),
        EnvSpec::Script(path) => {
            let script = ScriptedEnv::load(path)?;
            if script.experts() != dims.experts || script.arms() != dims.arms {
                return Err(Error::Config(format!(
                    "script {} has N={}, K={}; experiment has N={}, K={}",
                    path.display(),
                    script.experts(),
                    script.arms(),
                    dims.experts,
                    dims.arms
                )));
            }
            if script.rounds() < dims.horizon {
                return Err(Error::Config(format!(
                    "script {} has {} rounds, fewer than T={}",
                    path.display(),
                    script.rounds(),
                    dims.horizon
                )));
            }
            EnvSource::Script(script)
        }
    };
    // surfaces algorithm configuration errors before any round is played
    Algorithm::build(&cfg.algorithm, &dims, cfg.eta_override)?;

    let runs = cfg.runs as u64;
    let records: Vec<RunRecord> = if cfg.workers == 1 {
        (0..runs).map(|r| run_one(cfg, &source, r)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
        pool.install(|| {
            (0..runs)
                .into_par_iter()
                .map(|r| run_one(cfg, &source, r))
                .collect::<Result<Vec<_>>>()
        })?
    };

    let finals: Vec<f64> = records.iter().map(|r| r.regret).collect();
    let (mean_regret, stderr) = mean_stderr(&finals);
    Ok(ExperimentResult {
        config: cfg.clone(),
        epsilon,
        max_load,
        bounds: theoretical_bounds(&dims, max_load.mean),
        records,
        mean_regret,
        stderr,
    })
}

pub fn timeseries_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for rec in records {
        for p in &rec.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                rec.run,
                p.t,
                fmt_g17(p.alg_cum_loss),
                fmt_g17(p.best_expert_cum_loss),
                fmt_g17(p.regret),
                p.l_count,
                p.n_count
            );
        }
    }
    out
}

pub fn summary_csv(result: &ExperimentResult) -> String {
    let d = result.config.dims;
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{},{},{},{},{},{}\n",
        result.config.algorithm,
        d.experts,
        d.arms,
        d.budget,
        d.horizon,
        result.config.runs,
        fmt_g17(result.mean_regret),
        fmt_g17(result.stderr),
        fmt_g17(result.bounds.mw),
        fmt_g17(result.bounds.polyinf),
        fmt_g17(result.bounds.lower),
    )
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `timeseries.csv` and `summary.csv` under `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![
        write_file(dir.join("timeseries.csv"), &timeseries_csv(&result.records))?,
        write_file(dir.join("summary.csv"), &summary_csv(result))?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub horizon: usize,
    pub mean_regret: f64,
    pub stderr: f64,
    pub bounds: TheoreticalBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub rows: Vec<ScalingRow>,
}

impl ScalingResult {
    /// Least-squares slope of `ln(mean regret)` against `ln T`.
    pub fn slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.horizon as f64, r.mean_regret))
            .collect();
        loglog_slope(&pts)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SCALING_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.horizon,
                fmt_g17(r.mean_regret),
                fmt_g17(r.stderr),
                fmt_g17(r.bounds.mw),
                fmt_g17(r.bounds.polyinf),
                fmt_g17(r.bounds.lower)
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        ensure_dir(dir)?;
        write_file(dir.join("scaling.csv"), &self.to_csv())
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`. `None` with
/// fewer than two points, a nonpositive coordinate, or no spread in `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// One experiment per horizon in `horizons` (ascending); the gap `ε` is
/// re-tuned for each horizon unless overridden.
pub fn scaling_study(cfg: &ExperimentConfig, horizons: &[usize]) -> Result<ScalingResult> {
    if horizons.is_empty() {
        return Err(Error::Config("empty horizon list".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("horizon list must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let mut c = cfg.clone();
        c.dims = cfg.dims.with_horizon(t)?;
        let res = run_experiment(&c)?;
        rows.push(ScalingRow {
            horizon: t,
            mean_regret: res.mean_regret,
            stderr: res.stderr,
            bounds: res.bounds,
        });
    }
    Ok(ScalingResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mw_bound_example() {
        let d = ProblemDims::new(8, 4, 2, 10_000).unwrap();
        let b = theoretical_bounds(&d, 1.25);
        assert_relative_eq!(b.mw, (2.0 * 2.0 * 8.0 * 8f64.ln() / 2.0 * 1e4).sqrt(), epsilon = 1e-9);
        assert!((b.mw - 577.1).abs() < 0.5, "{}", b.mw);
    }

    #[test]
    fn bounds_scale_with_sqrt_t() {
        let d = ProblemDims::new(8, 4, 2, 1000).unwrap();
        let a = theoretical_bounds(&d, 1.25);
        let b = theoretical_bounds(&d.with_horizon(4000).unwrap(), 1.25);
        assert_relative_eq!(b.mw, 2.0 * a.mw, epsilon = 1e-9);
        assert_relative_eq!(b.polyinf, 2.0 * a.polyinf, epsilon = 1e-9);
        assert_relative_eq!(b.lower, 2.0 * a.lower, epsilon = 1e-9);
    }

    #[test]
    fn full_advice_mw_bound() {
        let d = ProblemDims::new(8, 4, 8, 500).unwrap();
        let b = theoretical_bounds(&d, 2.0);
        assert_relative_eq!(b.mw, (2.0 * 4.0 * 8f64.ln() * 500.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn single_expert_bounds_are_zero() {
        let d = ProblemDims::new(1, 4, 1, 500).unwrap();
        let b = theoretical_bounds(&d, 1.0);
        assert_eq!((b.mw, b.polyinf, b.lower), (0.0, 0.0, 0.0));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1.0f64, 4.0, 16.0].iter().map(|&x| (x, 3.0 * x.sqrt())).collect();
        assert_relative_eq!(loglog_slope(&pts).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
        assert_eq!(loglog_slope(&[(1.0, 0.0), (2.0, 0.0)]), None);
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(s, (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn config_validation() {
        let d = ProblemDims::new(6, 2, 4, 10).unwrap();
        let cfg = ExperimentConfig::new(d, Algorithm::Mw, EnvSpec::Null);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let d = ProblemDims::new(6, 2, 3, 10).unwrap();
        let mut cfg = ExperimentConfig::new(d, Algorithm::Mw, EnvSpec::Null);
        cfg.validate().unwrap();
        cfg.epsilon_override = Some(0.5);
        assert!(cfg.validate().is_err());
        cfg.epsilon_override = None;
        cfg.eta_override = Some(-1.0);
        assert!(cfg.validate().is_err());
        cfg.eta_override = None;
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scaling_rejects_unsorted() {
        let d = ProblemDims::new(2, 2, 1, 10).unwrap();
        let cfg = ExperimentConfig::new(d, Algorithm::Mw, EnvSpec::Null);
        assert!(scaling_study(&cfg, &[20, 10]).is_err());
        assert!(scaling_study(&cfg, &[]).is_err());
    }
}
