use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use advice_bandit::environment::DEFAULT_MAX_LOAD_TRIALS;
use advice_bandit::harness::experiment_max_load;
use advice_bandit::{
    estimate_max_load, run_experiment, scaling_study, theoretical_bounds, write_outputs, Algorithm,
    EnvSpec, Error, ExperimentConfig, MaxLoadEstimate, ProblemDims, Result, RngStream,
};

#[derive(Parser)]
#[command(version, about = "Multiarmed bandits with limited expert advice: simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded replications and write timeseries.csv and summary.csv
    Simulate(SimulateArgs),
    /// Print the MW, PolyINF and lower-bound regret curves at one horizon
    Bounds(BoundsArgs),
    /// Estimate the expected max load of M balls in K bins
    Maxload(MaxloadArgs),
    /// Run one experiment per horizon and fit the log-log regret slope
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "mw")]
    algo: Algorithm,
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// lower_bound, null, or script:<path>
    #[arg(long, default_value = "lower_bound")]
    env: EnvSpec,
    /// Replace the tuned learning rate
    #[arg(long)]
    eta: Option<f64>,
    /// Replace the tuned lower-bound gap
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LOAD_TRIALS)]
    f_trials: usize,
    #[arg(long)]
    out: PathBuf,
}

impl ExperimentArgs {
    fn config(&self, horizon: usize) -> Result<ExperimentConfig> {
        let dims = ProblemDims::new(self.n, self.k, self.m, horizon).map_err(config_err)?;
        let mut cfg = ExperimentConfig::new(dims, self.algo, self.env.clone());
        cfg.runs = self.runs;
        cfg.seed = self.seed;
        cfg.eta_override = self.eta;
        cfg.epsilon_override = self.epsilon;
        cfg.workers = self.workers;
        cfg.max_load_trials = self.f_trials;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "T")]
    t: usize,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "T")]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LOAD_TRIALS)]
    f_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MaxloadArgs {
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LOAD_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScalingArgs {
    /// Ascending horizons, comma separated
    #[arg(long = "T-list", value_delimiter = ',', required = true)]
    t_list: Vec<usize>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Validation(msg) | Error::Parameter(msg) => Error::Config(msg),
        other => other,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.exp.config(args.t)?;
            let result = run_experiment(&cfg).map_err(config_err)?;
            let files = write_outputs(&result, &args.exp.out)?;
            println!(
                "{} runs, epsilon {:.6}, f(K,M) {:.4}: mean regret {:.3} +/- {:.3}",
                cfg.runs, result.epsilon, result.max_load.mean, result.mean_regret, result.stderr
            );
            println!(
                "bounds: mw {:.3}, polyinf {:.3}, lower {:.3}",
                result.bounds.mw, result.bounds.polyinf, result.bounds.lower
            );
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Bounds(args) => {
            let dims = ProblemDims::new(args.n, args.k, args.m, args.t).map_err(config_err)?;
            let f = experiment_max_load(&dims, args.f_trials, args.seed).map_err(config_err)?;
            let b = theoretical_bounds(&dims, f.mean);
            println!("K'={} f(K,M)={:.6}+/-{:.6}", dims.effective_arms(), f.mean, f.stderr);
            println!("mw_bound={}", b.mw);
            println!("polyinf_bound={}", b.polyinf);
            println!("lower_bound_estimate={}", b.lower);
        }
        Command::Maxload(args) => {
            let mut rng = RngStream::new(args.seed, 0);
            let f = estimate_max_load(args.k, args.m, args.trials, &mut rng).map_err(config_err)?;
            println!(
                "f({}, {}) = {} +/- {} ({} trials; max(ln K, M/K) = {:.4})",
                args.k,
                args.m,
                f.mean,
                f.stderr,
                f.trials,
                MaxLoadEstimate::asymptotic(args.k, args.m)
            );
        }
        Command::Scaling(args) => {
            let first = *args.t_list.first().expect("clap requires T-list");
            let cfg = args.exp.config(first)?;
            let result = scaling_study(&cfg, &args.t_list).map_err(config_err)?;
            let path = result.write(&args.exp.out)?;
            for r in &result.rows {
                println!("T={} mean_regret={:.3} stderr={:.3}", r.horizon, r.mean_regret, r.stderr);
            }
            match result.slope() {
                Some(s) => println!("log-log slope: {s:.4}"),
                None => println!("log-log slope: undefined"),
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
