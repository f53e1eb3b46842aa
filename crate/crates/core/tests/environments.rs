use advice_bandit::environment::{null_loss_mean, MaxLoadEstimate};
use advice_bandit::{
    estimate_max_load, lower_bound_step, null_step, run_episode, Algorithm, Environment,
    ExpertQueryCounters, LimitedAdviceBandit, LowerBoundConfig, LowerBoundEnv, NullEnv, ProblemDims,
    RngStream, RoundGate, ScriptedEnv,
};

fn within_3se(mean: f64, target: f64, p: f64, n: usize) -> bool {
    (mean - target).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn lower_bound_marginal_and_expert_means() {
    let dims = ProblemDims::new(6, 4, 2, 1).unwrap();
    let eps = 0.2;
    let cfg = LowerBoundConfig::new(dims, 2, eps).unwrap();
    let mut rng = RngStream::new(100, 0);
    let n = 100_000;
    let (mut arm0, mut hstar_loss, mut other_loss) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let s = lower_bound_step(&cfg, &mut rng);
        arm0 += s.losses.get(0);
        hstar_loss += s.advice.row(2).dot(s.losses.as_slice());
        other_loss += s.advice.row(4).dot(s.losses.as_slice());
    }
    let p = null_loss_mean(4, eps);
    assert_eq!(p, 0.45);
    assert!(within_3se(arm0 / n as f64, p, p, n), "{}", arm0 / n as f64);
    assert!(within_3se(hstar_loss / n as f64, 0.5 - eps, 0.5 - eps, n));
    assert!(within_3se(other_loss / n as f64, p, p, n));
}

#[test]
fn zero_gap_lower_bound_equals_null() {
    let dims = ProblemDims::new(4, 3, 2, 1).unwrap();
    let cfg = LowerBoundConfig::new(dims, 1, 0.0).unwrap();
    let mut a = RngStream::new(3, 0);
    let mut b = RngStream::new(3, 0);
    for _ in 0..1000 {
        assert_eq!(lower_bound_step(&cfg, &mut a), null_step(&dims, 0.0, &mut b));
    }
}

#[test]
fn null_environment_is_exchangeable() {
    let dims = ProblemDims::new(5, 3, 1, 1).unwrap();
    let eps = 0.15;
    let p = null_loss_mean(3, eps);
    let mut rng = RngStream::new(8, 0);
    let n = 100_000;
    let mut per_expert = vec![0.0; 5];
    for _ in 0..n {
        let s = null_step(&dims, eps, &mut rng);
        for (h, tot) in per_expert.iter_mut().enumerate() {
            *tot += s.advice.row(h).dot(s.losses.as_slice());
        }
    }
    for tot in per_expert {
        assert!(within_3se(tot / n as f64, p, p, n));
    }
}

#[test]
fn max_load_two_by_two() {
    let mut rng = RngStream::new(2, 2);
    let f = estimate_max_load(2, 2, 100_000, &mut rng).unwrap();
    assert!((f.mean - 1.5).abs() <= 3.0 * f.stderr, "{f:?}");
}

#[test]
fn max_load_bounds_and_convergence() {
    let mut rng = RngStream::new(9, 0);
    for (k, m) in [(3, 5), (8, 2), (4, 12), (10, 10)] {
        let f = estimate_max_load(k, m, 20_000, &mut rng).unwrap();
        assert!(f.mean >= m as f64 / k as f64 && f.mean <= m as f64);
        let small = estimate_max_load(k, m, 500, &mut rng).unwrap();
        // stderr shrinks like trials^-1/2: ratio sqrt(40) ≈ 6.3
        assert!(small.stderr / f.stderr > 4.0 && small.stderr / f.stderr < 9.0);
    }
    assert!(MaxLoadEstimate::asymptotic(4, 2) > 0.0);
}

#[test]
fn environment_randomness_is_independent_of_algorithm() {
    let dims = ProblemDims::new(4, 3, 2, 200).unwrap();
    let record_steps = |algo: Algorithm, alg_seed: u64| {
        let mut env = LowerBoundEnv::with_random_hstar(dims, 0.1, RngStream::new(5, 0)).unwrap();
        let mut bandit = LimitedAdviceBandit::build(&dims, algo, None, RngStream::new(alg_seed, 1)).unwrap();
        let mut steps = Vec::new();
        for t in 1..=dims.horizon {
            let s = env.step(t).unwrap();
            bandit.step(&mut RoundGate::new(&s, dims.budget)).unwrap();
            steps.push(s);
        }
        steps
    };
    assert_eq!(record_steps(Algorithm::Mw, 1), record_steps(Algorithm::PolyInf, 99));
}

#[test]
fn full_budget_queries_hidden_expert_every_round() {
    let dims = ProblemDims::new(4, 3, 4, 300).unwrap();
    let mut env = LowerBoundEnv::with_random_hstar(dims, 0.1, RngStream::new(1, 0)).unwrap();
    let mut b = LimitedAdviceBandit::build(&dims, Algorithm::Mw, None, RngStream::new(1, 1)).unwrap();
    let rec = run_episode(&mut b, &mut env, dims.horizon, 0, None).unwrap();
    assert_eq!(rec.diagnostics.l_count, 300);
    assert!(rec.diagnostics.n_count <= 300);
}

#[test]
fn query_indicator_sums_to_budget_and_matches_are_bounded() {
    let dims = ProblemDims::new(8, 4, 2, 20_000).unwrap();
    let mut env = NullEnv::new(dims, 0.0, RngStream::new(12, 0)).unwrap();
    let mut b = LimitedAdviceBandit::build(&dims, Algorithm::Mw, None, RngStream::new(12, 1)).unwrap();
    let mut counters = ExpertQueryCounters::new(dims.experts);
    let mut per_round_max = 0;
    for t in 1..=dims.horizon {
        let s = env.step(t).unwrap();
        let before = counters.clone();
        let out = b.step(&mut RoundGate::new(&s, dims.budget)).unwrap();
        counters.record(b.partition(), &out);
        assert_eq!(counters.total_l() - before.total_l(), dims.budget as u64);
        per_round_max = per_round_max.max(counters.total_n() - before.total_n());
    }
    assert!(per_round_max <= dims.budget as u64);
    let f = estimate_max_load(4, 2, 100_000, &mut RngStream::new(0, 7)).unwrap();
    let avg = counters.total_n() as f64 / (dims.experts * dims.horizon) as f64;
    assert!(avg <= f.mean / dims.experts as f64 + 0.01);
}

#[test]
fn script_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = "t,a_1,a_2,a_3,l_1,l_2\n1,1,2,2,0,1\n2,2,2,1,0.10000000000000001,0.25\n3,1,1,1,1,0.5\n";
    let path = dir.path().join("script.csv");
    std::fs::write(&path, text).unwrap();
    let env = ScriptedEnv::load(&path).unwrap();
    assert_eq!(env.to_csv(), text);
    let copy = dir.path().join("copy.csv");
    env.save(&copy).unwrap();
    assert_eq!(std::fs::read_to_string(&copy).unwrap(), text);
    assert_eq!(ScriptedEnv::load(&copy).unwrap(), env);
    let step = env.fixed_env_step(2).unwrap();
    assert_eq!(step.losses.as_slice(), &[0.1, 0.25]);
    assert_eq!(step.advice.row(2).basis_index(), Some(0));
}

#[test]
fn constant_script_repeats() {
    let env = ScriptedEnv::constant(vec![0, 1], vec![0.3, 0.7], 5).unwrap();
    let first = env.fixed_env_step(1).unwrap().clone();
    for t in 2..=5 {
        assert_eq!(env.fixed_env_step(t).unwrap(), &first);
    }
}

#[test]
fn missing_script_is_io_error() {
    let err = ScriptedEnv::load("/nonexistent/script.csv").unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
