//! Multiplicative Weights and PolyINF side by side on the same losses.
//!
//! ```bash
//! cargo run -p advice-bandit --example forecasters
//! ```

use advice_bandit::{
    mw_eta, polyinf_params, ExpertLossVector, Forecaster, MwForecaster, PolyInfForecaster, ProblemDims,
    RngStream,
};

fn main() -> advice_bandit::Result<()> {
    let dims = ProblemDims::new(5, 3, 5, 2_000)?;
    let params = polyinf_params(&dims)?;
    let mut mw = MwForecaster::new(dims.experts, mw_eta(&dims)?)?;
    let mut inf = PolyInfForecaster::from_params(dims.experts, params)?;
    println!("MW eta = {:.5}; PolyINF c = {:.4}, eta = {:.5}", mw.eta(), params.c, params.eta);

    // expert h has Bernoulli loss with mean 0.3 + 0.1 h
    let mut rng = RngStream::new(1, 0);
    for t in 1..=dims.horizon {
        let y: Vec<f64> = (0..dims.experts)
            .map(|h| if rng.bernoulli(0.3 + 0.1 * h as f64) { 1.0 } else { 0.0 })
            .collect();
        let y = ExpertLossVector::new(y)?;
        mw.update(&y)?;
        inf.update(&y)?;
        if t % 500 == 0 {
            println!("t = {t}");
            println!("  MW      {:?}", rounded(mw.distribution().as_slice()));
            println!(
                "  PolyINF {:?}  (C = {:.4}, residual {:.1e})",
                rounded(inf.distribution().as_slice()),
                inf.normalization_constant(),
                inf.normalization_residual()
            );
        }
    }
    Ok(())
}

fn rounded(q: &[f64]) -> Vec<f64> {
    q.iter().map(|p| (p * 1e4).round() / 1e4).collect()
}
