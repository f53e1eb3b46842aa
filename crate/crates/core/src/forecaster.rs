//! Full-information expert-learning backends.
//!
//! Both forecasters consume one nonnegative loss per expert per round and
//! keep every expert's probability strictly positive, which is what makes
//! the bandit loss estimator unbiased for all experts.

use std::fmt;
use std::str::FromStr;

use crate::domain::{ProblemDims, PROB_SUM_TOL};
use crate::error::{Error, Result};

/// Solver target for the PolyINF normalization `|Σ_h w_h − 1|`.
pub const POLYINF_RESIDUAL_TOL: f64 = 1e-10;
const POLYINF_MAX_ITERS: usize = 200;

/// A distribution over experts with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDistribution {
    q: Vec<f64>,
}

impl ExpertDistribution {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Validation("empty expert distribution".into()));
        }
        if let Some((h, p)) = q.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Validation(format!(
                "expert {h} has probability {p}; forecasters keep every expert positive"
            )));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Validation(format!("expert probabilities sum to {sum}")));
        }
        Ok(Self { q })
    }

    pub fn uniform(experts: usize) -> Self {
        Self {
            q: vec![1.0 / experts as f64; experts],
        }
    }

    pub fn experts(&self) -> usize {
        self.q.len()
    }

    pub fn get(&self, expert: usize) -> f64 {
        self.q[expert]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }
}

/// Estimated losses of all experts for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertLossVector {
    y: Vec<f64>,
}

impl ExpertLossVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some((h, v)) = y.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Contract(format!(
                "expert {h} has loss {v}; forecaster losses must be finite and nonnegative"
            )));
        }
        Ok(Self { y })
    }

    pub fn zeros(experts: usize) -> Self {
        Self {
            y: vec![0.0; experts],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }

    pub fn get(&self, expert: usize) -> f64 {
        self.y[expert]
    }

    pub fn nonzero_count(&self) -> usize {
        self.y.iter().filter(|v| **v != 0.0).count()
    }
}

/// Common interface of the expert-learning backends.
pub trait Forecaster {
    fn experts(&self) -> usize;

    /// Current distribution `q_t`.
    fn distribution(&self) -> ExpertDistribution;

    /// Feeds one round of expert losses and advances to `q_{t+1}`.
    fn update(&mut self, losses: &ExpertLossVector) -> Result<()>;
}

fn check_len(expected: usize, losses: &ExpertLossVector) -> Result<()> {
    if losses.as_slice().len() != expected {
        return Err(Error::Contract(format!(
            "expected {expected} expert losses, got {}",
            losses.as_slice().len()
        )));
    }
    Ok(())
}

/// Multiplicative Weights: `q_{t+1}(h) ∝ q_t(h) exp(−η Y_t^h)`.
///
/// Weights live in log space and are shifted so the largest is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MwForecaster {
    eta: f64,
    log_weights: Vec<f64>,
}

impl MwForecaster {
    pub fn new(experts: usize, eta: f64) -> Result<Self> {
        if experts == 0 {
            return Err(Error::Parameter("MW needs at least one expert".into()));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Parameter(format!("MW learning rate must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; experts],
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
}

impl Forecaster for MwForecaster {
    fn experts(&self) -> usize {
        self.log_weights.len()
    }

    fn distribution(&self) -> ExpertDistribution {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut q: Vec<f64> = self
            .log_weights
            .iter()
            .map(|lw| (lw - max).exp().max(f64::MIN_POSITIVE))
            .collect();
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|p| *p /= z);
        ExpertDistribution { q }
    }

    fn update(&mut self, losses: &ExpertLossVector) -> Result<()> {
        check_len(self.experts(), losses)?;
        for (lw, y) in self.log_weights.iter_mut().zip(losses.as_slice()) {
            *lw -= self.eta * y;
        }
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if max != 0.0 {
            self.log_weights.iter_mut().for_each(|lw| *lw -= max);
        }
        Ok(())
    }
}

/// Learning rate for the MW backend, `√(2 M ln N / (K′ N T))`.
///
/// Undefined for a single expert (`ln 1 = 0`).
pub fn mw_eta(dims: &ProblemDims) -> Result<f64> {
    if dims.experts < 2 {
        return Err(Error::Parameter(
            "MW learning rate is undefined for a single expert".into(),
        ));
    }
    let n = dims.experts as f64;
    let m = dims.budget as f64;
    let k_eff = dims.effective_arms() as f64;
    let t = dims.horizon as f64;
    Ok((2.0 * m * n.ln() / (k_eff * n * t)).sqrt())
}

/// Exponent and learning rate of the PolyINF backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyInfParams {
    pub c: f64,
    pub eta: f64,
}

/// `c = ln(8M/K′)` and `η = 2 N^{1/(2c)} [c (R K′)^{1−1/c} T]^{−1/2}` with `R = N/M`.
pub fn polyinf_params(dims: &ProblemDims) -> Result<PolyInfParams> {
    let n = dims.experts as f64;
    let m = dims.budget as f64;
    let k_eff = dims.effective_arms() as f64;
    let t = dims.horizon as f64;
    let c = (8.0 * m / k_eff).ln();
    if c <= 1.0 {
        return Err(Error::Parameter(format!("PolyINF exponent c = {c} must exceed 1")));
    }
    if c < 2.0 {
        log::warn!("PolyINF exponent c = {c} is below 2; tuned regret bound does not apply");
    }
    let r = n / m;
    let eta = 2.0 * n.powf(1.0 / (2.0 * c)) / (c * (r * k_eff).powf(1.0 - 1.0 / c) * t).sqrt();
    Ok(PolyInfParams { c, eta })
}

/// PolyINF: `q_{t+1}(h) = [η (Σ_{τ≤t} Y_τ^h + C_{t+1})]^{−c}` with `C_{t+1}`
/// solved each round so the weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyInfForecaster {
    eta: f64,
    c: f64,
    cum_loss: Vec<f64>,
    norm_const: f64,
    residual: f64,
    q: Vec<f64>,
}

impl PolyInfForecaster {
    pub fn new(experts: usize, c: f64, eta: f64) -> Result<Self> {
        if experts == 0 {
            return Err(Error::Parameter("PolyINF needs at least one expert".into()));
        }
        if !(c.is_finite() && c > 1.0) {
            return Err(Error::Parameter(format!("PolyINF exponent must exceed 1, got {c}")));
        }
        if c < 2.0 {
            log::warn!("PolyINF exponent c = {c} is below 2");
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Parameter(format!(
                "PolyINF learning rate must be positive, got {eta}"
            )));
        }
        let mut state = Self {
            eta,
            c,
            cum_loss: vec![0.0; experts],
            norm_const: 0.0,
            residual: 0.0,
            q: Vec::new(),
        };
        state.renormalize()?;
        Ok(state)
    }

    pub fn from_params(experts: usize, params: PolyInfParams) -> Result<Self> {
        Self::new(experts, params.c, params.eta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn exponent(&self) -> f64 {
        self.c
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cum_loss
    }

    /// The most recently solved normalization constant `C`.
    pub fn normalization_constant(&self) -> f64 {
        self.norm_const
    }

    /// `|Σ_h [η(L_h + C)]^{−c} − 1|` at the solved constant.
    pub fn normalization_residual(&self) -> f64 {
        self.residual
    }

    /// Solves for `C`. Writing `C = D − min_h L_h` and `u_h = L_h − min_h L_h`,
    /// `g(D) = Σ_h [η(u_h + D)]^{−c}` is convex and decreasing with
    /// `g(1/η) ≥ 1` and `g(N^{1/c}/η) ≤ 1`. Newton steps from the left end
    /// stay inside the bracket; bisection takes over if they stall.
    fn renormalize(&mut self) -> Result<()> {
        let n = self.cum_loss.len() as f64;
        let l_min = self.cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
        let u: Vec<f64> = self.cum_loss.iter().map(|l| l - l_min).collect();
        let (eta, c) = (self.eta, self.c);

        // g(D) - 1 and g'(D)
        let eval = |d: f64| -> (f64, f64) {
            let mut g = 0.0;
            let mut dg = 0.0;
            for &uh in &u {
                let x = eta * (uh + d);
                let w = x.powf(-c);
                g += w;
                dg -= c * eta * w / x;
            }
            (g - 1.0, dg)
        };

        let mut lo = 1.0 / eta;
        let mut hi = n.powf(1.0 / c) / eta;
        let (f_hi, _) = eval(hi);
        if f_hi.abs() <= POLYINF_RESIDUAL_TOL * 1e-2 {
            lo = hi;
        }
        let (mut f_lo, mut df_lo) = eval(lo);
        if f_lo < -POLYINF_RESIDUAL_TOL || f_hi > POLYINF_RESIDUAL_TOL {
            return Err(Error::Internal(format!(
                "PolyINF normalization not bracketed: g(lo)-1={f_lo}, g(hi)-1={f_hi}"
            )));
        }

        let mut best = if f_lo.abs() <= f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
        for _ in 0..POLYINF_MAX_ITERS {
            if best.1.abs() <= POLYINF_RESIDUAL_TOL * 1e-2 || hi - lo <= f64::EPSILON * hi {
                break;
            }
            let newton = lo - f_lo / df_lo;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let (f, df) = eval(next);
            if f.abs() < best.1.abs() {
                best = (next, f);
            }
            if f >= 0.0 {
                // Newton from the left stalls near the root once steps hit
                // rounding noise; halve the bracket whenever progress is small.
                let progress = next - lo;
                lo = next;
                f_lo = f;
                df_lo = df;
                if progress <= 1e-3 * (hi - lo) {
                    let mid = 0.5 * (lo + hi);
                    let (fm, dfm) = eval(mid);
                    if fm.abs() < best.1.abs() {
                        best = (mid, fm);
                    }
                    if fm >= 0.0 {
                        lo = mid;
                        f_lo = fm;
                        df_lo = dfm;
                    } else {
                        hi = mid;
                    }
                }
            } else {
                hi = next;
            }
        }

        let (d, f) = best;
        if f.abs() > POLYINF_RESIDUAL_TOL {
            return Err(Error::Internal(format!(
                "PolyINF normalization residual {} exceeds {POLYINF_RESIDUAL_TOL}",
                f.abs()
            )));
        }
        let mut q: Vec<f64> = u.iter().map(|uh| (eta * (uh + d)).powf(-c)).collect();
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|p| *p = (*p / z).max(f64::MIN_POSITIVE));
        self.norm_const = d - l_min;
        self.residual = f.abs();
        self.q = q;
        Ok(())
    }
}

impl Forecaster for PolyInfForecaster {
    fn experts(&self) -> usize {
        self.cum_loss.len()
    }

    fn distribution(&self) -> ExpertDistribution {
        ExpertDistribution { q: self.q.clone() }
    }

    fn update(&mut self, losses: &ExpertLossVector) -> Result<()> {
        check_len(self.experts(), losses)?;
        if losses.nonzero_count() == 0 {
            return Ok(());
        }
        for (l, y) in self.cum_loss.iter_mut().zip(losses.as_slice()) {
            *l += y;
        }
        self.renormalize()
    }
}

/// Which expert-learning backend drives the bandit algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Mw,
    PolyInf,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mw => "mw",
            Algorithm::PolyInf => "polyinf",
        }
    }

    /// Builds the backend with its tuned parameters; `eta_override`
    /// replaces the tuned learning rate.
    pub fn build(&self, dims: &ProblemDims, eta_override: Option<f64>) -> Result<AnyForecaster> {
        Ok(match self {
            Algorithm::Mw => {
                let eta = match eta_override {
                    Some(eta) => eta,
                    // a single expert is always played; any rate works
                    None if dims.experts == 1 => 1.0,
                    None => mw_eta(dims)?,
                };
                AnyForecaster::Mw(MwForecaster::new(dims.experts, eta)?)
            }
            Algorithm::PolyInf => {
                let mut params = polyinf_params(dims)?;
                if let Some(eta) = eta_override {
                    params.eta = eta;
                }
                AnyForecaster::PolyInf(PolyInfForecaster::from_params(dims.experts, params)?)
            }
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mw" => Ok(Algorithm::Mw),
            "polyinf" => Ok(Algorithm::PolyInf),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected mw or polyinf)"
            ))),
        }
    }
}

/// Either backend, chosen at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyForecaster {
    Mw(MwForecaster),
    PolyInf(PolyInfForecaster),
}

impl Forecaster for AnyForecaster {
    fn experts(&self) -> usize {
        match self {
            AnyForecaster::Mw(f) => f.experts(),
            AnyForecaster::PolyInf(f) => f.experts(),
        }
    }

    fn distribution(&self) -> ExpertDistribution {
        match self {
            AnyForecaster::Mw(f) => f.distribution(),
            AnyForecaster::PolyInf(f) => f.distribution(),
        }
    }

    fn update(&mut self, losses: &ExpertLossVector) -> Result<()> {
        match self {
            AnyForecaster::Mw(f) => f.update(losses),
            AnyForecaster::PolyInf(f) => f.update(losses),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn losses(v: &[f64]) -> ExpertLossVector {
        ExpertLossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn mw_starts_uniform() {
        let q = MwForecaster::new(4, 0.1).unwrap().distribution();
        assert_eq!(q.as_slice(), &[0.25; 4]);
        let q = MwForecaster::new(1, 0.1).unwrap().distribution();
        assert_eq!(q.as_slice(), &[1.0]);
        let q = MwForecaster::new(3, 0.1).unwrap().distribution();
        assert!(q.as_slice().iter().all(|p| (p - q.get(0)).abs() < 1e-12));
    }

    #[test]
    fn mw_rejects_bad_eta() {
        assert!(matches!(MwForecaster::new(3, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(MwForecaster::new(3, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn mw_hand_example() {
        let mut f = MwForecaster::new(2, 2f64.ln()).unwrap();
        f.update(&losses(&[1.0, 0.0])).unwrap();
        let q = f.distribution();
        assert_relative_eq!(q.get(0), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(q.get(1), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn mw_zero_loss_keeps_distribution() {
        let mut f = MwForecaster::new(3, 0.5).unwrap();
        f.update(&losses(&[0.3, 0.0, 2.0])).unwrap();
        let before = f.distribution();
        f.update(&ExpertLossVector::zeros(3)).unwrap();
        assert_eq!(before, f.distribution());
    }

    #[test]
    fn mw_shift_invariance() {
        let mut a = MwForecaster::new(3, 0.7).unwrap();
        let mut b = a.clone();
        a.update(&losses(&[0.2, 1.0, 0.5])).unwrap();
        b.update(&losses(&[2.2, 3.0, 2.5])).unwrap();
        for (x, y) in a.distribution().as_slice().iter().zip(b.distribution().as_slice()) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn negative_loss_is_a_contract_violation() {
        assert!(matches!(ExpertLossVector::new(vec![0.0, -1.0]), Err(Error::Contract(_))));
        let mut f = MwForecaster::new(2, 0.5).unwrap();
        assert!(f.update(&losses(&[0.0, 1.0, 2.0])).is_err());
    }

    #[test]
    fn mw_eta_closed_form() {
        let dims = ProblemDims::new(8, 4, 2, 1000).unwrap();
        let eta = mw_eta(&dims).unwrap();
        assert_relative_eq!(eta, (4.0 * 8f64.ln() / 16000.0).sqrt(), epsilon = 1e-15);
        assert!((eta - 0.022_800_447).abs() < 1e-9);
        let eta4 = mw_eta(&dims.with_horizon(4000).unwrap()).unwrap();
        assert_relative_eq!(eta4, eta / 2.0, epsilon = 1e-15);
        // full advice: M = N, K' = K
        let full = ProblemDims::new(8, 4, 8, 1000).unwrap();
        assert_relative_eq!(
            mw_eta(&full).unwrap(),
            (2.0 * 8f64.ln() / (4.0 * 1000.0)).sqrt(),
            epsilon = 1e-15
        );
        assert!(mw_eta(&ProblemDims::new(1, 2, 1, 10).unwrap()).is_err());
    }

    #[test]
    fn polyinf_params_closed_form() {
        let p = polyinf_params(&ProblemDims::new(8, 4, 2, 1000).unwrap()).unwrap();
        assert_relative_eq!(p.c, 8f64.ln(), epsilon = 1e-15);

        let dims = ProblemDims::new(8, 2, 4, 1000).unwrap();
        let p = polyinf_params(&dims).unwrap();
        assert_relative_eq!(p.c, 16f64.ln(), epsilon = 1e-15);
        // 2 * 8^(1/(2c)) / sqrt(c * 4^(1-1/c) * 1000), evaluated by hand
        let c = 16f64.ln();
        let hand = 2.0 * (8f64.ln() / (2.0 * c)).exp()
            / (c * ((1.0 - 1.0 / c) * 4f64.ln()).exp() * 1000.0).sqrt();
        assert_relative_eq!(p.eta, hand, epsilon = 1e-15);
        let p4 = polyinf_params(&dims.with_horizon(4000).unwrap()).unwrap();
        assert_relative_eq!(p4.eta, p.eta / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn polyinf_init() {
        let f = PolyInfForecaster::new(2, 2.0, 1.0).unwrap();
        assert_relative_eq!(f.normalization_constant(), 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(f.distribution().get(0), 0.5, epsilon = 1e-12);
        let f = PolyInfForecaster::new(1, 3.0, 0.5).unwrap();
        assert_relative_eq!(f.normalization_constant(), 2.0, epsilon = 1e-12);
        assert_eq!(f.distribution().as_slice(), &[1.0]);
        let f = PolyInfForecaster::new(5, 2.5, 0.3).unwrap();
        for p in f.distribution().as_slice() {
            assert_relative_eq!(*p, 0.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn polyinf_rejects_bad_params() {
        assert!(PolyInfForecaster::new(3, 1.0, 1.0).is_err());
        assert!(PolyInfForecaster::new(3, 2.0, 0.0).is_err());
        assert!(PolyInfForecaster::new(3, 1.5, 1.0).is_ok());
    }

    #[test]
    fn polyinf_two_expert_example() {
        let mut f = PolyInfForecaster::new(2, 2.0, 1.0).unwrap();
        f.update(&losses(&[0.0, 1.0])).unwrap();
        // bisection on C^-2 + (1+C)^-2 = 1 (see integration tests) gives 1.1319...
        assert!((f.normalization_constant() - 1.132).abs() < 1e-3);
        let q = f.distribution();
        assert!((q.get(0) - 0.780).abs() < 1e-3);
        assert!((q.get(1) - 0.220).abs() < 1e-3);
        assert!(f.normalization_residual() <= POLYINF_RESIDUAL_TOL);
    }

    #[test]
    fn polyinf_zero_loss_and_equal_losses() {
        let mut f = PolyInfForecaster::new(3, 2.0, 0.4).unwrap();
        f.update(&losses(&[1.0, 0.0, 3.0])).unwrap();
        let before = f.distribution();
        f.update(&ExpertLossVector::zeros(3)).unwrap();
        assert_eq!(before, f.distribution());

        let mut g = PolyInfForecaster::new(4, 2.0, 0.4).unwrap();
        g.update(&losses(&[2.0; 4])).unwrap();
        for p in g.distribution().as_slice() {
            assert_relative_eq!(*p, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!("mw".parse::<Algorithm>().unwrap(), Algorithm::Mw);
        assert_eq!("PolyINF".parse::<Algorithm>().unwrap(), Algorithm::PolyInf);
        assert!("exp3".parse::<Algorithm>().is_err());
    }

    #[test]
    fn single_expert_mw_builds_without_eta() {
        let dims = ProblemDims::new(1, 3, 1, 10).unwrap();
        let f = Algorithm::Mw.build(&dims, None).unwrap();
        assert_eq!(f.distribution().as_slice(), &[1.0]);
    }
}
