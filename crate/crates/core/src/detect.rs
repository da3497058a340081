//! Bob's hypothesis tests and the miss-rate evaluators for each regime.
//!
//! Under H0 the claimant is Alice and the whitened difference statistic
//! `Z = 2 d^H R^{-1} d` is chi-square with `2M` degrees of freedom, so the
//! threshold for false-alarm rate `α` is the `(1 - α)` quantile. H0 is
//! rejected only when `Z > T`; `Z = T` is accepted.
//!
//! Monte Carlo estimators split their trials into fixed-size chunks, each
//! driven by a stream derived from the caller's generator and the chunk index,
//! so results do not depend on the number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelParams, PairChannel, SpatialMode};
use crate::error::{ensure, ensure_len, Error, Result};
use crate::numerics::{chi2_cdf, chi2_inv, noncentral_chi2_cdf, HermitianMatrix, RngStream};
use crate::stats;

/// Trials handled by one derived stream.
pub const CHUNK_TRIALS: usize = 1024;

/// Which test Bob runs and how its miss rate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Known `a`, `B_c`, `σ_T`; full `R` and `G`, miss rate by simulation.
    GeneralKnownParams,
    /// `B_c / W -> 0`: diagonal covariances, closed-form miss rate.
    LowBcClosedForm,
    /// `B_c / W -> ∞`: rank-one-plus-diagonal covariances, miss rate by simulation.
    HighBcNumerical,
    /// Bob ignores the variation: `Z = |d|^2 / σ_N^2`.
    UnknownParams,
    /// Eve shares Alice's variation; closed-form miss rate.
    FullSpatialCorrelation,
    /// No time variation at all; closed-form benchmark.
    TimeInvariantBenchmark,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::GeneralKnownParams,
        Regime::LowBcClosedForm,
        Regime::HighBcNumerical,
        Regime::UnknownParams,
        Regime::FullSpatialCorrelation,
        Regime::TimeInvariantBenchmark,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::GeneralKnownParams => "general",
            Regime::LowBcClosedForm => "low_bc",
            Regime::HighBcNumerical => "high_bc",
            Regime::UnknownParams => "unknown_params",
            Regime::FullSpatialCorrelation => "full_spatial",
            Regime::TimeInvariantBenchmark => "time_invariant",
        }
    }

    /// Accepts the short name or the variant name (`"low_bc"` or
    /// `"LowBcClosedForm"`).
    pub fn from_name(name: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.name() == name || format!("{r:?}") == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub alpha: f64,
    pub regime: Regime,
    pub threshold_override: Option<f64>,
}

impl TestConfig {
    pub fn new(alpha: f64, regime: Regime) -> Self {
        Self { alpha, regime, threshold_override: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.threshold_override {
            Some(t) => ensure(t >= 0.0 && !t.is_nan(), || format!("threshold_override = {t} must be nonnegative")),
            None => ensure(self.alpha > 0.0 && self.alpha < 1.0, || {
                format!("alpha = {} must lie in (0, 1)", self.alpha)
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    AcceptH0,
    RejectH0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
}

fn difference(h_now: &[Complex64], h_ref: &[Complex64]) -> Result<Vec<Complex64>> {
    ensure_len(h_now.len(), h_ref.len())?;
    Ok(h_now.iter().zip(h_ref).map(|(a, b)| a - b).collect())
}

/// `Z = |sqrt(2) (R_d^H)^{-1} (h_now - h_ref)|^2`.
pub fn statistic_general(h_now: &[Complex64], h_ref: &[Complex64], r: &HermitianMatrix) -> Result<f64> {
    ensure_len(r.dim(), h_now.len())?;
    let d = difference(h_now, h_ref)?;
    Ok(2.0 * r.inverse_quadratic_form(&d)?)
}

/// `Z = |h_now - h_ref|^2 / σ_N^2`.
pub fn statistic_unknown(h_now: &[Complex64], h_ref: &[Complex64], sigma_n2: f64) -> Result<f64> {
    ensure(sigma_n2 > 0.0, || format!("sigma_N^2 = {sigma_n2} must be positive"))?;
    ensure_len(h_now.len(), h_ref.len())?;
    Ok(h_now.iter().zip(h_ref).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / sigma_n2)
}

/// `F^{-1}_{χ²_{2M}}(1 - α)`.
pub fn chi2_threshold(alpha: f64, tones: usize) -> Result<f64> {
    ensure(alpha > 0.0 && alpha <= 1.0, || format!("alpha = {alpha} must lie in (0, 1]"))?;
    if alpha == 1.0 {
        return Ok(0.0);
    }
    Ok(chi2_inv(1.0 - alpha, 2 * tones as u32)?)
}

/// The override when present, otherwise the chi-square quantile.
pub fn threshold(cfg: &TestConfig, tones: usize) -> Result<f64> {
    match cfg.threshold_override {
        Some(t) => Ok(t),
        None => chi2_threshold(cfg.alpha, tones),
    }
}

pub fn decide(statistic: f64, cfg: &TestConfig, tones: usize) -> Result<TestOutcome> {
    let threshold = threshold(cfg, tones)?;
    let decision = if statistic > threshold { Decision::RejectH0 } else { Decision::AcceptH0 };
    Ok(TestOutcome { statistic, threshold, decision })
}

/// The statistic a regime computes.
#[derive(Debug, Clone)]
pub enum Statistic {
    Whitened(HermitianMatrix),
    Unknown { sigma_n2: f64 },
}

impl Statistic {
    pub fn evaluate(&self, h_now: &[Complex64], h_ref: &[Complex64]) -> Result<f64> {
        match self {
            Statistic::Whitened(r) => statistic_general(h_now, h_ref, r),
            Statistic::Unknown { sigma_n2 } => statistic_unknown(h_now, h_ref, *sigma_n2),
        }
    }
}

/// `R` as the regime assumes it.
pub fn regime_r(regime: Regime, params: &ChannelParams) -> Result<HermitianMatrix> {
    match regime {
        Regime::GeneralKnownParams | Regime::FullSpatialCorrelation => stats::covariance_r(params),
        Regime::LowBcClosedForm => stats::asymptotic_r_low_bc(params),
        Regime::HighBcNumerical => stats::asymptotic_r_high_bc(params),
        Regime::UnknownParams | Regime::TimeInvariantBenchmark => {
            Ok(HermitianMatrix::scaled_identity(params.tones, 2.0 * params.sigma_n2).factored()?)
        }
    }
}

/// A ready-to-run test: statistic plus threshold.
#[derive(Debug, Clone)]
pub struct Detector {
    pub statistic: Statistic,
    pub threshold: f64,
}

impl Detector {
    pub fn new(cfg: &TestConfig, params: &ChannelParams) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let statistic = match cfg.regime {
            Regime::UnknownParams => Statistic::Unknown { sigma_n2: params.sigma_n2 },
            other => Statistic::Whitened(regime_r(other, params)?),
        };
        Ok(Self { statistic, threshold: threshold(cfg, params.tones)? })
    }

    pub fn test(&self, h_now: &[Complex64], h_ref: &[Complex64]) -> Result<TestOutcome> {
        let statistic = self.statistic.evaluate(h_now, h_ref)?;
        let decision = if statistic > self.threshold { Decision::RejectH0 } else { Decision::AcceptH0 };
        Ok(TestOutcome { statistic, threshold: self.threshold, decision })
    }
}

/// A Monte Carlo rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub rate: f64,
    pub std_err: f64,
    pub hits: u64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let rate = hits as f64 / trials as f64;
        Self { rate, std_err: (rate * (1.0 - rate) / trials as f64).sqrt(), hits, trials }
    }

    /// Whether `self` and `other` differ by at least `k` combined standard errors.
    pub fn separated_from(&self, other: &MonteCarloEstimate, k: f64) -> bool {
        (self.rate - other.rate).abs() >= k * self.std_err.hypot(other.std_err)
    }
}

fn chunk_sizes(trials: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks).into_par_iter().map(move |c| (c, CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS)))
}

fn mu_and_rho(params: &ChannelParams, hbar_a: &[Complex64], hbar_e: &[Complex64]) -> Result<(f64, f64)> {
    ensure_len(params.tones, hbar_a.len())?;
    ensure_len(params.tones, hbar_e.len())?;
    let var = params.sigma_t * params.sigma_t;
    let total = var + params.sigma_n2;
    ensure(total > 0.0, || "sigma_T and sigma_N are both zero".into())?;
    let sep: f64 = hbar_e.iter().zip(hbar_a).map(|(e, a)| (e - a).norm_sqr()).sum();
    let rho = ((1.0 - params.ar_coeff) * var + params.sigma_n2) / total;
    Ok((sep / total, rho))
}

/// Closed-form miss rate for tone-independent variation:
/// `β = F_{χ²_{2M,μ}}(ρ F^{-1}_{χ²_{2M}}(1 - α))`.
pub fn miss_rate_low_bc(
    alpha: f64,
    params: &ChannelParams,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
) -> Result<f64> {
    let (mu, rho) = mu_and_rho(params, hbar_a, hbar_e)?;
    let t = chi2_threshold(alpha, params.tones)?;
    Ok(noncentral_chi2_cdf(rho * t, 2 * params.tones as u32, mu)?)
}

/// Miss rate of the whitened test by sampling `d ~ CN(hbar_e - hbar_a, G)`
/// directly and counting `Z <= T`.
pub fn miss_rate_general_numerical(
    alpha: f64,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    r: &HermitianMatrix,
    g: &HermitianMatrix,
    trials: usize,
    rng: &RngStream,
) -> Result<MonteCarloEstimate> {
    let t = chi2_threshold(alpha, r.dim())?;
    miss_rate_numerical_at(t, hbar_a, hbar_e, r, g, trials, rng)
}

/// As [`miss_rate_general_numerical`] with an explicit threshold.
pub fn miss_rate_numerical_at(
    threshold: f64,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    r: &HermitianMatrix,
    g: &HermitianMatrix,
    trials: usize,
    rng: &RngStream,
) -> Result<MonteCarloEstimate> {
    ensure(trials >= 1, || "trials must be at least 1".into())?;
    let m = r.dim();
    ensure_len(m, g.dim())?;
    ensure_len(m, hbar_a.len())?;
    ensure_len(m, hbar_e.len())?;
    if !g.is_factored() {
        return Err(Error::Numerics(crate::numerics::NumericsError::NotFactored));
    }
    let delta = difference(hbar_e, hbar_a)?;
    let counts: Vec<Result<u64>> = chunk_sizes(trials)
        .map(|(c, n)| {
            let mut rng = rng.derive(c as u64);
            let mut w = vec![Complex64::new(0.0, 0.0); m];
            let mut d = vec![Complex64::new(0.0, 0.0); m];
            let mut hits = 0u64;
            for _ in 0..n {
                for x in w.iter_mut() {
                    *x = rng.complex_gaussian(1.0);
                }
                g.color_into(&w, &mut d)?;
                for (x, dl) in d.iter_mut().zip(&delta) {
                    *x += dl;
                }
                let z = 2.0 * r.inverse_quadratic_form(&d)?;
                if !(z > threshold) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let mut hits = 0;
    for c in counts {
        hits += c?;
    }
    Ok(MonteCarloEstimate::from_counts(hits, trials as u64))
}

/// Closed-form miss rate when Eve shares Alice's variation:
/// `μ = |sqrt(2) (R_d^H)^{-1} (hbar_e - hbar_a)|^2`, no threshold scaling.
pub fn miss_rate_full_spatial(
    alpha: f64,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    r: &HermitianMatrix,
) -> Result<f64> {
    ensure_len(r.dim(), hbar_a.len())?;
    let delta = difference(hbar_e, hbar_a)?;
    let mu = 2.0 * r.inverse_quadratic_form(&delta)?;
    let t = chi2_threshold(alpha, r.dim())?;
    Ok(noncentral_chi2_cdf(t, 2 * r.dim() as u32, mu)?)
}

/// Benchmark miss rate without time variation, `μ = Σ|Δ|^2 / σ_N^2`.
pub fn miss_rate_time_invariant(
    alpha: f64,
    sigma_n2: f64,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
) -> Result<f64> {
    ensure(sigma_n2 > 0.0, || format!("sigma_N^2 = {sigma_n2} must be positive"))?;
    ensure_len(hbar_a.len(), hbar_e.len())?;
    let tones = hbar_a.len();
    let mu = hbar_e.iter().zip(hbar_a).map(|(e, a)| (e - a).norm_sqr()).sum::<f64>() / sigma_n2;
    let t = chi2_threshold(alpha, tones)?;
    Ok(noncentral_chi2_cdf(t, 2 * tones as u32, mu)?)
}

/// Limit of the low-`B_c` miss rate when variation swamps both the fixed-part
/// separation and the noise: `β ≈ F_{χ²_{2M}}((1 - a) F^{-1}_{χ²_{2M}}(1 - α))`.
pub fn miss_rate_large_variation(alpha: f64, a: f64, tones: usize) -> Result<f64> {
    ensure((0.0..=1.0).contains(&a), || format!("a = {a} must lie in [0, 1]"))?;
    let t = chi2_threshold(alpha, tones)?;
    Ok(chi2_cdf((1.0 - a) * t, 2 * tones as u32)?)
}

/// Statistics from `trials` independent end-to-end probes: Bob stores a
/// noisy Alice measurement at `k - 1`, the channel advances one step, and
/// both Alice (H0) and Eve (H1) are measured at `k`.
#[derive(Debug, Clone, Default)]
pub struct SimulatedStatistics {
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

pub fn simulate_statistics(
    params: &ChannelParams,
    mode: SpatialMode,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    statistic: &Statistic,
    trials: usize,
    rng: &RngStream,
) -> Result<SimulatedStatistics> {
    ensure(trials >= 1, || "trials must be at least 1".into())?;
    let base = PairChannel::new(*params, mode, hbar_a.to_vec(), hbar_e.to_vec())?;
    let m = params.tones;
    let chunks: Vec<Result<(Vec<f64>, Vec<f64>)>> = chunk_sizes(trials)
        .map(|(c, n)| {
            let mut rng = rng.derive(c as u64);
            let mut ch = base.clone();
            let mut h_ref = vec![Complex64::new(0.0, 0.0); m];
            let mut h_a = h_ref.clone();
            let mut h_e = h_ref.clone();
            let mut z0 = Vec::with_capacity(n);
            let mut z1 = Vec::with_capacity(n);
            for _ in 0..n {
                ch.init(&mut rng);
                ch.alice_response_into(&mut rng, &mut h_ref);
                ch.step(&mut rng);
                ch.alice_response_into(&mut rng, &mut h_a);
                ch.eve_response_into(&mut rng, &mut h_e);
                z0.push(statistic.evaluate(&h_a, &h_ref)?);
                z1.push(statistic.evaluate(&h_e, &h_ref)?);
            }
            Ok((z0, z1))
        })
        .collect();
    let mut out = SimulatedStatistics { h0: Vec::with_capacity(trials), h1: Vec::with_capacity(trials) };
    for c in chunks {
        let (z0, z1) = c?;
        out.h0.extend(z0);
        out.h1.extend(z1);
    }
    Ok(out)
}

/// Empirical false-alarm and miss rates from an end-to-end simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub alpha_hat: MonteCarloEstimate,
    pub beta_hat: MonteCarloEstimate,
}

impl SimulatedStatistics {
    pub fn rates_at(&self, threshold: f64) -> ErrorRates {
        let fa = self.h0.iter().filter(|&&z| z > threshold).count() as u64;
        let miss = self.h1.iter().filter(|&&z| !(z > threshold)).count() as u64;
        ErrorRates {
            alpha_hat: MonteCarloEstimate::from_counts(fa, self.h0.len() as u64),
            beta_hat: MonteCarloEstimate::from_counts(miss, self.h1.len() as u64),
        }
    }
}

/// End-to-end error rates for the test described by `cfg` on a given pair of
/// fixed responses.
pub fn simulated_error_rates(
    params: &ChannelParams,
    mode: SpatialMode,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    cfg: &TestConfig,
    trials: usize,
    rng: &RngStream,
) -> Result<ErrorRates> {
    let det = Detector::new(cfg, params)?;
    let stats = simulate_statistics(params, mode, hbar_a, hbar_e, &det.statistic, trials, rng)?;
    Ok(stats.rates_at(det.threshold))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
}

/// `(α̂, β̂)` of the unknown-parameter statistic at each threshold. All
/// thresholds share the same simulated sample paths, so the curve is an
/// exact staircase.
pub fn roc_unknown_params(
    params: &ChannelParams,
    mode: SpatialMode,
    hbar_a: &[Complex64],
    hbar_e: &[Complex64],
    thresholds: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<RocPoint>> {
    ensure(!thresholds.is_empty(), || "threshold list is empty".into())?;
    ensure(thresholds.windows(2).all(|w| w[0] <= w[1]), || "thresholds must be ascending".into())?;
    let stat = Statistic::Unknown { sigma_n2: params.sigma_n2 };
    let sims = simulate_statistics(params, mode, hbar_a, hbar_e, &stat, trials, rng)?;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let r = sims.rates_at(t);
            RocPoint { threshold: t, alpha_hat: r.alpha_hat.rate, beta_hat: r.beta_hat.rate }
        })
        .collect())
}

/// Threshold for the unknown-parameter test from H0 training statistics:
/// the smallest order statistic whose empirical exceedance rate is at most
/// `alpha`.
pub fn calibrate_unknown_threshold(h0_statistics: &[f64], alpha: f64) -> Result<f64> {
    ensure(!h0_statistics.is_empty(), || "no training statistics".into())?;
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha = {alpha} must lie in (0, 1)"))?;
    let mut sorted = h0_statistics.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let idx = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n) - 1;
    Ok(sorted[idx])
}
