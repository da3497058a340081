//! Room-scale experiments: fixed responses from the ray tracer, link-budget
//! noise, per-pair miss rates, and room-averaged sweeps over one parameter.

use std::fmt;

use num_complex::Complex64;
use rand::seq::index;
use rayon::prelude::*;

use crate::channel::{ChannelParams, SpatialMode};
use crate::detect::{self, ErrorRates, Regime, TestConfig};
use crate::error::{ensure, Error, Result};
use crate::numerics::{HermitianMatrix, RngStream};
use crate::raytrace::{self, GridSpec, Position, RoomScene};
use crate::stats;

/// Transmit power and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total transmit power `P_T`, mW.
    pub tx_power_mw: f64,
    /// Thermal noise density `κT`, mW/Hz.
    pub kt_mw_per_hz: f64,
    /// Receiver noise figure `N_F`, linear.
    pub noise_figure: f64,
    /// Per-tone measurement noise bandwidth `b`, Hz.
    pub tone_bandwidth_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self { tx_power_mw: 10.0, kt_mw_per_hz: 10f64.powf(-17.4), noise_figure: 10.0, tone_bandwidth_hz: 0.25e6 }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("P_T", self.tx_power_mw),
            ("kT", self.kt_mw_per_hz),
            ("N_F", self.noise_figure),
            ("b", self.tone_bandwidth_hz),
        ] {
            ensure(v.is_finite() && v > 0.0, || format!("{name} = {v} must be positive"))?;
        }
        Ok(())
    }

    /// Receiver noise power per tone, `κT N_F b`, mW.
    pub fn noise_power_mw(&self) -> f64 {
        self.kt_mw_per_hz * self.noise_figure * self.tone_bandwidth_hz
    }
}

/// `σ_N^2 = κT N_F b / (P_T / M)`: noise referred to the transmitter, per tone.
pub fn noise_variance(budget: &LinkBudget, tones: usize) -> Result<f64> {
    budget.validate()?;
    ensure(tones >= 1, || "M must be at least 1".into())?;
    Ok(tones as f64 * budget.noise_power_mw() / budget.tx_power_mw)
}

/// `σ_T = b_T H̿`.
pub fn sigma_t_from_bt(b_t: f64, room_gain: f64) -> Result<f64> {
    ensure(b_t.is_finite() && b_t >= 0.0, || format!("b_T = {b_t} must be nonnegative"))?;
    ensure(room_gain.is_finite() && room_gain >= 0.0, || format!("room gain {room_gain} must be nonnegative"))?;
    Ok(b_t * room_gain)
}

/// Per-tone SNR `|H|^2 / σ_N^2` in dB for every grid point and tone.
pub fn per_tone_snr_db(responses: &[Vec<Complex64>], sigma_n2: f64) -> Vec<f64> {
    responses.iter().flatten().map(|h| 10.0 * (h.norm_sqr() / sigma_n2).log10()).collect()
}

/// A β estimate for one Alice–Eve pair. Closed-form regimes report a zero
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMissRate {
    pub beta: f64,
    pub std_err: f64,
}

impl PairMissRate {
    fn exact(beta: f64) -> Self {
        Self { beta, std_err: 0.0 }
    }
}

#[derive(Debug, Clone)]
enum Evaluator {
    LowBc,
    TimeInvariant,
    FullSpatial(HermitianMatrix),
    Numerical { r: HermitianMatrix, g: HermitianMatrix },
    Simulated,
}

/// Everything needed to score pairs under one parameter setting; built once
/// and shared across pairs.
#[derive(Debug, Clone)]
pub struct PairEvaluator {
    params: ChannelParams,
    mode: SpatialMode,
    cfg: TestConfig,
    trials: usize,
    threshold: f64,
    kind: Evaluator,
}

impl PairEvaluator {
    /// Chooses the evaluator for `cfg.regime`. Known-parameter regimes use a
    /// closed form when one is exact for `params` (`σ_T = 0` or `B_c = 0`)
    /// and sample `d ~ CN(Δ, G)` otherwise; unknown parameters always run
    /// the full channel simulation.
    pub fn new(params: &ChannelParams, mode: SpatialMode, cfg: &TestConfig, trials: usize) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        ensure(trials >= 1, || "trials must be at least 1".into())?;
        ensure(params.sigma_n2 > 0.0, || "sigma_N^2 must be positive".into())?;
        let closed_form_ok = cfg.threshold_override.is_none();
        let exact_low_bc = params.sigma_t == 0.0 || params.coherence_bw == 0.0;
        let kind = match cfg.regime {
            Regime::GeneralKnownParams if exact_low_bc && closed_form_ok => Evaluator::LowBc,
            Regime::GeneralKnownParams => {
                Evaluator::Numerical { r: stats::covariance_r(params)?, g: stats::covariance_g(params)? }
            }
            Regime::LowBcClosedForm if closed_form_ok => Evaluator::LowBc,
            Regime::LowBcClosedForm => Evaluator::Numerical {
                r: stats::asymptotic_r_low_bc(params)?,
                g: stats::asymptotic_g_low_bc(params)?,
            },
            Regime::HighBcNumerical => Evaluator::Numerical {
                r: stats::asymptotic_r_high_bc(params)?,
                g: stats::asymptotic_g_high_bc(params)?,
            },
            Regime::FullSpatialCorrelation if closed_form_ok => Evaluator::FullSpatial(stats::covariance_r(params)?),
            Regime::TimeInvariantBenchmark if closed_form_ok => Evaluator::TimeInvariant,
            Regime::FullSpatialCorrelation | Regime::TimeInvariantBenchmark | Regime::UnknownParams => {
                Evaluator::Simulated
            }
        };
        Ok(Self {
            params: *params,
            mode,
            cfg: *cfg,
            trials,
            threshold: detect::threshold(cfg, params.tones)?,
            kind,
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// β for fixed responses `hbar_a`, `hbar_e`. `rng` is only consulted by
    /// Monte Carlo evaluators.
    pub fn evaluate(&self, hbar_a: &[Complex64], hbar_e: &[Complex64], rng: &RngStream) -> Result<PairMissRate> {
        let alpha = self.cfg.alpha;
        match &self.kind {
            Evaluator::LowBc => Ok(PairMissRate::exact(detect::miss_rate_low_bc(alpha, &self.params, hbar_a, hbar_e)?)),
            Evaluator::TimeInvariant => Ok(PairMissRate::exact(detect::miss_rate_time_invariant(
                alpha,
                self.params.sigma_n2,
                hbar_a,
                hbar_e,
            )?)),
            Evaluator::FullSpatial(r) => {
                Ok(PairMissRate::exact(detect::miss_rate_full_spatial(alpha, hbar_a, hbar_e, r)?))
            }
            Evaluator::Numerical { r, g } => {
                let est = detect::miss_rate_numerical_at(self.threshold, hbar_a, hbar_e, r, g, self.trials, rng)?;
                Ok(PairMissRate { beta: est.rate, std_err: est.std_err })
            }
            Evaluator::Simulated => {
                let mode = match self.cfg.regime {
                    Regime::FullSpatialCorrelation => SpatialMode::FullyCorrelatedVariation,
                    _ => self.mode,
                };
                let rates =
                    detect::simulated_error_rates(&self.params, mode, hbar_a, hbar_e, &self.cfg, self.trials, rng)?;
                Ok(PairMissRate { beta: rates.beta_hat.rate, std_err: rates.beta_hat.std_err })
            }
        }
    }
}

/// Full parameter set for room experiments. `channel.sigma_t` and
/// `channel.sigma_n2` are placeholders; they are derived from `b_t`, the room
/// gain, and `budget` whenever the scenario is resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene: RoomScene,
    pub grid: GridSpec,
    pub bob: Position,
    pub budget: LinkBudget,
    pub channel: ChannelParams,
    pub b_t: f64,
    pub mode: SpatialMode,
    pub test: TestConfig,
    /// Monte Carlo trials per pair where no closed form applies.
    pub trials: usize,
}

/// Amplitude scale of the default room. With `P_T = 10 mW`, `M = 10`,
/// `W = 10 MHz` it puts the median per-tone SNR over the grid near 6.4 dB.
pub const DEFAULT_ROOM_GAIN: f64 = 2.16e-5;

impl Default for Scenario {
    /// A 10 m × 8 m × 3 m room with a 21 × 16 grid at 0.2 m spacing and Bob
    /// high in the far corner.
    fn default() -> Self {
        Self {
            scene: RoomScene { gain: DEFAULT_ROOM_GAIN, ..RoomScene::default() },
            grid: GridSpec { origin: [0.5, 0.5], spacing: 0.2, counts: (21, 16), height: 2.0 },
            bob: [8.5, 6.5, 2.5],
            budget: LinkBudget::default(),
            channel: ChannelParams {
                f0: 5e9,
                bandwidth: 10e6,
                tones: 10,
                ar_coeff: 0.9,
                coherence_bw: 0.0,
                sigma_t: 0.0,
                sigma_n2: 0.0,
                probe_interval: 1e-3,
            },
            b_t: 0.5,
            mode: SpatialMode::IndependentVariation,
            test: TestConfig::new(0.01, Regime::GeneralKnownParams),
            trials: 10_000,
        }
    }
}

/// A scenario with its fixed responses computed and `σ_T`, `σ_N^2` filled in.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub params: ChannelParams,
    pub responses: Vec<Vec<Complex64>>,
    pub room_gain: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.grid.validate()?;
        self.budget.validate()?;
        self.test.validate()?;
        ensure(self.trials >= 1, || "trials must be at least 1".into())?;
        sigma_t_from_bt(self.b_t, 0.0)?;
        ChannelParams { sigma_t: 0.0, sigma_n2: 0.0, ..self.channel }.validate()?;
        if !self.scene.contains(&self.bob) {
            return Err(Error::DegenerateGeometry(format!("Bob at {:?} lies outside the room", self.bob)));
        }
        for p in [self.grid.points().first(), self.grid.points().last()].into_iter().flatten() {
            if !self.scene.contains(p) {
                return Err(Error::DegenerateGeometry(format!("grid point {p:?} lies outside the room")));
            }
        }
        Ok(())
    }

    /// Ray traces the grid and derives `σ_T`, `σ_N^2`.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        self.validate()?;
        let mut params = self.channel;
        let responses = raytrace::grid_responses(&self.scene, &self.grid, &self.bob, &params)?;
        let room_gain = raytrace::rms_magnitude(&responses);
        params.sigma_t = sigma_t_from_bt(self.b_t, room_gain)?;
        params.sigma_n2 = noise_variance(&self.budget, params.tones)?;
        Ok(ResolvedScenario { params, responses, room_gain })
    }
}

/// β for one Alice–Eve pair: fixed responses from the ray tracer, then the
/// evaluator matching `cfg.regime`.
#[allow(clippy::too_many_arguments)]
pub fn pair_miss_rate(
    scene: &RoomScene,
    alice: &Position,
    eve: &Position,
    bob: &Position,
    params: &ChannelParams,
    mode: SpatialMode,
    cfg: &TestConfig,
    trials: usize,
    rng: &RngStream,
) -> Result<PairMissRate> {
    if alice == bob || eve == bob {
        return Err(Error::DegenerateGeometry("Alice and Eve must differ from Bob".into()));
    }
    let hbar_a = raytrace::fixed_response(scene, alice, bob, params)?;
    let hbar_e = raytrace::fixed_response(scene, eve, bob, params)?;
    PairEvaluator::new(params, mode, cfg, trials)?.evaluate(&hbar_a, &hbar_e, rng)
}

/// End-to-end `(α̂, β̂)` for one pair through the time-series channel.
#[allow(clippy::too_many_arguments)]
pub fn empirical_error_rates(
    scene: &RoomScene,
    alice: &Position,
    eve: &Position,
    bob: &Position,
    params: &ChannelParams,
    mode: SpatialMode,
    cfg: &TestConfig,
    trials: usize,
    rng: &RngStream,
) -> Result<ErrorRates> {
    let hbar_a = raytrace::fixed_response(scene, alice, bob, params)?;
    let hbar_e = raytrace::fixed_response(scene, eve, bob, params)?;
    detect::simulated_error_rates(params, mode, &hbar_a, &hbar_e, cfg, trials, rng)
}

/// The one parameter a sweep varies, with its values in output order.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    VariationIndex(Vec<f64>),
    Bandwidth(Vec<f64>),
    Tones(Vec<usize>),
    TxPower(Vec<f64>),
    CoherenceBandwidth(Vec<f64>),
    SpatialMode(Vec<SpatialMode>),
}

/// One swept value, printable for tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Count(usize),
    Mode(SpatialMode),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Count(n) => write!(f, "{n}"),
            SweepValue::Mode(m) => f.write_str(m.name()),
        }
    }
}

impl Sweep {
    pub const AXES: [&'static str; 6] = ["b_T", "W", "M", "P_T", "B_c", "spatial_mode"];

    pub fn name(&self) -> &'static str {
        match self {
            Sweep::VariationIndex(_) => "b_T",
            Sweep::Bandwidth(_) => "W",
            Sweep::Tones(_) => "M",
            Sweep::TxPower(_) => "P_T",
            Sweep::CoherenceBandwidth(_) => "B_c",
            Sweep::SpatialMode(_) => "spatial_mode",
        }
    }

    pub fn values(&self) -> Vec<SweepValue> {
        match self {
            Sweep::VariationIndex(v) | Sweep::Bandwidth(v) | Sweep::TxPower(v) | Sweep::CoherenceBandwidth(v) => {
                v.iter().map(|&x| SweepValue::Number(x)).collect()
            }
            Sweep::Tones(v) => v.iter().map(|&n| SweepValue::Count(n)).collect(),
            Sweep::SpatialMode(v) => v.iter().map(|&m| SweepValue::Mode(m)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::VariationIndex(v) | Sweep::Bandwidth(v) | Sweep::TxPower(v) | Sweep::CoherenceBandwidth(v) => {
                v.len()
            }
            Sweep::Tones(v) => v.len(),
            Sweep::SpatialMode(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `base` with value `i` substituted. Sweeping the spatial mode also moves
    /// known-parameter tests to the matching model: fully correlated variation
    /// is scored with the full-spatial formula, independent variation with the
    /// general test.
    pub fn apply(&self, base: &Scenario, i: usize) -> Scenario {
        let mut s = base.clone();
        match self {
            Sweep::VariationIndex(v) => s.b_t = v[i],
            Sweep::Bandwidth(v) => s.channel.bandwidth = v[i],
            Sweep::Tones(v) => s.channel.tones = v[i],
            Sweep::TxPower(v) => s.budget.tx_power_mw = v[i],
            Sweep::CoherenceBandwidth(v) => s.channel.coherence_bw = v[i],
            Sweep::SpatialMode(v) => {
                s.mode = v[i];
                s.test.regime = match (v[i], s.test.regime) {
                    (
                        SpatialMode::FullyCorrelatedVariation,
                        Regime::GeneralKnownParams | Regime::LowBcClosedForm | Regime::HighBcNumerical,
                    ) => Regime::FullSpatialCorrelation,
                    (SpatialMode::IndependentVariation, Regime::FullSpatialCorrelation) => {
                        Regime::GeneralKnownParams
                    }
                    (_, r) => r,
                };
            }
        }
        s
    }
}

/// Room-averaged miss rates, one row per swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub swept_param: &'static str,
    pub values: Vec<SweepValue>,
    pub beta_bar: Vec<f64>,
    /// Standard error of each `beta_bar` over pairs.
    pub standard_error: Vec<f64>,
    /// Regime actually used for each value.
    pub regimes: Vec<Regime>,
    pub pair_count: usize,
}

/// Unordered grid index pairs `(alice, eve)`: all of them when `budget`
/// covers `N_s(N_s - 1)/2`, otherwise a uniform sample without replacement,
/// returned in lexicographic order.
pub fn select_pairs(grid_len: usize, budget: usize, rng: &RngStream) -> Result<Vec<(usize, usize)>> {
    ensure(budget >= 1, || "pair budget must be at least 1".into())?;
    if grid_len < 2 {
        return Err(Error::EmptyGrid);
    }
    let all: Vec<(usize, usize)> =
        (0..grid_len).flat_map(|i| (i + 1..grid_len).map(move |j| (i, j))).collect();
    if budget >= all.len() {
        return Ok(all);
    }
    let mut picked = index::sample(&mut rng.derive(0).rng(), all.len(), budget).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| all[k]).collect())
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// β for each pair in `pairs`, in order. Pair `p` always draws from stream
/// `rng.derive(p)`, so results do not depend on the worker count and every
/// sweep value sees common random numbers.
pub fn pair_miss_rates(scenario: &Scenario, pairs: &[(usize, usize)], rng: &RngStream) -> Result<Vec<f64>> {
    let resolved = scenario.resolve()?;
    let eval = PairEvaluator::new(&resolved.params, scenario.mode, &scenario.test, scenario.trials)?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(a, e))| {
            Ok(eval.evaluate(&resolved.responses[a], &resolved.responses[e], &rng.derive(p as u64))?.beta)
        })
        .collect()
}

/// Room-averaged β̄ and its standard error over the given pairs.
pub fn room_average(scenario: &Scenario, pairs: &[(usize, usize)], rng: &RngStream) -> Result<(f64, f64)> {
    ensure(!pairs.is_empty(), || "no pairs to average".into())?;
    Ok(mean_and_se(&pair_miss_rates(scenario, pairs, rng)?))
}

/// Sweeps one parameter over the room grid. Pairs are chosen once from
/// `rng` and reused for every value.
pub fn room_sweep(base: &Scenario, sweep: &Sweep, pair_budget: usize, rng: &RngStream) -> Result<SweepResult> {
    ensure(!sweep.is_empty(), || format!("sweep over {} has no values", sweep.name()))?;
    base.grid.validate()?;
    let pairs = select_pairs(base.grid.len(), pair_budget, rng)?;
    let mc = rng.derive(1);
    let mut out = SweepResult {
        swept_param: sweep.name(),
        values: sweep.values(),
        beta_bar: Vec::with_capacity(sweep.len()),
        standard_error: Vec::with_capacity(sweep.len()),
        regimes: Vec::with_capacity(sweep.len()),
        pair_count: pairs.len(),
    };
    for i in 0..sweep.len() {
        let scenario = sweep.apply(base, i);
        let (mean, se) = room_average(&scenario, &pairs, &mc)?;
        out.beta_bar.push(mean);
        out.standard_error.push(se);
        out.regimes.push(scenario.test.regime);
    }
    Ok(out)
}
