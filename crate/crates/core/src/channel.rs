//! Time-variant channel frequency responses.
//!
//! Each tone sample is `H_m[k] = Hbar_m + eps_m[k] + N_m[k]`: a fixed,
//! location-specific part, a zero-mean variable part produced by a WSSUS
//! tapped delay line with an exponential power delay profile and AR-1 tap
//! dynamics, and i.i.d. `CN(0, sigma_N^2)` receiver noise.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure, ensure_len, Result};
use crate::numerics::RngStream;

/// Fraction of the variation power allowed to fall beyond the last tap.
pub const TRUNCATION_POWER: f64 = 1e-6;

/// Physical and statistical parameters of one channel measurement setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Carrier frequency `f0`, Hz.
    pub f0: f64,
    /// Measurement bandwidth `W`, Hz.
    pub bandwidth: f64,
    /// Number of tones `M`.
    pub tones: usize,
    /// AR-1 coefficient `a` per probe interval.
    pub ar_coeff: f64,
    /// Coherence bandwidth `B_c` of the variable part, Hz. `f64::INFINITY`
    /// selects fully tone-correlated variation.
    pub coherence_bw: f64,
    /// Standard deviation `sigma_T` of the variable part.
    pub sigma_t: f64,
    /// Per-tone noise variance `sigma_N^2`.
    pub sigma_n2: f64,
    /// Probe interval `T`, s. Bookkeeping only.
    pub probe_interval: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.f0.is_finite() && self.f0 >= 0.0, || format!("f0 = {} must be finite and nonnegative", self.f0))?;
        ensure(self.bandwidth.is_finite() && self.bandwidth > 0.0, || {
            format!("W = {} must be positive", self.bandwidth)
        })?;
        ensure(self.tones >= 1, || "M must be at least 1".into())?;
        ensure((0.0..=1.0).contains(&self.ar_coeff), || format!("a = {} must lie in [0, 1]", self.ar_coeff))?;
        ensure(self.coherence_bw >= 0.0, || format!("B_c = {} must be nonnegative", self.coherence_bw))?;
        ensure(self.sigma_t.is_finite() && self.sigma_t >= 0.0, || {
            format!("sigma_T = {} must be finite and nonnegative", self.sigma_t)
        })?;
        ensure(self.sigma_n2.is_finite() && self.sigma_n2 >= 0.0, || {
            format!("sigma_N^2 = {} must be finite and nonnegative", self.sigma_n2)
        })
    }

    /// `Δf = W / M`.
    pub fn tone_spacing(&self) -> f64 {
        self.bandwidth / self.tones as f64
    }

    /// `Δτ = 1 / W`.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// `γ = 2π B_c`.
    pub fn gamma(&self) -> f64 {
        2.0 * PI * self.coherence_bw
    }

    /// Frequency of tone `m` for `m = 1..=M`.
    pub fn tone_frequency(&self, m: usize) -> f64 {
        self.f0 - 0.5 * self.bandwidth + m as f64 * self.tone_spacing()
    }

    /// All tone frequencies in order.
    pub fn tone_frequencies(&self) -> Vec<f64> {
        (1..=self.tones).map(|m| self.tone_frequency(m)).collect()
    }
}

/// Spatial correlation of the variable part between Alice's and Eve's links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpatialMode {
    /// `eps_E` and `eps_A` are independent and identically distributed.
    IndependentVariation,
    /// `eps_E = eps_A`.
    FullyCorrelatedVariation,
}

impl SpatialMode {
    pub fn name(&self) -> &'static str {
        match self {
            SpatialMode::IndependentVariation => "independent",
            SpatialMode::FullyCorrelatedVariation => "fully_correlated",
        }
    }

    pub fn from_name(name: &str) -> Option<SpatialMode> {
        [SpatialMode::IndependentVariation, SpatialMode::FullyCorrelatedVariation]
            .into_iter()
            .find(|m| m.name() == name || format!("{m:?}") == name)
    }
}

/// Tap amplitudes `A_l[k]` of the variable part with their powers `P_τ[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapState {
    pub amps: Vec<Complex64>,
    pub profile: Vec<f64>,
    pub k: u64,
}

impl TapState {
    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    /// Draws every tap from its stationary law `CN(0, P_τ[l])` and resets `k`.
    pub fn init(&mut self, rng: &mut RngStream) {
        for (amp, &p) in self.amps.iter_mut().zip(&self.profile) {
            *amp = rng.complex_gaussian(p);
        }
        self.k = 0;
    }

    /// One AR-1 step: `A_l[k] = a A_l[k-1] + sqrt((1 - a^2) P_τ[l]) u_l[k]`.
    pub fn step(&mut self, a: f64, rng: &mut RngStream) {
        let innovation = 1.0 - a * a;
        if innovation > 0.0 {
            for (amp, &p) in self.amps.iter_mut().zip(&self.profile) {
                *amp = *amp * a + rng.complex_gaussian(innovation * p);
            }
        }
        self.k += 1;
    }

    /// A state with the same profile and freshly drawn stationary taps.
    pub fn fresh(&self, rng: &mut RngStream) -> TapState {
        let mut s = TapState { amps: vec![Complex64::new(0.0, 0.0); self.len()], profile: self.profile.clone(), k: 0 };
        s.init(rng);
        s
    }
}

/// Exponential power delay profile, truncated where the discarded power
/// falls to `TRUNCATION_POWER * sigma_T^2`. Amplitudes start at zero.
pub fn build_delay_profile(params: &ChannelParams) -> Result<TapState> {
    params.validate()?;
    let power = params.sigma_t * params.sigma_t;
    let profile = if power == 0.0 {
        vec![0.0]
    } else if params.coherence_bw.is_infinite() {
        vec![power]
    } else if params.coherence_bw == 0.0 {
        // M equal taps project through a length-M DFT onto exactly
        // uncorrelated tones: the q -> 1 limit of the folded exponential line.
        vec![power / params.tones as f64; params.tones]
    } else {
        // γ Δτ
        let x = 2.0 * PI * params.coherence_bw / params.bandwidth;
        let taps = ((1.0 / TRUNCATION_POWER).ln() / x).ceil().max(1.0) as usize;
        let head = -(-x).exp_m1();
        (0..taps).map(|l| power * head * (-x * l as f64).exp()).collect()
    };
    Ok(TapState { amps: vec![Complex64::new(0.0, 0.0); profile.len()], profile, k: 0 })
}

/// Maps tap amplitudes to tone samples.
///
/// `eps_m = Σ_l A_l exp(-j2π f_m l / W)`. Since `f_m l / W` splits into a
/// per-tap phase `(f0/W - 1/2) l` and `m l / M`, taps are folded modulo `M`
/// first and then transformed with an `M x M` table.
#[derive(Debug, Clone)]
pub struct ToneProjector {
    tones: usize,
    tap_phase: Vec<Complex64>,
    twiddle: Vec<Complex64>,
}

impl ToneProjector {
    pub fn new(params: &ChannelParams, taps: usize) -> Self {
        let m_count = params.tones;
        let base = (params.f0 / params.bandwidth - 0.5).rem_euclid(1.0);
        let tap_phase = (0..taps)
            .map(|l| Complex64::from_polar(1.0, -2.0 * PI * (base * l as f64).rem_euclid(1.0)))
            .collect();
        let mut twiddle = Vec::with_capacity(m_count * m_count);
        for m in 1..=m_count {
            for r in 0..m_count {
                let idx = (m * r) % m_count;
                twiddle.push(Complex64::from_polar(1.0, -2.0 * PI * idx as f64 / m_count as f64));
            }
        }
        Self { tones: m_count, tap_phase, twiddle }
    }

    pub fn tones(&self) -> usize {
        self.tones
    }

    /// Adds the projection of `amps` onto `out`.
    pub fn accumulate(&self, amps: &[Complex64], out: &mut [Complex64]) {
        let m_count = self.tones;
        if amps.len() == 1 {
            let v = amps[0];
            out.iter_mut().for_each(|o| *o += v);
            return;
        }
        let mut folded = vec![Complex64::new(0.0, 0.0); m_count];
        for (l, (a, c)) in amps.iter().zip(&self.tap_phase).enumerate() {
            folded[l % m_count] += a * c;
        }
        for (m, o) in out.iter_mut().enumerate() {
            let row = &self.twiddle[m * m_count..(m + 1) * m_count];
            *o += row.iter().zip(&folded).map(|(w, b)| w * b).sum::<Complex64>();
        }
    }

    pub fn project(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.tones];
        self.accumulate(amps, &mut out);
        out
    }
}

/// Frequency response of the variable part for the current taps.
pub fn taps_to_frequency(state: &TapState, params: &ChannelParams) -> Vec<Complex64> {
    ToneProjector::new(params, state.len()).project(&state.amps)
}

/// A noisy length-`M` frequency response at time index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqResponse {
    pub samples: Vec<Complex64>,
    pub k: u64,
}

impl FreqResponse {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `fixed + eps(state) + noise`, with fresh noise on every call.
pub fn sample_response(
    fixed: &[Complex64],
    state: &TapState,
    params: &ChannelParams,
    rng: &mut RngStream,
) -> Result<FreqResponse> {
    ensure_len(params.tones, fixed.len())?;
    let mut samples = fixed.to_vec();
    ToneProjector::new(params, state.len()).accumulate(&state.amps, &mut samples);
    for s in samples.iter_mut() {
        *s += rng.complex_gaussian(params.sigma_n2);
    }
    Ok(FreqResponse { samples, k: state.k })
}

/// Eve's variable-part state given Alice's: an independent stationary draw,
/// or Alice's taps themselves.
pub fn eve_variation(alice: &TapState, mode: SpatialMode, rng: &mut RngStream) -> TapState {
    match mode {
        SpatialMode::IndependentVariation => alice.fresh(rng),
        SpatialMode::FullyCorrelatedVariation => alice.clone(),
    }
}

/// Joint Alice/Eve channel to Bob, stepped together in time.
///
/// In the fully correlated mode Eve shares Alice's taps; otherwise she owns
/// an independent state with the same profile.
#[derive(Debug, Clone)]
pub struct PairChannel {
    params: ChannelParams,
    mode: SpatialMode,
    projector: ToneProjector,
    hbar_a: Vec<Complex64>,
    hbar_e: Vec<Complex64>,
    alice: TapState,
    eve: Option<TapState>,
}

impl PairChannel {
    pub fn new(
        params: ChannelParams,
        mode: SpatialMode,
        hbar_a: Vec<Complex64>,
        hbar_e: Vec<Complex64>,
    ) -> Result<Self> {
        ensure_len(params.tones, hbar_a.len())?;
        ensure_len(params.tones, hbar_e.len())?;
        let alice = build_delay_profile(&params)?;
        let projector = ToneProjector::new(&params, alice.len());
        let eve = match mode {
            SpatialMode::IndependentVariation => Some(alice.clone()),
            SpatialMode::FullyCorrelatedVariation => None,
        };
        Ok(Self { params, mode, projector, hbar_a, hbar_e, alice, eve })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn mode(&self) -> SpatialMode {
        self.mode
    }

    pub fn alice_taps(&self) -> &TapState {
        &self.alice
    }

    pub fn eve_taps(&self) -> &TapState {
        self.eve.as_ref().unwrap_or(&self.alice)
    }

    /// Draws all taps from the stationary distribution.
    pub fn init(&mut self, rng: &mut RngStream) {
        self.alice.init(rng);
        if let Some(eve) = self.eve.as_mut() {
            eve.init(rng);
        }
    }

    pub fn step(&mut self, rng: &mut RngStream) {
        let a = self.params.ar_coeff;
        self.alice.step(a, rng);
        if let Some(eve) = self.eve.as_mut() {
            eve.step(a, rng);
        }
    }

    fn respond(&self, fixed: &[Complex64], taps: &TapState, rng: &mut RngStream, out: &mut [Complex64]) {
        out.copy_from_slice(fixed);
        self.projector.accumulate(&taps.amps, out);
        let v = self.params.sigma_n2;
        for o in out.iter_mut() {
            *o += rng.complex_gaussian(v);
        }
    }

    /// Bob's noisy measurement of the Alice link at the current time.
    pub fn alice_response_into(&self, rng: &mut RngStream, out: &mut [Complex64]) {
        self.respond(&self.hbar_a, &self.alice, rng, out);
    }

    /// Bob's noisy measurement of the Eve link at the current time.
    pub fn eve_response_into(&self, rng: &mut RngStream, out: &mut [Complex64]) {
        self.respond(&self.hbar_e, self.eve_taps(), rng, out);
    }

    pub fn alice_response(&self, rng: &mut RngStream) -> FreqResponse {
        let mut samples = vec![Complex64::new(0.0, 0.0); self.params.tones];
        self.alice_response_into(rng, &mut samples);
        FreqResponse { samples, k: self.alice.k }
    }

    pub fn eve_response(&self, rng: &mut RngStream) -> FreqResponse {
        let mut samples = vec![Complex64::new(0.0, 0.0); self.params.tones];
        self.eve_response_into(rng, &mut samples);
        FreqResponse { samples, k: self.eve_taps().k }
    }
}
