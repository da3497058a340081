//! The closed-form difference covariances against the time-series simulator.

use num_complex::Complex64;
use phyauth::channel::{build_delay_profile, taps_to_frequency, ChannelParams, SpatialMode};
use phyauth::numerics::RngStream;
use phyauth::stats::{self, empirical_difference_covariances, relative_frobenius_error};

fn params(tones: usize, coherence_bw: f64) -> ChannelParams {
    ChannelParams {
        f0: 5e9,
        bandwidth: 10e6,
        tones,
        ar_coeff: 0.8,
        coherence_bw,
        sigma_t: 1.0,
        sigma_n2: 0.2,
        probe_interval: 1e-3,
    }
}

#[test]
fn r_and_g_match_simulation() {
    for (i, bc) in [0.0, 0.5e6, 2e6, 8e6, f64::INFINITY].into_iter().enumerate() {
        let p = params(6, bc);
        let (r_hat, g_hat) =
            empirical_difference_covariances(&p, SpatialMode::IndependentVariation, 200_000, &RngStream::new(5, i as u64))
                .unwrap();
        let er = relative_frobenius_error(&r_hat, &stats::covariance_r(&p).unwrap()).unwrap();
        let eg = relative_frobenius_error(&g_hat, &stats::covariance_g(&p).unwrap()).unwrap();
        assert!(er < 0.03, "B_c = {bc}: R error {er}");
        assert!(eg < 0.03, "B_c = {bc}: G error {eg}");
    }
}

#[test]
fn correlated_spoofer_sees_r() {
    let p = params(5, 2e6);
    let (r_hat, g_hat) =
        empirical_difference_covariances(&p, SpatialMode::FullyCorrelatedVariation, 100_000, &RngStream::new(6, 0))
            .unwrap();
    let r = stats::covariance_r(&p).unwrap();
    assert!(relative_frobenius_error(&r_hat, &r).unwrap() < 0.03);
    assert!(relative_frobenius_error(&g_hat, &r).unwrap() < 0.03);
}

/// Tone covariance of the variable part alone: `σ_T^2 (1 - q)/(1 - q e^{-j2π(m-n)/M})`,
/// truncation aside, computed exactly from the tap powers.
#[test]
fn tone_covariance_from_tap_powers() {
    let p = params(8, 1.5e6);
    let state = build_delay_profile(&p).unwrap();
    let mut cols = Vec::new();
    for l in 0..state.len() {
        let mut s = state.clone();
        s.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        s.amps[l] = Complex64::new(state.profile[l].sqrt(), 0.0);
        cols.push(taps_to_frequency(&s, &p));
    }
    let q = (-2.0 * std::f64::consts::PI * p.coherence_bw / p.bandwidth).exp();
    for m in 0..p.tones {
        for n in 0..p.tones {
            let got: Complex64 = cols.iter().map(|c| c[m] * c[n].conj()).sum();
            let theta = -2.0 * std::f64::consts::PI * (m as f64 - n as f64) / p.tones as f64;
            let want = Complex64::new(1.0 - q, 0.0) / (Complex64::new(1.0, 0.0) - Complex64::from_polar(q, theta));
            assert!((got - want).norm() < 2e-6, "({m}, {n}): {got} vs {want}");
        }
    }
}
