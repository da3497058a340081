//! Detector behaviour on the simulated channel.

use num_complex::Complex64;
use phyauth::channel::{ChannelParams, SpatialMode};
use phyauth::detect::{
    miss_rate_full_spatial, miss_rate_low_bc, miss_rate_time_invariant, roc_unknown_params, simulated_error_rates,
    Regime, TestConfig,
};
use phyauth::numerics::{chi2_cdf, noncentral_chi2_cdf, HermitianMatrix, RngStream};
use phyauth::stats;

fn params(tones: usize, bc: f64, sigma_t: f64) -> ChannelParams {
    ChannelParams {
        f0: 5e9,
        bandwidth: 10e6,
        tones,
        ar_coeff: 0.9,
        coherence_bw: bc,
        sigma_t,
        sigma_n2: 0.3,
        probe_interval: 1e-3,
    }
}

fn fixed(tones: usize, phase: f64) -> Vec<Complex64> {
    (0..tones).map(|m| Complex64::from_polar(1.0, phase * m as f64)).collect()
}

#[test]
fn false_alarm_rate_is_nominal() {
    let cfg = TestConfig::new(0.05, Regime::GeneralKnownParams);
    for (i, bc) in [0.0, 2e6, f64::INFINITY].into_iter().enumerate() {
        let p = params(6, bc, 1.0);
        let h = fixed(6, 0.3);
        let rates = simulated_error_rates(&p, SpatialMode::IndependentVariation, &h, &h, &cfg, 40_000, &RngStream::new(1, i as u64))
            .unwrap();
        let a = rates.alpha_hat;
        assert!((a.rate - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 40_000.0).sqrt(), "B_c = {bc}: {}", a.rate);
    }
}

#[test]
fn closed_form_matches_simulation() {
    let cfg = TestConfig::new(0.01, Regime::GeneralKnownParams);
    let p = params(5, 0.0, 0.8);
    let ha = fixed(5, 0.0);
    let he: Vec<Complex64> = fixed(5, 0.9).iter().map(|h| h * 0.35).collect();
    let beta = miss_rate_low_bc(0.01, &p, &ha, &he).unwrap();
    assert!(beta > 0.05 && beta < 0.95, "{beta}");
    let rates =
        simulated_error_rates(&p, SpatialMode::IndependentVariation, &ha, &he, &cfg, 40_000, &RngStream::new(2, 0)).unwrap();
    assert!((rates.beta_hat.rate - beta).abs() < 0.01, "{} vs {beta}", rates.beta_hat.rate);
}

#[test]
fn full_spatial_formula_matches_simulation() {
    let cfg = TestConfig::new(0.01, Regime::FullSpatialCorrelation);
    let p = params(4, 2e6, 1.0);
    let ha = fixed(4, 0.0);
    let he: Vec<Complex64> = fixed(4, 1.3).iter().map(|h| h * 0.6).collect();
    let r = stats::covariance_r(&p).unwrap();
    let beta = miss_rate_full_spatial(0.01, &ha, &he, &r).unwrap();
    assert!(beta > 0.05 && beta < 0.95, "{beta}");
    let rates =
        simulated_error_rates(&p, SpatialMode::FullyCorrelatedVariation, &ha, &he, &cfg, 40_000, &RngStream::new(3, 0))
            .unwrap();
    assert!((rates.beta_hat.rate - beta).abs() < 0.01, "{} vs {beta}", rates.beta_hat.rate);
}

#[test]
fn reductions_without_variation() {
    let p = params(7, 2e6, 0.0);
    let ha = fixed(7, 0.1);
    let he: Vec<Complex64> = fixed(7, 0.5).iter().map(|h| h * 0.3).collect();
    let low = miss_rate_low_bc(0.01, &p, &ha, &he).unwrap();
    let ti = miss_rate_time_invariant(0.01, p.sigma_n2, &ha, &he).unwrap();
    let r = stats::covariance_r(&p).unwrap();
    let fs = miss_rate_full_spatial(0.01, &ha, &he, &r).unwrap();
    assert!((low - ti).abs() < 1e-12);
    assert!((fs - ti).abs() < 1e-12);
    for x in [0.5, 3.0, 17.0, 60.0] {
        assert!((noncentral_chi2_cdf(x, 14, 0.0).unwrap() - chi2_cdf(x, 14).unwrap()).abs() < 1e-12);
    }
    let frozen = ChannelParams { ar_coeff: 1.0, ..params(7, 2e6, 1.0) };
    let expect = HermitianMatrix::scaled_identity(7, 2.0 * frozen.sigma_n2);
    let got = stats::covariance_r(&frozen).unwrap();
    for (a, b) in got.entries().iter().zip(expect.entries()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn unknown_params_roc_is_a_staircase() {
    let p = params(6, 2e6, 0.5);
    let ha = fixed(6, 0.0);
    let he = fixed(6, 0.7);
    let ts: Vec<f64> = (0..40).map(|i| i as f64 * 2.0).collect();
    let roc =
        roc_unknown_params(&p, SpatialMode::IndependentVariation, &ha, &he, &ts, 5_000, &RngStream::new(4, 0)).unwrap();
    assert_eq!(roc.len(), ts.len());
    for w in roc.windows(2) {
        assert!(w[1].alpha_hat <= w[0].alpha_hat);
        assert!(w[1].beta_hat >= w[0].beta_hat);
    }
    assert_eq!(roc[0].alpha_hat, 1.0);
    assert_eq!(roc[0].beta_hat, 0.0);
}
