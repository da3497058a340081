//! Room-scale protocol on a small grid.

use phyauth::channel::SpatialMode;
use phyauth::detect::{miss_rate_low_bc, Regime, TestConfig};
use phyauth::harness::{empirical_error_rates, room_sweep, Scenario, Sweep};
use phyauth::numerics::RngStream;
use phyauth::raytrace::{fixed_response, GridSpec};

fn small() -> Scenario {
    Scenario { grid: GridSpec { origin: [1.0, 1.0], spacing: 0.4, counts: (6, 5), height: 2.0 }, ..Scenario::default() }
}

#[test]
fn power_helps() {
    let s = small();
    let res = room_sweep(&s, &Sweep::TxPower(vec![1.0, 10.0, 100.0, 1000.0]), 435, &RngStream::new(1, 0)).unwrap();
    assert_eq!(res.pair_count, 435);
    for w in res.beta_bar.windows(2) {
        assert!(w[1] <= w[0], "{:?}", res.beta_bar);
    }
}

#[test]
fn stronger_variation_helps_at_high_power() {
    let mut s = small();
    s.budget.tx_power_mw = 100.0;
    let res = room_sweep(&s, &Sweep::VariationIndex(vec![0.01, 1.0]), 435, &RngStream::new(2, 0)).unwrap();
    assert!(res.beta_bar[1] < res.beta_bar[0], "{:?}", res.beta_bar);
}

#[test]
fn empirical_rates_track_closed_form() {
    let mut s = small();
    s.budget.tx_power_mw = 1.0;
    let r = s.resolve().unwrap();
    let pts = s.grid.points();
    let (a, e) = (&pts[3], &pts[17]);
    let cfg = TestConfig::new(0.01, Regime::GeneralKnownParams);
    let rates =
        empirical_error_rates(&s.scene, a, e, &s.bob, &r.params, s.mode, &cfg, 40_000, &RngStream::new(3, 0)).unwrap();
    let ha = fixed_response(&s.scene, a, &s.bob, &r.params).unwrap();
    let he = fixed_response(&s.scene, e, &s.bob, &r.params).unwrap();
    let beta = miss_rate_low_bc(0.01, &r.params, &ha, &he).unwrap();
    assert!((rates.beta_hat.rate - beta).abs() < 0.01, "{} vs {beta}", rates.beta_hat.rate);
    assert!((rates.alpha_hat.rate - 0.01).abs() < 0.003);
}

#[test]
fn correlated_spoofer_at_alices_spot_is_invisible() {
    let s = small();
    let r = s.resolve().unwrap();
    let p = s.grid.points()[7];
    let cfg = TestConfig::new(0.01, Regime::GeneralKnownParams);
    let rates = empirical_error_rates(
        &s.scene,
        &p,
        &p,
        &s.bob,
        &r.params,
        SpatialMode::FullyCorrelatedVariation,
        &cfg,
        40_000,
        &RngStream::new(4, 0),
    )
    .unwrap();
    assert!((rates.beta_hat.rate - 0.99).abs() < 0.003, "{}", rates.beta_hat.rate);
}
