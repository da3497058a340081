//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit if
//! any failed. Runs without the libtest harness so the report is never
//! captured.

use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use phyauth::channel::{ChannelParams, SpatialMode};
use phyauth::detect::{
    self, miss_rate_full_spatial, miss_rate_low_bc, miss_rate_time_invariant, Regime, TestConfig,
};
use phyauth::harness::{self, mean_and_se, pair_miss_rates, select_pairs, Scenario, Sweep};
use phyauth::numerics::{chi2_cdf, chi2_inv, noncentral_chi2_cdf, HermitianMatrix, RngStream};
use phyauth::stats::{self, empirical_difference_covariances, relative_frobenius_error};
use phyauth_cli::{run_file, RunOptions};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion(n: u32, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {n} [{}] {title}: {} ({:.1} s of {} s){}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " — over time budget" }
    );
    pass
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

/// Mean and standard error of `a[i] - b[i]` over common pairs.
fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_and_se(&d)
}

fn size_calibration() -> Outcome {
    let base = Scenario::default();
    let alice = base.grid.points()[57];
    let cfg = TestConfig::new(0.01, Regime::GeneralKnownParams);
    let mut worst: f64 = 0.01;
    let mut fails = Vec::new();
    let mut idx = 0u64;
    for tones in [5, 10] {
        for bc in [0.0, 2e6, f64::INFINITY] {
            for b_t in [0.0, 0.5] {
                let mut s = base.clone();
                s.channel.tones = tones;
                s.channel.coherence_bw = bc;
                s.b_t = b_t;
                let r = s.resolve().unwrap();
                let rates = harness::empirical_error_rates(
                    &s.scene,
                    &alice,
                    &alice,
                    &s.bob,
                    &r.params,
                    s.mode,
                    &cfg,
                    100_000,
                    &RngStream::new(101, idx),
                )
                .unwrap();
                idx += 1;
                let a = rates.alpha_hat.rate;
                if (a - 0.01).abs() > (worst - 0.01).abs() {
                    worst = a;
                }
                if !(0.007..=0.013).contains(&a) {
                    fails.push(format!("M={tones} B_c={bc} b_T={b_t}: {a}"));
                }
            }
        }
    }
    outcome(fails.is_empty(), format!("12 configs, worst alpha_hat = {worst:.5}; out of [0.007, 0.013]: {fails:?}"))
}

fn covariance_oracle() -> Outcome {
    let mut draw = RngStream::new(202, 0);
    let mut worst: f64 = 0.0;
    let mut sets = Vec::new();
    for i in 0..5u64 {
        let rng = draw.rng();
        let bandwidth = [5e6, 10e6, 20e6, 50e6, 100e6][rng.random_range(0..5)];
        let p = ChannelParams {
            f0: 5e9,
            bandwidth,
            tones: rng.random_range(3..=10),
            ar_coeff: rng.random_range(0.5..0.99),
            coherence_bw: bandwidth * 10f64.powf(rng.random_range(-1.3..0.3)),
            sigma_t: rng.random_range(0.5..2.0),
            sigma_n2: rng.random_range(0.05..1.0),
            probe_interval: 1e-3,
        };
        let (r_hat, g_hat) =
            empirical_difference_covariances(&p, SpatialMode::IndependentVariation, 1_000_000, &RngStream::new(203, i))
                .unwrap();
        let er = relative_frobenius_error(&r_hat, &stats::covariance_r(&p).unwrap()).unwrap();
        let eg = relative_frobenius_error(&g_hat, &stats::covariance_g(&p).unwrap()).unwrap();
        worst = worst.max(er).max(eg);
        sets.push(format!("M={} B_c/W={:.3} R {:.4} G {:.4}", p.tones, p.coherence_bw / p.bandwidth, er, eg));
    }
    outcome(worst < 0.05, format!("worst relative Frobenius error {worst:.4} < 0.05; {}", sets.join("; ")))
}

/// The grid pair whose closed-form β is nearest `target`.
fn pair_near(r: &harness::ResolvedScenario, target: f64) -> (usize, usize, f64) {
    let pairs = select_pairs(r.responses.len(), usize::MAX, &RngStream::new(0, 0)).unwrap();
    pairs
        .into_iter()
        .map(|(a, e)| (a, e, miss_rate_low_bc(0.01, &r.params, &r.responses[a], &r.responses[e]).unwrap()))
        .min_by(|x, y| (x.2 - target).abs().total_cmp(&(y.2 - target).abs()))
        .unwrap()
}

fn closed_form_vs_simulation() -> Outcome {
    let cfg = TestConfig::new(0.01, Regime::GeneralKnownParams);
    let sets = [
        (5, 0.0, 0.5, 10.0, 0.5),
        (10, 0.0, 1.0, 1.0, 0.2),
        (8, 0.0, 0.3, 3.0, 0.8),
        (10, 1e-3, 0.5, 10.0, 0.35),
        (5, 1e-3, 1.0, 1.0, 0.65),
    ];
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (i, &(tones, ratio, b_t, p_t, target)) in sets.iter().enumerate() {
        let mut s = Scenario::default();
        s.channel.tones = tones;
        s.channel.coherence_bw = ratio * s.channel.bandwidth;
        s.b_t = b_t;
        s.budget.tx_power_mw = p_t;
        let r = s.resolve().unwrap();
        let (a, e, beta) = pair_near(&r, target);
        if !(0.05..=0.95).contains(&beta) {
            return outcome(false, format!("set {i}: no pair with beta in [0.05, 0.95]"));
        }
        let sim = detect::simulated_error_rates(
            &r.params,
            s.mode,
            &r.responses[a],
            &r.responses[e],
            &cfg,
            100_000,
            &RngStream::new(301, i as u64),
        )
        .unwrap();
        let err = (sim.beta_hat.rate - beta).abs();
        worst = worst.max(err);
        lines.push(format!("M={tones} B_c/W={ratio}: closed {beta:.4} sim {:.4}", sim.beta_hat.rate));
    }
    outcome(worst <= 0.01, format!("worst |beta_hat - beta| = {worst:.4} <= 0.01; {}", lines.join("; ")))
}

fn reductions() -> Outcome {
    let base = Scenario { b_t: 0.0, ..Scenario::default() };
    let r = base.resolve().unwrap();
    let pairs = select_pairs(r.responses.len(), 200, &RngStream::new(404, 0)).unwrap();
    let mut worst: f64 = 0.0;
    for &(a, e) in &pairs {
        let (ha, he) = (&r.responses[a], &r.responses[e]);
        let low = miss_rate_low_bc(0.01, &r.params, ha, he).unwrap();
        let ti = miss_rate_time_invariant(0.01, r.params.sigma_n2, ha, he).unwrap();
        let full = miss_rate_full_spatial(0.01, ha, he, &stats::covariance_r(&r.params).unwrap()).unwrap();
        worst = worst.max((low - ti).abs()).max((full - ti).abs());
    }
    for k in [2, 10, 20, 60] {
        for x in [0.1, 1.0, 10.0, 37.5, 90.0] {
            worst = worst.max((noncentral_chi2_cdf(x, k, 0.0).unwrap() - chi2_cdf(x, k).unwrap()).abs());
        }
    }
    for tones in [1, 5, 10, 30] {
        let p = ChannelParams { tones, ar_coeff: 1.0, sigma_t: 2.0, ..r.params };
        let got = stats::covariance_r(&p).unwrap();
        let want = HermitianMatrix::scaled_identity(tones, 2.0 * p.sigma_n2);
        for (x, y) in got.entries().iter().zip(want.entries()) {
            worst = worst.max((x - y).norm() / (2.0 * p.sigma_n2));
        }
    }
    outcome(worst <= 1e-12, format!("largest discrepancy {worst:.2e} (relative for R) <= 1e-12 over 200 room pairs"))
}

fn variation_trend() -> Outcome {
    let mut s = Scenario::default();
    s.budget.tx_power_mw = 100.0;
    let all = select_pairs(s.grid.len(), usize::MAX, &RngStream::new(505, 0)).unwrap();
    let sample = select_pairs(s.grid.len(), 2000, &RngStream::new(505, 0)).unwrap();
    let mc = RngStream::new(505, 1);
    let at = |b_t: f64, pairs: &[(usize, usize)]| {
        pair_miss_rates(&Scenario { b_t, ..s.clone() }, pairs, &mc).unwrap()
    };
    let (lo_all, hi_all) = (at(0.01, &all), at(1.0, &all));
    let (m_lo, se_lo) = mean_and_se(&lo_all);
    let (m_hi, se_hi) = mean_and_se(&hi_all);
    let sep = (m_lo - m_hi) / se_lo.hypot(se_hi);
    let (lo_s, hi_s) = (at(0.01, &sample), at(1.0, &sample));
    let (s_lo, sse_lo) = mean_and_se(&lo_s);
    let (s_hi, sse_hi) = mean_and_se(&hi_s);
    outcome(
        sep >= 3.0,
        format!(
            "all {} pairs: beta_bar(0.01) = {m_lo:.3e}, beta_bar(1) = {m_hi:.3e}, separation {sep:.1} SE; \
             2000-pair subsample: {s_lo:.3e} vs {s_hi:.3e}, {:.1} SE",
            all.len(),
            (s_lo - s_hi) / sse_lo.hypot(sse_hi)
        ),
    )
}

fn bandwidth_trend() -> Outcome {
    let mut s = Scenario::default();
    s.channel.tones = 5;
    s.b_t = 0.5;
    let widths = [5e6, 10e6, 20e6, 50e6, 100e6];
    let pairs = select_pairs(s.grid.len(), 2000, &RngStream::new(606, 0)).unwrap();
    let mc = RngStream::new(606, 1);
    // betas[bc][w] per pair
    let betas: Vec<Vec<Vec<f64>>> = [0.0, 2e6, f64::INFINITY]
        .iter()
        .map(|&bc| {
            widths
                .iter()
                .map(|&w| {
                    let mut x = s.clone();
                    x.channel.coherence_bw = bc;
                    x.channel.bandwidth = w;
                    pair_miss_rates(&x, &pairs, &mc).unwrap()
                })
                .collect()
        })
        .collect();
    let stat = |v: &Vec<f64>| mean_and_se(v);
    let mut ok = true;
    let mut notes = Vec::new();
    for i in 1..widths.len() {
        let (m0, s0) = stat(&betas[1][i - 1]);
        let (m1, s1) = stat(&betas[1][i]);
        if m1 - m0 > 3.0 * s0.hypot(s1) {
            ok = false;
            notes.push(format!("increase at W={}", widths[i]));
        }
    }
    let mut rows = Vec::new();
    for (i, w) in widths.iter().enumerate() {
        let (lo, slo) = stat(&betas[0][i]);
        let (mid, smid) = stat(&betas[1][i]);
        let (hi, shi) = stat(&betas[2][i]);
        if lo - mid > 3.0 * slo.hypot(smid) || mid - hi > 3.0 * smid.hypot(shi) {
            ok = false;
            notes.push(format!("bracket broken at W={w}"));
        }
        let (d_lo, se_lo) = paired(&betas[1][i], &betas[0][i]);
        let (d_hi, se_hi) = paired(&betas[2][i], &betas[1][i]);
        rows.push(format!(
            "W={:.0}MHz {lo:.3e}/{mid:.3e}/{hi:.3e} (paired: mid-lo {:+.1} SE, hi-mid {:+.1} SE)",
            w / 1e6,
            d_lo / se_lo,
            d_hi / se_hi
        ));
    }
    outcome(ok, format!("B_c = 0 / 2 MHz / inf: {}; violations: {notes:?}", rows.join("; ")))
}

fn spatial_trend() -> Outcome {
    let mut s = Scenario::default();
    s.channel.bandwidth = 100e6;
    s.channel.coherence_bw = 2e6;
    let sweep = Sweep::SpatialMode(vec![SpatialMode::IndependentVariation, SpatialMode::FullyCorrelatedVariation]);
    let pairs = select_pairs(s.grid.len(), 2000, &RngStream::new(707, 0)).unwrap();
    let mc = RngStream::new(707, 1);
    let ind = pair_miss_rates(&sweep.apply(&s, 0), &pairs, &mc).unwrap();
    let full = pair_miss_rates(&sweep.apply(&s, 1), &pairs, &mc).unwrap();
    let (mi, si) = mean_and_se(&ind);
    let (mf, sf) = mean_and_se(&full);
    let sep = (mf - mi) / si.hypot(sf);
    let (d, sd) = paired(&full, &ind);
    outcome(
        sep >= 3.0,
        format!(
            "independent {mi:.3e}, fully correlated {mf:.3e}: separation {sep:.1} SE (paired {:.1} SE)",
            d / sd
        ),
    )
}

fn numerics_suite() -> Outcome {
    let mut worst_rt: f64 = 0.0;
    for k in [1, 2, 5, 10, 20, 40, 100] {
        for p in [1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999, 0.999_999] {
            worst_rt = worst_rt.max((chi2_cdf(chi2_inv(p, k).unwrap(), k).unwrap() - p).abs());
        }
    }
    // noncentral CDF against sums of squared shifted normals
    let mut rng = RngStream::new(808, 0);
    let mut worst_mc: f64 = 0.0;
    for (k, mu, xs) in [(10u32, 5.0, [8.0, 15.0, 25.0]), (20, 20.0, [25.0, 40.0, 60.0]), (4, 1.0, [1.0, 4.0, 10.0])] {
        let n = 1_000_000;
        let shift = (mu / k as f64).sqrt();
        let draws: Vec<f64> =
            (0..n).map(|_| (0..k).map(|_| (rng.standard_normal() + shift).powi(2)).sum()).collect();
        for x in xs {
            let emp = draws.iter().filter(|&&d| d <= x).count() as f64 / n as f64;
            worst_mc = worst_mc.max((emp - noncentral_chi2_cdf(x, k, mu).unwrap()).abs());
        }
    }
    // Cholesky reconstruction of random Hermitian PD matrices
    let mut worst_chol: f64 = 0.0;
    for dim in [2, 5, 10, 30] {
        let b: Vec<Complex64> = (0..dim * dim).map(|_| rng.complex_gaussian(1.0)).collect();
        let a = HermitianMatrix::from_fn(dim, |i, j| {
            let s: Complex64 = (0..dim).map(|k| b[k * dim + i].conj() * b[k * dim + j]).sum();
            if i == j { s + 0.1 } else { s }
        })
        .factored()
        .unwrap();
        let u = a.chol().unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let s: Complex64 = (0..dim).map(|k| u[k * dim + i].conj() * u[k * dim + j]).sum();
                worst_chol = worst_chol.max((s - a.get(i, j)).norm() / a.max_abs());
            }
        }
    }
    // whitening simulated H0 differences with R
    let p = ChannelParams {
        f0: 5e9,
        bandwidth: 20e6,
        tones: 8,
        ar_coeff: 0.9,
        coherence_bw: 3e6,
        sigma_t: 1.0,
        sigma_n2: 0.1,
        probe_interval: 1e-3,
    };
    let (r_hat, _) =
        empirical_difference_covariances(&p, SpatialMode::IndependentVariation, 200_000, &RngStream::new(809, 0)).unwrap();
    let r = stats::covariance_r(&p).unwrap();
    // Cov[sqrt(2) U^{-H} d] = 2 U^{-H} R_hat U^{-1}
    let m = p.tones;
    let cols: Vec<Vec<Complex64>> =
        (0..m).map(|j| r.whiten(&(0..m).map(|i| r_hat[i * m + j]).collect::<Vec<_>>()).unwrap()).collect();
    let mut white = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        let row: Vec<Complex64> = (0..m).map(|j| cols[j][i].conj()).collect();
        let w = r.whiten(&row).unwrap();
        for j in 0..m {
            white[i * m + j] = 2.0 * w[j].conj();
        }
    }
    let two_i = HermitianMatrix::scaled_identity(m, 2.0);
    let err_white = relative_frobenius_error(&white, &two_i).unwrap();
    let pass = worst_rt <= 1e-9 && worst_mc <= 2e-3 && worst_chol <= 1e-10 && err_white <= 0.05;
    outcome(
        pass,
        format!(
            "chi2 round trip {worst_rt:.1e}, noncentral vs MC {worst_mc:.1e}, Cholesky {worst_chol:.1e}, \
             whitened covariance error {err_white:.4}"
        ),
    )
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["variation_strength.cfg", "spatial_mode.cfg"] {
        let runs: Vec<Vec<Vec<u8>>> = [1, 4]
            .iter()
            .map(|&threads| {
                let dir = tempfile::tempdir().unwrap();
                run_file(&configs.join(name), dir.path(), &RunOptions { seed: Some(17), threads: Some(threads) }).unwrap();
                ["sweep.csv", "calibration.csv", "summary.txt"]
                    .iter()
                    .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                    .collect()
            })
            .collect();
        let same = runs[0] == runs[1];
        ok &= same;
        notes.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    outcome(ok, format!("1 vs 4 worker threads, same seed: {}", notes.join(", ")))
}

fn main() {
    let start = Instant::now();
    let results = [
        criterion(1, "size calibration", minutes(2), size_calibration),
        criterion(2, "covariance oracle", minutes(3), covariance_oracle),
        criterion(3, "closed form vs simulation", minutes(2), closed_form_vs_simulation),
        criterion(4, "reduction identities", minutes(1), reductions),
        criterion(5, "variation-strength trend", minutes(5), variation_trend),
        criterion(6, "bandwidth trend and bounds", minutes(5), bandwidth_trend),
        criterion(7, "spatial correlation penalty", minutes(5), spatial_trend),
        criterion(8, "numerics", minutes(1), numerics_suite),
        criterion(9, "determinism", minutes(5), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed in {:.0} s", results.len(), start.elapsed().as_secs_f64());
    if passed != results.len() {
        std::process::exit(1);
    }
}
