//! Closed-form covariances of the measurement differences Bob tests.
//!
//! `R = Cov[H_A[k] - H_A[k-1]]` (legitimate claimant) and
//! `G = Cov[H_E[k] - H_A[k-1]]` (spoofer with independent variation), plus
//! their limits for coherence bandwidth far below and far above `W`.
//!
//! Entry `(m, n)` is `E[d_m d_n^*]`. The variable part contributes
//! `σ_T^2 (1 - q) / (1 - q e^{-j2π(m-n)/M})` with `q = e^{-2π B_c / W}`,
//! which follows from the tap-to-tone map and has been checked against the
//! simulator; see `tests/covariance_oracle.rs`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelParams, PairChannel, SpatialMode};
use crate::error::{ensure, Error, Result};
use crate::numerics::{HermitianMatrix, RngStream};

/// Which covariance to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    GeneralR,
    GeneralG,
    LowBcR,
    LowBcG,
    HighBcR,
    HighBcG,
}

/// Normalized tone correlation of the variable part at lag `m`:
/// `(1 - q) / (1 - q e^{-j2πm/M})`. Exact at `B_c = 0` (zero off lag 0) and
/// `B_c = ∞` (one everywhere).
fn tone_correlation(lag: i64, params: &ChannelParams) -> Complex64 {
    if lag == 0 || params.coherence_bw.is_infinite() {
        return Complex64::new(1.0, 0.0);
    }
    if params.coherence_bw == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let x = params.gamma() / params.bandwidth;
    let head = -(-x).exp_m1();
    let q = (-x).exp();
    let theta = -2.0 * PI * lag as f64 / params.tones as f64;
    Complex64::new(head, 0.0) / (Complex64::new(1.0, 0.0) - Complex64::from_polar(q, theta))
}

/// `r(m)`, the lag-`m` entry of `R`. Includes the `2 σ_N^2` noise term at
/// `m = 0`.
pub fn r_lag(lag: i64, params: &ChannelParams) -> Result<Complex64> {
    let m = params.tones as i64;
    if lag.abs() > m - 1 {
        return Err(Error::InvalidParameter(format!("lag {lag} outside [{}, {}]", 1 - m, m - 1)));
    }
    let var = params.sigma_t * params.sigma_t;
    let a = params.ar_coeff;
    let mut r = tone_correlation(lag, params) * (2.0 * var * (1.0 - a));
    if lag == 0 {
        r = Complex64::new(r.re + 2.0 * params.sigma_n2, 0.0);
    }
    Ok(r)
}

fn factor(m: HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(m.factored()?)
}

/// `R = [r(m - n)]`, Toeplitz Hermitian, Cholesky-factored.
pub fn covariance_r(params: &ChannelParams) -> Result<HermitianMatrix> {
    params.validate()?;
    let lags: Vec<Complex64> =
        (0..params.tones as i64).map(|l| r_lag(l, params)).collect::<Result<_>>()?;
    // entry (m, n) with m <= n has lag m - n <= 0
    factor(HermitianMatrix::from_fn(params.tones, |m, n| lags[n - m].conj()))
}

/// `G`: diagonal `2σ_T^2 + 2σ_N^2`, off-diagonal `2σ_T^2` times the tone
/// correlation (the `r(m - n) / (1 - a)` entries, evaluated without the
/// `1 - a` cancellation so `a = 1` is well defined).
///
/// The factor is attached when `G` is positive definite; a rank-deficient `G`
/// (no noise, fully correlated tones) is returned unfactored.
pub fn covariance_g(params: &ChannelParams) -> Result<HermitianMatrix> {
    params.validate()?;
    let var = params.sigma_t * params.sigma_t;
    let diag = 2.0 * var + 2.0 * params.sigma_n2;
    let g = HermitianMatrix::from_fn(params.tones, |m, n| {
        if m == n {
            Complex64::new(diag, 0.0)
        } else {
            tone_correlation(m as i64 - n as i64, params) * (2.0 * var)
        }
    });
    Ok(g.clone().factored().unwrap_or(g))
}

fn identity_plus_ones(dim: usize, diag: f64, ones: f64) -> HermitianMatrix {
    HermitianMatrix::from_fn(dim, |m, n| Complex64::new(if m == n { diag + ones } else { ones }, 0.0))
}

/// `R = 2σ_N^2 I + 2(1 - a)σ_T^2 1` for variation fully correlated over tones.
pub fn asymptotic_r_high_bc(params: &ChannelParams) -> Result<HermitianMatrix> {
    let var = params.sigma_t * params.sigma_t;
    factor(identity_plus_ones(params.tones, 2.0 * params.sigma_n2, 2.0 * (1.0 - params.ar_coeff) * var))
}

/// `G = 2σ_N^2 I + 2σ_T^2 1`.
pub fn asymptotic_g_high_bc(params: &ChannelParams) -> Result<HermitianMatrix> {
    let var = params.sigma_t * params.sigma_t;
    let g = identity_plus_ones(params.tones, 2.0 * params.sigma_n2, 2.0 * var);
    Ok(g.clone().factored().unwrap_or(g))
}

/// `R = (2(1 - a)σ_T^2 + 2σ_N^2) I` for variation independent over tones.
pub fn asymptotic_r_low_bc(params: &ChannelParams) -> Result<HermitianMatrix> {
    let var = params.sigma_t * params.sigma_t;
    factor(HermitianMatrix::scaled_identity(
        params.tones,
        2.0 * (1.0 - params.ar_coeff) * var + 2.0 * params.sigma_n2,
    ))
}

/// `G = (2σ_T^2 + 2σ_N^2) I`.
pub fn asymptotic_g_low_bc(params: &ChannelParams) -> Result<HermitianMatrix> {
    let var = params.sigma_t * params.sigma_t;
    let g = HermitianMatrix::scaled_identity(params.tones, 2.0 * var + 2.0 * params.sigma_n2);
    Ok(g.clone().factored().unwrap_or(g))
}

pub fn build_covariance(kind: CovarianceKind, params: &ChannelParams) -> Result<HermitianMatrix> {
    match kind {
        CovarianceKind::GeneralR => covariance_r(params),
        CovarianceKind::GeneralG => covariance_g(params),
        CovarianceKind::LowBcR => asymptotic_r_low_bc(params),
        CovarianceKind::LowBcG => asymptotic_g_low_bc(params),
        CovarianceKind::HighBcR => asymptotic_r_high_bc(params),
        CovarianceKind::HighBcG => asymptotic_g_high_bc(params),
    }
}

/// Sample covariances of `H_A[k] - H_A[k-1]` and `H_E[k] - H_A[k-1]` from
/// `snapshots` independent stationary draws of the simulator, row-major
/// `M × M`. Fixed parts are zero, so the means are known to vanish.
pub fn empirical_difference_covariances(
    params: &ChannelParams,
    mode: SpatialMode,
    snapshots: usize,
    rng: &RngStream,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    ensure(snapshots >= 1, || "snapshots must be at least 1".into())?;
    let m = params.tones;
    let zero = vec![Complex64::new(0.0, 0.0); m];
    let base = PairChannel::new(*params, mode, zero.clone(), zero)?;
    const CHUNK: usize = 1024;
    let chunks = snapshots.div_ceil(CHUNK);
    let partial: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng.derive(c as u64);
            let mut ch = base.clone();
            let mut r = vec![Complex64::new(0.0, 0.0); m * m];
            let mut g = r.clone();
            let mut h_ref = vec![Complex64::new(0.0, 0.0); m];
            let mut d0 = h_ref.clone();
            let mut d1 = h_ref.clone();
            for _ in 0..CHUNK.min(snapshots - c * CHUNK) {
                ch.init(&mut rng);
                ch.alice_response_into(&mut rng, &mut h_ref);
                ch.step(&mut rng);
                ch.alice_response_into(&mut rng, &mut d0);
                ch.eve_response_into(&mut rng, &mut d1);
                for i in 0..m {
                    d0[i] -= h_ref[i];
                    d1[i] -= h_ref[i];
                }
                for i in 0..m {
                    for j in 0..m {
                        r[i * m + j] += d0[i] * d0[j].conj();
                        g[i * m + j] += d1[i] * d1[j].conj();
                    }
                }
            }
            (r, g)
        })
        .collect();
    let mut r = vec![Complex64::new(0.0, 0.0); m * m];
    let mut g = r.clone();
    for (pr, pg) in partial {
        r.iter_mut().zip(&pr).for_each(|(a, b)| *a += b);
        g.iter_mut().zip(&pg).for_each(|(a, b)| *a += b);
    }
    let n = snapshots as f64;
    r.iter_mut().chain(g.iter_mut()).for_each(|x| *x /= n);
    Ok((r, g))
}

/// `‖estimate - reference‖_F / ‖reference‖_F` for a row-major estimate.
pub fn relative_frobenius_error(estimate: &[Complex64], reference: &HermitianMatrix) -> Result<f64> {
    crate::error::ensure_len(reference.entries().len(), estimate.len())?;
    let diff: f64 = estimate.iter().zip(reference.entries()).map(|(e, r)| (e - r).norm_sqr()).sum();
    let norm: f64 = reference.entries().iter().map(|r| r.norm_sqr()).sum();
    Ok((diff / norm).sqrt())
}
