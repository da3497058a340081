//! Executes a validated experiment and writes its tables.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use phyauth::channel::SpatialMode;
use phyauth::detect::{self, Regime};
use phyauth::harness::{self, SweepResult};
use phyauth::numerics::RngStream;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Empirical false-alarm rate of one regime's detector.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub regime: Regime,
    pub alpha_nominal: f64,
    pub threshold: f64,
    pub alpha_hat: f64,
    pub std_err: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub sweep: SweepResult,
    pub calibration: Vec<CalibrationRow>,
    pub room_gain: f64,
    pub median_snr_db: f64,
}

/// Runs the sweep and the per-regime size calibration. Deterministic in
/// `cfg.seed` regardless of the rayon pool it runs on.
pub fn execute(cfg: &ExperimentConfig) -> phyauth::Result<RunReport> {
    let sweep = harness::room_sweep(&cfg.scenario, &cfg.sweep, cfg.pair_budget, &RngStream::new(cfg.seed, 0))?;

    // calibration and headline numbers use the first swept value
    let first = cfg.sweep.apply(&cfg.scenario, 0);
    let resolved = first.resolve()?;
    let mut snr = harness::per_tone_snr_db(&resolved.responses, resolved.params.sigma_n2);
    snr.sort_by(f64::total_cmp);
    let median_snr_db = snr[snr.len() / 2];

    let cal_rng = RngStream::new(cfg.seed, 1);
    let alice = &resolved.responses[0];
    let mut calibration = Vec::with_capacity(Regime::ALL.len());
    for (i, regime) in Regime::ALL.into_iter().enumerate() {
        let test = detect::TestConfig { regime, ..first.test };
        let mode = match regime {
            Regime::FullSpatialCorrelation => SpatialMode::FullyCorrelatedVariation,
            _ => first.mode,
        };
        let det = detect::Detector::new(&test, &resolved.params)?;
        let sims = detect::simulate_statistics(
            &resolved.params,
            mode,
            alice,
            alice,
            &det.statistic,
            cfg.calibration_trials,
            &cal_rng.derive(i as u64),
        )?;
        let rates = sims.rates_at(det.threshold);
        calibration.push(CalibrationRow {
            regime,
            alpha_nominal: test.alpha,
            threshold: det.threshold,
            alpha_hat: rates.alpha_hat.rate,
            std_err: rates.alpha_hat.std_err,
            trials: rates.alpha_hat.trials,
        });
    }
    Ok(RunReport { sweep, calibration, room_gain: resolved.room_gain, median_snr_db })
}

pub fn sweep_csv(cfg: &ExperimentConfig, report: &RunReport) -> String {
    let s = &report.sweep;
    let mut out = String::from("sweep_param,value,beta_bar,std_err,pair_count,alpha,regime\n");
    for i in 0..s.values.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.swept_param,
            s.values[i],
            s.beta_bar[i],
            s.standard_error[i],
            s.pair_count,
            cfg.scenario.test.alpha,
            s.regimes[i].name()
        )
        .unwrap();
    }
    out
}

pub fn calibration_csv(report: &RunReport) -> String {
    let mut out = String::from("regime,alpha_nominal,threshold,alpha_hat,std_err,trials\n");
    for r in &report.calibration {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.regime.name(),
            r.alpha_nominal,
            r.threshold,
            r.alpha_hat,
            r.std_err,
            r.trials
        )
        .unwrap();
    }
    out
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn summary(cfg: &ExperimentConfig, config_text: &str, report: &RunReport) -> String {
    let s = &report.sweep;
    let sc = &cfg.scenario;
    let mut out = String::new();
    writeln!(out, "seed: {}", cfg.seed).unwrap();
    writeln!(out, "config_sha256: {}", config_hash(config_text)).unwrap();
    writeln!(
        out,
        "room: {} x {} x {} m, reflection order {}, {} grid points, {} pairs",
        sc.scene.dimensions[0],
        sc.scene.dimensions[1],
        sc.scene.dimensions[2],
        sc.scene.max_order,
        sc.grid.len(),
        s.pair_count
    )
    .unwrap();
    writeln!(out, "room gain (rms |H|): {}", report.room_gain).unwrap();
    writeln!(out, "median per-tone SNR: {:.2} dB", report.median_snr_db).unwrap();
    writeln!(
        out,
        "note: synthetic room geometry; absolute miss rates are not comparable with measured buildings"
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(out, "{:>16} {:>14} {:>12}  regime", s.swept_param, "beta_bar", "std_err").unwrap();
    for i in 0..s.values.len() {
        writeln!(
            out,
            "{:>16} {:>14.6e} {:>12.3e}  {}",
            s.values[i].to_string(),
            s.beta_bar[i],
            s.standard_error[i],
            s.regimes[i].name()
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "{:>16} {:>10} {:>10} {:>10}", "regime", "alpha", "alpha_hat", "std_err").unwrap();
    for r in &report.calibration {
        writeln!(out, "{:>16} {:>10} {:>10.5} {:>10.5}", r.regime.name(), r.alpha_nominal, r.alpha_hat, r.std_err)
            .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "--- config ---").unwrap();
    out.push_str(config_text);
    if !config_text.ends_with('\n') {
        out.push('\n');
    }
    out
}

/// Writes every output, or none: files already written are removed if a
/// later one fails.
pub fn write_outputs(dir: &Path, files: &[(&str, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}
