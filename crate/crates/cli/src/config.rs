//! Experiment configuration: a TOML file with one table per concern.
//!
//! ```toml
//! trials = 10000
//! pair_budget = 2000
//! seed = 1
//!
//! [channel]
//! W = 10e6
//! M = 10
//! a = 0.9
//! B_c = 0.0       # `inf` for fully tone-correlated variation
//!
//! [budget]
//! P_T = 100.0
//!
//! [test]
//! alpha = 0.01
//! regime = "GeneralKnownParams"
//!
//! [sweep]
//! axis = "b_T"
//! values = [0.01, 0.1, 1.0]
//! ```
//!
//! Required: `channel.{W, M, a, B_c, b_T}` (except the swept one),
//! `test.{alpha, regime}`, `sweep.{axis, values}`. Everything else falls back
//! to the default room. Unknown keys are rejected.

use std::fmt;

use num_complex::Complex64;
use phyauth::channel::SpatialMode;
use phyauth::detect::{Regime, TestConfig};
use phyauth::harness::{Scenario, Sweep};
use serde::Deserialize;

/// One problem found in a config, with the 1-based line it refers to when
/// that can be located.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if self.key.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub sweep: Sweep,
    pub pair_budget: usize,
    pub seed: u64,
    /// End-to-end H0 trials per regime for `calibration.csv`.
    pub calibration_trials: usize,
}

pub const DEFAULT_PAIR_BUDGET: usize = 2000;
pub const DEFAULT_CALIBRATION_TRIALS: usize = 100_000;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    trials: Option<u64>,
    pair_budget: Option<u64>,
    seed: Option<u64>,
    calibration_trials: Option<u64>,
    scene: Option<RawScene>,
    grid: Option<RawGrid>,
    bob: Option<RawBob>,
    budget: Option<RawBudget>,
    channel: Option<RawChannel>,
    test: Option<RawTest>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Reflectivity {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    dimensions: Option<[f64; 3]>,
    wall_reflectivity: Option<Reflectivity>,
    max_order: Option<u32>,
    speed: Option<f64>,
    gain: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    origin: Option<[f64; 2]>,
    spacing: Option<f64>,
    counts: Option<[u64; 2]>,
    height: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBob {
    position: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    #[serde(rename = "P_T")]
    p_t: Option<f64>,
    #[serde(rename = "kT")]
    kt: Option<f64>,
    #[serde(rename = "N_F")]
    n_f: Option<f64>,
    b: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    f0: Option<f64>,
    #[serde(rename = "W")]
    w: Option<f64>,
    #[serde(rename = "M")]
    m: Option<u64>,
    a: Option<f64>,
    #[serde(rename = "B_c")]
    b_c: Option<f64>,
    #[serde(rename = "b_T")]
    b_t: Option<f64>,
    #[serde(rename = "T")]
    t: Option<f64>,
    spatial_mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTest {
    alpha: Option<f64>,
    regime: Option<String>,
    threshold_override: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<String>,
    values: Option<Vec<toml::Value>>,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (top level when `section` is empty), or
/// of the section header when the key is absent.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

struct Checker<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, section: &str, key: &str, message: impl Into<String>) {
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        self.diags.push(Diagnostic { line: locate(self.text, section, key), key: full, message: message.into() });
    }

    /// `value` if present and satisfying `ok`; otherwise records why not.
    fn value<T: Copy + fmt::Display>(
        &mut self,
        section: &str,
        key: &str,
        value: Option<T>,
        default: Option<T>,
        ok: impl Fn(T) -> bool,
        constraint: &str,
    ) -> Option<T> {
        match value.or(default) {
            None => {
                self.report(section, key, "missing required key");
                None
            }
            Some(v) if ok(v) => Some(v),
            Some(v) => {
                self.report(section, key, format!("{v} violates constraint: {constraint}"));
                None
            }
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Parses and validates `text`. Returns every problem found, not just the
/// first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        vec![Diagnostic {
            line: e.span().map(|s| line_of_offset(text, s.start)),
            key: String::new(),
            message: e.message().trim().to_string(),
        }]
    })?;
    let mut ck = Checker { text, diags: Vec::new() };
    let base = Scenario::default();

    let trials = ck.value("", "trials", raw.trials, Some(base.trials as u64), |n| n >= 1, "trials >= 1");
    let pair_budget =
        ck.value("", "pair_budget", raw.pair_budget, Some(DEFAULT_PAIR_BUDGET as u64), |n| n >= 1, "pair_budget >= 1");
    let calibration_trials = ck.value(
        "",
        "calibration_trials",
        raw.calibration_trials,
        Some(DEFAULT_CALIBRATION_TRIALS as u64),
        |n| n >= 1,
        "calibration_trials >= 1",
    );
    let seed = raw.seed.unwrap_or(0);

    let sc = raw.scene.unwrap_or_default();
    let mut scene = base.scene;
    if let Some(d) = sc.dimensions {
        if d.iter().all(|&x| positive(x)) {
            scene.dimensions = d;
        } else {
            ck.report("scene", "dimensions", "every room dimension must be positive");
        }
    }
    if let Some(r) = sc.wall_reflectivity {
        let g = match r {
            Reflectivity::Real(x) => Complex64::new(x, 0.0),
            Reflectivity::Complex([re, im]) => Complex64::new(re, im),
        };
        if g.norm() <= 1.0 {
            scene.wall_reflectivity = g;
        } else {
            ck.report("scene", "wall_reflectivity", format!("|{g}| violates constraint: magnitude <= 1"));
        }
    }
    scene.max_order = sc.max_order.unwrap_or(scene.max_order);
    if let Some(v) = ck.value("scene", "speed", sc.speed, Some(scene.speed), positive, "speed > 0") {
        scene.speed = v;
    }
    if let Some(v) = ck.value("scene", "gain", sc.gain, Some(scene.gain), positive, "gain > 0") {
        scene.gain = v;
    }

    let gr = raw.grid.unwrap_or_default();
    let mut grid = base.grid;
    grid.origin = gr.origin.unwrap_or(grid.origin);
    if let Some(v) = ck.value("grid", "spacing", gr.spacing, Some(grid.spacing), positive, "spacing > 0") {
        grid.spacing = v;
    }
    if let Some([nx, ny]) = gr.counts {
        if nx >= 1 && ny >= 1 && nx * ny >= 2 {
            grid.counts = (nx as usize, ny as usize);
        } else {
            ck.report("grid", "counts", "grid needs at least two points");
        }
    }
    grid.height = gr.height.unwrap_or(grid.height);
    let bob = raw.bob.and_then(|b| b.position).unwrap_or(base.bob);

    let bu = raw.budget.unwrap_or_default();
    let mut budget = base.budget;
    if let Some(v) = ck.value("budget", "P_T", bu.p_t, Some(budget.tx_power_mw), positive, "P_T > 0") {
        budget.tx_power_mw = v;
    }
    if let Some(v) = ck.value("budget", "kT", bu.kt, Some(budget.kt_mw_per_hz), positive, "kT > 0") {
        budget.kt_mw_per_hz = v;
    }
    if let Some(v) = ck.value("budget", "N_F", bu.n_f, Some(budget.noise_figure), positive, "N_F > 0") {
        budget.noise_figure = v;
    }
    if let Some(v) = ck.value("budget", "b", bu.b, Some(budget.tone_bandwidth_hz), positive, "b > 0") {
        budget.tone_bandwidth_hz = v;
    }

    let sw = raw.sweep.unwrap_or_default();
    let axis = match sw.axis.as_deref() {
        None => {
            ck.report("sweep", "axis", "missing required key");
            None
        }
        Some(a) if Sweep::AXES.contains(&a) => Some(a.to_string()),
        Some(a) => {
            ck.report("sweep", "axis", format!("\"{a}\" is not one of {}", Sweep::AXES.join(", ")));
            None
        }
    };
    let swept = |name: &str| axis.as_deref() == Some(name);
    // the swept key may be omitted; its first value stands in for validation
    let filler = |name: &str, x: f64| if swept(name) { Some(x) } else { None };

    let ch = raw.channel.unwrap_or_default();
    let mut channel = base.channel;
    if let Some(v) = ck.value("channel", "f0", ch.f0, Some(channel.f0), nonneg, "f0 >= 0") {
        channel.f0 = v;
    }
    if let Some(v) = ck.value("channel", "W", ch.w, filler("W", channel.bandwidth), positive, "W > 0") {
        channel.bandwidth = v;
    }
    if let Some(v) = ck.value("channel", "M", ch.m, filler("M", 0.0).map(|_| channel.tones as u64), |m| m >= 1, "M >= 1")
    {
        channel.tones = v as usize;
    }
    if let Some(v) = ck.value("channel", "a", ch.a, None, |a| (0.0..=1.0).contains(&a), "a in [0, 1]") {
        channel.ar_coeff = v;
    }
    if let Some(v) = ck.value(
        "channel",
        "B_c",
        ch.b_c,
        filler("B_c", channel.coherence_bw),
        |b| b >= 0.0,
        "B_c >= 0 (inf allowed)",
    ) {
        channel.coherence_bw = v;
    }
    let b_t = ck.value("channel", "b_T", ch.b_t, filler("b_T", base.b_t), nonneg, "b_T >= 0").unwrap_or(base.b_t);
    if let Some(v) = ck.value("channel", "T", ch.t, Some(channel.probe_interval), positive, "T > 0") {
        channel.probe_interval = v;
    }
    let mode = match ch.spatial_mode.as_deref() {
        None => base.mode,
        Some(name) => SpatialMode::from_name(name).unwrap_or_else(|| {
            ck.report("channel", "spatial_mode", format!("\"{name}\" is not independent or fully_correlated"));
            base.mode
        }),
    };

    let te = raw.test.unwrap_or_default();
    let alpha = ck.value("test", "alpha", te.alpha, None, |a| a > 0.0 && a < 1.0, "alpha in (0, 1)");
    let regime = match te.regime.as_deref() {
        None => {
            ck.report("test", "regime", "missing required key");
            None
        }
        Some(name) => Regime::from_name(name).or_else(|| {
            let names: Vec<String> = Regime::ALL.iter().map(|r| format!("{r:?}")).collect();
            ck.report("test", "regime", format!("\"{name}\" is not one of {}", names.join(", ")));
            None
        }),
    };
    if let Some(t) = te.threshold_override {
        if !nonneg(t) {
            ck.report("test", "threshold_override", format!("{t} violates constraint: threshold_override >= 0"));
        }
    }

    let sweep = match (&axis, sw.values) {
        (_, None) => {
            ck.report("sweep", "values", "missing required key");
            None
        }
        (_, Some(v)) if v.is_empty() => {
            ck.report("sweep", "values", "at least one value is required");
            None
        }
        (None, Some(_)) => None,
        (Some(axis), Some(values)) => build_sweep(&mut ck, axis, &values),
    };

    let (Some(trials), Some(pair_budget), Some(calibration_trials), Some(alpha), Some(regime), Some(sweep)) =
        (trials, pair_budget, calibration_trials, alpha, regime, sweep)
    else {
        return Err(ck.diags);
    };
    if !ck.diags.is_empty() {
        return Err(ck.diags);
    }
    let scenario = Scenario {
        scene,
        grid,
        bob,
        budget,
        channel,
        b_t,
        mode,
        test: TestConfig { alpha, regime, threshold_override: te.threshold_override },
        trials: trials as usize,
    };
    // cross-field checks (geometry, derived parameters) for every swept value
    for i in 0..sweep.len() {
        if let Err(e) = sweep.apply(&scenario, i).validate() {
            ck.diags.push(Diagnostic { line: None, key: String::new(), message: e.to_string() });
            break;
        }
    }
    if !ck.diags.is_empty() {
        return Err(ck.diags);
    }
    Ok(ExperimentConfig {
        scenario,
        sweep,
        pair_budget: pair_budget as usize,
        seed,
        calibration_trials: calibration_trials as usize,
    })
}

fn build_sweep(ck: &mut Checker<'_>, axis: &str, values: &[toml::Value]) -> Option<Sweep> {
    if axis == "spatial_mode" {
        let modes: Option<Vec<SpatialMode>> =
            values.iter().map(|v| v.as_str().and_then(SpatialMode::from_name)).collect();
        if modes.is_none() {
            ck.report("sweep", "values", "spatial_mode values must be \"independent\" or \"fully_correlated\"");
        }
        return modes.map(Sweep::SpatialMode);
    }
    let numbers: Option<Vec<f64>> =
        values.iter().map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64))).collect();
    let Some(xs) = numbers else {
        ck.report("sweep", "values", format!("values for {axis} must be numbers"));
        return None;
    };
    let (ok, constraint): (fn(f64) -> bool, &str) = match axis {
        "b_T" => (nonneg, "b_T >= 0"),
        "W" => (positive, "W > 0"),
        "M" => (|m| m >= 1.0 && m.fract() == 0.0 && m.is_finite(), "M is an integer >= 1"),
        "P_T" => (positive, "P_T > 0"),
        _ => (|b| b >= 0.0, "B_c >= 0 (inf allowed)"),
    };
    if let Some(bad) = xs.iter().find(|&&x| !ok(x)) {
        ck.report("sweep", "values", format!("{bad} violates constraint: {constraint}"));
        return None;
    }
    Some(match axis {
        "b_T" => Sweep::VariationIndex(xs),
        "W" => Sweep::Bandwidth(xs),
        "M" => Sweep::Tones(xs.iter().map(|&m| m as usize).collect()),
        "P_T" => Sweep::TxPower(xs),
        _ => Sweep::CoherenceBandwidth(xs),
    })
}
