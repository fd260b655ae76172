//! Scenario files.
//!
//! A scenario is a TOML document (conventionally `*.scn`). Every section is
//! optional; missing keys take the defaults of [`ScenarioFile::default`].
//! Unknown keys are rejected.
//!
//! ```toml
//! name = "two-targets"
//! noise_dbm = -80.0
//! channel_model = "freq"          # or "time"
//! constellation = "qpsk"          # "bpsk", "qpsk", "qam16"
//! snap_to_bin = true
//! trials = 1
//! outputs = ["profile", "report"] # also "iq"
//!
//! [radar]
//! num_subcarriers = 2048
//! num_symbols = 1
//! bandwidth_hz = 1e9
//! cp_duration_s = 0.512e-6
//! carrier_freq_hz = 77e9
//! sub_sampling_ratio = 8
//! rng_seed = 0
//!
//! [smnc]
//! enabled = true
//! epsilon_db = 0.5
//! max_iters = 10
//!
//! [cfar]
//! training_cells = 16
//! guard_cells = 4
//! pfa = 1e-4
//!
//! [[targets]]
//! range_m = 4.0
//! power_dbm = 0.0
//! velocity_mps = 0.0              # or normalized_doppler = 0.1
//! phase_rad = 0.0
//!
//! [sweep]
//! ratios = [1, 2, 4, 8]
//! normalized_doppler = [0.0, 0.1]
//! ```
//!
//! `power_dbm` is the target's peak power in the range profile of one
//! symbol; `noise_dbm` is the noise power of one frequency bin before
//! folding. Both are converted to linear units here and nowhere else.

use std::fmt;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Target, TargetSet};
use crate::config::RadarConfig;
use crate::detect::CfarParams;
use crate::smnc::SmncParams;
use crate::waveform::Constellation;
use crate::{from_db, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
}

/// One failed check, addressed by its dotted field path (e.g. `targets[1].range_m`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Frequency-domain model; exact for static scenes, ignores ICI.
    #[default]
    Freq,
    /// Sample-level time-domain model, including intra-symbol Doppler.
    Time,
}

impl std::str::FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freq" => Ok(Self::Freq),
            "time" => Ok(Self::Time),
            other => Err(format!("unknown channel model {other:?} (expected freq or time)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Profile,
    Report,
    Iq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSection {
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    pub bandwidth_hz: f64,
    pub cp_duration_s: f64,
    pub carrier_freq_hz: f64,
    pub sub_sampling_ratio: usize,
    pub rng_seed: u64,
}

impl Default for RadarSection {
    fn default() -> Self {
        let p = RadarConfig::automotive_1ghz(1);
        Self {
            num_subcarriers: p.num_subcarriers,
            num_symbols: p.num_symbols,
            bandwidth_hz: p.bandwidth_hz,
            cp_duration_s: p.cp_duration_s,
            carrier_freq_hz: p.carrier_freq_hz,
            sub_sampling_ratio: p.sub_sampling_ratio,
            rng_seed: p.rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmncSection {
    pub enabled: bool,
    pub epsilon_db: f64,
    pub max_iters: usize,
}

impl Default for SmncSection {
    fn default() -> Self {
        let p = SmncParams::default();
        Self {
            enabled: true,
            epsilon_db: p.epsilon_db,
            max_iters: p.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub range_m: f64,
    pub power_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_doppler: Option<f64>,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ratios: Vec<usize>,
    pub normalized_doppler: Vec<f64>,
}

/// The document as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub name: String,
    pub noise_dbm: f64,
    pub channel_model: ChannelModel,
    pub constellation: Constellation,
    /// Moves each target to the nearest range bin.
    pub snap_to_bin: bool,
    pub trials: usize,
    pub outputs: Vec<Output>,
    pub radar: RadarSection,
    pub smnc: SmncSection,
    pub cfar: CfarParams,
    pub targets: Vec<TargetSpec>,
    pub sweep: SweepSection,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            noise_dbm: -80.0,
            channel_model: ChannelModel::Freq,
            constellation: Constellation::Qpsk,
            snap_to_bin: false,
            trials: 1,
            outputs: vec![Output::Profile, Output::Report],
            radar: RadarSection::default(),
            smnc: SmncSection::default(),
            cfar: CfarParams::default(),
            targets: Vec::new(),
            sweep: SweepSection::default(),
        }
    }
}

/// A validated scenario in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Canonical source document; what [`Scenario::to_toml`] writes.
    pub file: ScenarioFile,
    pub radar: RadarConfig,
    pub targets: TargetSet,
    pub smnc: SmncParams,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn channel_model(&self) -> ChannelModel {
        self.file.channel_model
    }

    pub fn constellation(&self) -> Constellation {
        self.file.constellation
    }

    pub fn smnc_enabled(&self) -> bool {
        self.file.smnc.enabled
    }

    pub fn trials(&self) -> usize {
        self.file.trials
    }

    pub fn wants(&self, output: Output) -> bool {
        self.file.outputs.contains(&output)
    }

    /// Canonical TOML with every default spelled out.
    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string_pretty(&self.file).map_err(|e| ScenarioError::Serialize(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|source| ScenarioError::Read {
            path: path.display().to_string(),
            source,
        })
    }

    /// Same scenario with a different sub-sampling ratio.
    pub fn with_ratio(&self, l: usize) -> Result<Self, ScenarioError> {
        let mut f = self.file.clone();
        f.radar.sub_sampling_ratio = l;
        f.resolve()
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((0, 0));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    /// Radar constants with the noise converted to mW.
    pub fn radar_config(&self) -> RadarConfig {
        let r = &self.radar;
        RadarConfig {
            num_subcarriers: r.num_subcarriers,
            num_symbols: r.num_symbols,
            bandwidth_hz: r.bandwidth_hz,
            cp_duration_s: r.cp_duration_s,
            carrier_freq_hz: r.carrier_freq_hz,
            sub_sampling_ratio: r.sub_sampling_ratio,
            noise_power_mw: from_db(self.noise_dbm),
            rng_seed: r.rng_seed,
        }
    }

    /// Validates every field and converts to linear units. All violations
    /// are collected before returning.
    pub fn resolve(self) -> Result<Scenario, ScenarioError> {
        let mut bad = Vec::new();
        let mut push = |field: String, message: String| bad.push(Violation { field, message });

        let radar = self.radar_config();
        for (field, why) in radar.violations() {
            let field = match field {
                "noise_power_mw" => "noise_dbm".to_string(),
                f => format!("radar.{f}"),
            };
            push(field, why);
        }
        if !self.noise_dbm.is_finite() {
            push("noise_dbm".into(), "must be finite".into());
        }
        if self.trials == 0 {
            push("trials".into(), "must be at least 1".into());
        }
        if self.smnc.epsilon_db.is_nan() || self.smnc.epsilon_db <= 0.0 {
            push("smnc.epsilon_db".into(), "must be positive".into());
        }
        if self.smnc.max_iters == 0 {
            push("smnc.max_iters".into(), "must be at least 1".into());
        }
        if self.cfar.training_cells == 0 {
            push("cfar.training_cells".into(), "must be at least 1".into());
        }
        if !(self.cfar.pfa > 0.0 && self.cfar.pfa < 1.0) {
            push("cfar.pfa".into(), "must lie in (0, 1)".into());
        }
        if radar.num_subcarriers > 0 && radar.num_subcarriers < self.cfar.window() {
            push(
                "cfar".into(),
                format!(
                    "window of {} cells exceeds {} range bins",
                    self.cfar.window(),
                    radar.num_subcarriers
                ),
            );
        }
        for (i, &l) in self.sweep.ratios.iter().enumerate() {
            if l == 0 {
                push(format!("sweep.ratios[{i}]"), "must be positive".into());
            }
        }
        for (i, nu) in self.sweep.normalized_doppler.iter().enumerate() {
            if !nu.is_finite() {
                push(format!("sweep.normalized_doppler[{i}]"), "must be finite".into());
            }
        }

        let radar_ok = radar.violations().is_empty();
        let max_range = if radar_ok {
            SPEED_OF_LIGHT / (2.0 * radar.subcarrier_spacing_hz())
        } else {
            f64::INFINITY
        };
        let mut targets = Vec::new();
        for (i, t) in self.targets.iter().enumerate() {
            let at = |f: &str| format!("targets[{i}].{f}");
            if !(t.range_m >= 0.0 && t.range_m < max_range) {
                push(at("range_m"), format!("must lie in [0, {max_range}) m"));
            }
            if !t.power_dbm.is_finite() {
                push(at("power_dbm"), "must be finite".into());
            }
            if !t.phase_rad.is_finite() {
                push(at("phase_rad"), "must be finite".into());
            }
            match (t.velocity_mps, t.normalized_doppler) {
                (Some(_), Some(_)) => push(
                    at("velocity_mps"),
                    "give either velocity_mps or normalized_doppler, not both".into(),
                ),
                (Some(v), None) | (None, Some(v)) if !v.is_finite() => {
                    push(at("velocity_mps"), "must be finite".into())
                }
                _ => {}
            }
            if radar_ok {
                targets.push(self.resolve_target(t, &radar));
            }
        }

        if !bad.is_empty() {
            return Err(ScenarioError::Invalid(bad));
        }
        let smnc = SmncParams {
            epsilon_db: self.smnc.epsilon_db,
            max_iters: self.smnc.max_iters,
            cfar: self.cfar,
        };
        Ok(Scenario {
            targets: TargetSet::new(targets),
            radar,
            smnc,
            file: self,
        })
    }

    fn resolve_target(&self, t: &TargetSpec, radar: &RadarConfig) -> Target {
        // |α|² Nc is the profile peak power
        let mag = (from_db(t.power_dbm) / radar.num_subcarriers as f64).sqrt();
        let amplitude = Complex::from_polar(mag, t.phase_rad);
        let mut delay = 2.0 * t.range_m / SPEED_OF_LIGHT;
        if self.snap_to_bin {
            delay = (delay * radar.bandwidth_hz).round() / radar.bandwidth_hz;
        }
        let target = Target::new(delay, 0.0, amplitude);
        match (t.velocity_mps, t.normalized_doppler) {
            (_, Some(nu)) => target.with_normalized_doppler(nu, radar),
            (Some(v), None) => Target::from_range_velocity(
                delay * SPEED_OF_LIGHT / 2.0,
                v,
                amplitude,
                radar,
            ),
            (None, None) => target,
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::parse(text)?.resolve()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}
