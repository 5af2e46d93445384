//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file (plus a seed) describes the
//! standard experiments. Device presets are overridden with `[safe]` and
//! `[reference]` tables whose keys are the [`DeviceSpec`] field names.
//!
//! ```toml
//! experiment = "sine_sweep"
//! seed = 7
//!
//! [safe]
//! loss_probability = 0.1
//!
//! [sine]
//! frequencies_hz = [10, 20, 40]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use eegchain_core::analysis::{SineOptions, VepOptions};
use eegchain_core::siggen::{DacModel, VepTemplate, VEP_WINDOW_MS};
use eegchain_core::{DeviceSpec, PacketAnchor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|p| format!("  {p}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    SineSweep,
    VepSession,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Safe,
    Reference,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Safe, Preset::Reference];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Safe => "safe",
            Preset::Reference => "reference",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "safe" => Some(Preset::Safe),
            "reference" => Some(Preset::Reference),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SineConfig {
    pub frequencies_hz: Vec<f64>,
    /// Amplitude used throughout the frequency sweep.
    pub frequency_sweep_amplitude_uv: f64,
    pub amplitudes_uv: Vec<f64>,
    /// Frequency used throughout the amplitude sweep.
    pub amplitude_sweep_frequency_hz: f64,
    pub duration_s: f64,
    /// Quantize the generator output with `dac`; off gives an ideal source.
    pub quantize_dac: bool,
    pub dac: DacModel,
    pub cutoff_hz: f64,
    pub max_epochs: usize,
    pub k_mad: f64,
}

impl Default for SineConfig {
    fn default() -> Self {
        let opts = SineOptions::default();
        Self {
            frequencies_hz: eegchain_core::siggen::sweep_frequencies(),
            frequency_sweep_amplitude_uv: 50.0,
            amplitudes_uv: eegchain_core::siggen::sweep_amplitudes(),
            amplitude_sweep_frequency_hz: 20.0,
            duration_s: 30.0,
            quantize_dac: true,
            dac: DacModel::default(),
            cutoff_hz: opts.cutoff_hz,
            max_epochs: opts.max_epochs,
            k_mad: opts.k_mad,
        }
    }
}

impl SineConfig {
    pub fn options(&self) -> SineOptions {
        SineOptions { cutoff_hz: self.cutoff_hz, max_epochs: self.max_epochs, k_mad: self.k_mad }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VepConfig {
    pub flash_rate_hz: f64,
    pub duration_s: f64,
    /// Quiet time recorded before the first flash.
    pub lead_in_s: f64,
    pub template: VepTemplate,
    pub background_sigma_uv: f64,
    /// Template gain per channel; missing channels use 1.
    pub channel_gains: Vec<f64>,
    /// Upper end of the uniform delay added to reference-arm triggers.
    pub jitter_ms: f64,
    pub pre_ms: f64,
    pub post_ms: f64,
    pub packet_anchor: PacketAnchor,
    /// Manual peak latency per channel; `nan` (or a missing entry) picks the
    /// largest-magnitude extremum.
    pub peak_overrides_ms: Vec<f64>,
}

impl Default for VepConfig {
    fn default() -> Self {
        Self {
            flash_rate_hz: 0.99,
            duration_s: 300.0,
            lead_in_s: 0.5,
            template: VepTemplate::default(),
            background_sigma_uv: 0.0,
            channel_gains: Vec::new(),
            jitter_ms: 40.0,
            pre_ms: 200.0,
            post_ms: 200.0,
            packet_anchor: PacketAnchor::End,
            peak_overrides_ms: Vec::new(),
        }
    }
}

impl VepConfig {
    pub fn options(&self) -> VepOptions {
        VepOptions {
            pre_ms: self.pre_ms,
            post_ms: self.post_ms,
            peak_overrides_ms: self.peak_overrides_ms.iter().map(|&v| (!v.is_nan()).then_some(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Required; runs refuse to start without one.
    pub seed: Option<u64>,
    /// Presets to run, in order.
    pub presets: Vec<Preset>,
    /// Copied verbatim into recording metadata.
    pub start_time: String,
    /// Also write the received packets of every session as a capture file.
    pub write_capture: bool,
    pub safe: DeviceSpec,
    pub reference: DeviceSpec,
    pub sine: SineConfig,
    pub vep: VepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::SineSweep,
            seed: None,
            presets: Preset::ALL.to_vec(),
            start_time: "1970-01-01T00:00:00Z".into(),
            write_capture: false,
            safe: DeviceSpec::safe(),
            reference: DeviceSpec::reference(),
            sine: SineConfig::default(),
            vep: VepConfig::default(),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })
}

/// Reads a device description such as
///
/// ```text
/// sample_rate_hz = 1024
/// noise_sigma_uv = 9.4
/// ```
///
/// Missing keys take the wireless-device defaults.
pub fn load_device_spec(path: &Path) -> Result<DeviceSpec, ConfigError> {
    let spec: DeviceSpec = parse(&read(path)?, path)?;
    spec.validate().map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
    Ok(spec)
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed: Some(seed), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        parse(text, Path::new("<config>"))
    }

    /// Parses without validating; call [`Self::validate`] once command-line
    /// overrides are applied.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        parse(&read(path)?, path)
    }

    pub fn spec(&self, preset: Preset) -> &DeviceSpec {
        match preset {
            Preset::Safe => &self.safe,
            Preset::Reference => &self.reference,
        }
    }

    /// The seed, or the validation error for a missing one.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| ConfigError::Invalid(vec!["seed is required".into()]))
    }

    /// Presets in configured order, duplicates removed.
    pub fn active_presets(&self) -> Vec<Preset> {
        let mut out: Vec<Preset> = Vec::new();
        for &p in &self.presets {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Checks everything the selected experiment uses and reports every
    /// problem at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };
        check(self.seed.is_some(), "seed is required".into());
        check(!self.presets.is_empty(), "presets: at least one preset is required".into());
        check(!self.start_time.contains(['\n', '\r']), "start_time: must be a single line".into());
        for p in self.active_presets() {
            let spec = self.spec(p);
            if let Err(e) = spec.validate() {
                check(false, format!("{p}: {e}"));
            }
            check(
                !self.write_capture || spec.adc_bits <= 16,
                format!("{p}: capture files hold 16-bit codes, adc_bits is {}", spec.adc_bits),
            );
        }
        match self.experiment {
            Experiment::SineSweep => self.validate_sine(&mut check),
            Experiment::VepSession => self.validate_vep(&mut check),
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    fn validate_sine(&self, check: &mut impl FnMut(bool, String)) {
        let s = &self.sine;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        check(!s.frequencies_hz.is_empty() || !s.amplitudes_uv.is_empty(), "sine: both sweeps are empty".into());
        let nyquist =
            self.active_presets().iter().map(|&p| self.spec(p).sample_rate_hz / 2.0).fold(f64::INFINITY, f64::min);
        let full_scale =
            self.active_presets().iter().map(|&p| self.spec(p).full_scale_uv()).fold(f64::INFINITY, f64::min);
        let mut freqs = s.frequencies_hz.clone();
        if !s.amplitudes_uv.is_empty() {
            freqs.push(s.amplitude_sweep_frequency_hz);
        }
        for f in freqs {
            check(positive(f) && f < nyquist, format!("sine: frequency {f} Hz must be in (0, {nyquist}) Hz"));
        }
        let mut amps = s.amplitudes_uv.clone();
        if !s.frequencies_hz.is_empty() {
            amps.push(s.frequency_sweep_amplitude_uv);
        }
        for a in amps {
            check(
                a.is_finite() && a >= 0.0 && a < full_scale,
                format!("sine: amplitude {a} µV must be in [0, {full_scale}) µV"),
            );
        }
        check(positive(s.duration_s), format!("sine: duration_s must be positive, got {}", s.duration_s));
        if s.quantize_dac {
            if let Err(e) = s.dac.validate() {
                check(false, format!("sine: {e}"));
            }
        }
        check(
            positive(s.cutoff_hz) && s.cutoff_hz < nyquist,
            format!("sine: cutoff_hz must be in (0, {nyquist}) Hz, got {}", s.cutoff_hz),
        );
        check(s.max_epochs > 0, "sine: max_epochs must be at least 1".into());
        check(positive(s.k_mad), format!("sine: k_mad must be positive, got {}", s.k_mad));
    }

    fn validate_vep(&self, check: &mut impl FnMut(bool, String)) {
        let v = &self.vep;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        check(
            positive(v.flash_rate_hz) && v.flash_rate_hz * VEP_WINDOW_MS * 1e-3 < 1.0,
            format!("vep: flash_rate_hz must be positive and below 5 Hz, got {}", v.flash_rate_hz),
        );
        check(positive(v.duration_s), format!("vep: duration_s must be positive, got {}", v.duration_s));
        check(nonneg(v.lead_in_s), format!("vep: lead_in_s must be nonnegative, got {}", v.lead_in_s));
        if let Err(e) = v.template.validate() {
            check(false, format!("vep: {e}"));
        }
        check(
            nonneg(v.background_sigma_uv),
            format!("vep: background_sigma_uv must be nonnegative, got {}", v.background_sigma_uv),
        );
        for g in &v.channel_gains {
            check(g.is_finite(), format!("vep: channel gain {g} is not finite"));
        }
        check(nonneg(v.jitter_ms), format!("vep: jitter_ms must be nonnegative, got {}", v.jitter_ms));
        check(positive(v.pre_ms), format!("vep: pre_ms must be positive, got {}", v.pre_ms));
        check(positive(v.post_ms), format!("vep: post_ms must be positive, got {}", v.post_ms));
        for &p in &v.peak_overrides_ms {
            check(
                p.is_nan() || (p >= 0.0 && p <= v.post_ms),
                format!("vep: peak override {p} ms is outside [0, {}] ms", v.post_ms),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.safe, DeviceSpec::safe());
        assert_eq!(c.sine.frequencies_hz.len(), 16);
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(p)) if p == ["seed is required"]));
    }

    #[test]
    fn overrides_apply() {
        let c = ExperimentConfig::from_toml(
            r#"
            experiment = "vep_session"
            seed = 9
            presets = ["reference"]
            [safe]
            loss_probability = 0.2
            [vep]
            flash_rate_hz = 2
            packet_anchor = "start"
            peak_overrides_ms = [90, nan]
            [vep.template]
            peak_time_ms = 100
            peak_to_peak_uv = 20
            "#,
        )
        .unwrap();
        assert_eq!(c.experiment, Experiment::VepSession);
        assert_eq!(c.safe.loss_probability, 0.2);
        assert_eq!(c.safe.sample_rate_hz, 1024.0);
        assert_eq!(c.vep.packet_anchor, PacketAnchor::Start);
        assert_eq!(c.vep.template.peak_time_ms, 100.0);
        assert_eq!(c.vep.options().peak_overrides_ms, vec![Some(90.0), None]);
        assert_eq!(c.active_presets(), vec![Preset::Reference]);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("sede = 3"), Err(ConfigError::Parse { .. })));
        assert!(ExperimentConfig::from_toml("[safe]\nsample_rate = 3").is_err());
        assert!(ExperimentConfig::from_toml("presets = [\"wired\"]").is_err());
    }

    #[test]
    fn all_problems_are_listed() {
        let mut c = ExperimentConfig::default();
        c.safe.frames_per_packet = 0;
        c.sine.frequencies_hz = vec![10.0, 700.0];
        c.sine.duration_s = -1.0;
        let Err(ConfigError::Invalid(p)) = c.validate() else { panic!() };
        assert_eq!(p.len(), 4, "{p:?}");
        assert!(p[0].contains("seed"));
        assert!(p.iter().any(|m| m.starts_with("safe:")));
        assert!(p.iter().any(|m| m.contains("700")));
        assert!(p.iter().any(|m| m.contains("duration_s")));
    }

    #[test]
    fn vep_checks() {
        let mut c = ExperimentConfig::with_seed(1);
        c.experiment = Experiment::VepSession;
        c.vep.flash_rate_hz = 6.0;
        c.vep.peak_overrides_ms = vec![250.0];
        let Err(ConfigError::Invalid(p)) = c.validate() else { panic!() };
        assert_eq!(p.len(), 2, "{p:?}");
    }

    #[test]
    fn device_spec_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("device.toml");
        std::fs::write(&path, "sample_rate_hz = 1200\nnoise_sigma_uv = 4.0\ninterchannel_skew_us = 0\n").unwrap();
        let spec = load_device_spec(&path).unwrap();
        assert_eq!(spec.sample_rate_hz, 1200.0);
        assert_eq!(spec.frames_per_packet, 41);
        std::fs::write(&path, "frames_per_packet = 0\n").unwrap();
        assert!(matches!(load_device_spec(&path), Err(ConfigError::Invalid(_))));
        assert!(matches!(load_device_spec(&dir.path().join("none")), Err(ConfigError::Io { .. })));
    }
}
