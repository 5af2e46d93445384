//! Offline analysis of recorded sessions.
//!
//! * sinusoid recordings: [`filter::highpass`] → [`epoch::epoch_sine`] →
//!   [`epoch::reject_artifacts`] → [`sinefit::fit_sine_phase`], summarised
//!   by [`analyze_sine`];
//! * evoked-potential recordings: [`vep::epoch_vep`] → [`vep::vep_average`]
//!   → [`vep::vep_metrics`], summarised by [`analyze_vep`], and compared
//!   across arms with [`compare_arms`].

pub mod epoch;
pub mod filter;
pub mod sinefit;
pub mod stats;
pub mod vep;

use alloc::vec::Vec;

use thiserror::Error;

use crate::recording::Recording;
use crate::transport::ContiguousRecord;
use epoch::{epoch_sine, reject_artifacts, EpochError, MIN_EPOCHS_FOR_REJECTION};
use filter::FilterError;
use sinefit::{fit_sine_phase, FitError, SineFitResult};
use stats::{percent_difference, ComparisonStats, Metric, StatsError};
use vep::{epoch_vep, vep_average, vep_metrics_with_peak, TrialSet, VepError, VepMetrics};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Epoch(#[from] EpochError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Vep(#[from] VepError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineOptions {
    pub cutoff_hz: f64,
    pub max_epochs: usize,
    pub k_mad: f64,
}

impl Default for SineOptions {
    fn default() -> Self {
        Self { cutoff_hz: 3.0, max_epochs: 200, k_mad: epoch::DEFAULT_K_MAD }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineChannelResult {
    pub fits: Vec<SineFitResult>,
    /// Clean epochs before artifact rejection.
    pub clean: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineAnalysis {
    pub channels: Vec<SineChannelResult>,
}

impl SineAnalysis {
    pub fn rmse_values(&self) -> Vec<f64> {
        self.channels.iter().flat_map(|c| c.fits.iter().map(|f| f.rmse_uv)).collect()
    }

    pub fn epoch_count(&self) -> usize {
        self.channels.iter().map(|c| c.fits.len()).sum()
    }
}

/// Phase-fit RMSE of every usable one-period epoch, per channel.
pub fn analyze_sine(
    record: &ContiguousRecord,
    sample_rate_hz: f64,
    amplitude_uv: f64,
    freq_hz: f64,
    opts: &SineOptions,
) -> Result<SineAnalysis, AnalysisError> {
    let filtered = filter::highpass(record, opts.cutoff_hz, sample_rate_hz)?;
    let channels = (0..filtered.channel_count())
        .map(|ch| {
            let epochs = epoch_sine(&filtered, ch, freq_hz, sample_rate_hz, usize::MAX)?.epochs;
            let clean = epochs.len();
            let kept = if clean >= MIN_EPOCHS_FOR_REJECTION { reject_artifacts(&epochs, opts.k_mad)? } else { epochs };
            let rejected = clean - kept.len();
            let fits = kept
                .iter()
                .take(opts.max_epochs)
                .map(|e| fit_sine_phase(e, amplitude_uv, freq_hz, sample_rate_hz))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SineChannelResult { fits, clean, rejected })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(SineAnalysis { channels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VepOptions {
    pub pre_ms: f64,
    pub post_ms: f64,
    /// Manually chosen peak latency per channel; `None` picks automatically.
    pub peak_overrides_ms: Vec<Option<f64>>,
}

impl Default for VepOptions {
    fn default() -> Self {
        Self { pre_ms: 200.0, post_ms: 200.0, peak_overrides_ms: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VepAnalysis {
    pub trials: TrialSet,
    pub averages: Vec<Vec<f64>>,
    pub metrics: Vec<VepMetrics>,
}

pub fn analyze_vep(rec: &Recording, opts: &VepOptions) -> Result<VepAnalysis, AnalysisError> {
    let trials = epoch_vep(rec, opts.pre_ms, opts.post_ms)?;
    let averages = vep_average(&trials)?;
    let metrics = averages
        .iter()
        .enumerate()
        .map(|(c, avg)| vep_metrics_with_peak(avg, &trials.window, opts.peak_overrides_ms.get(c).copied().flatten()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VepAnalysis { trials, averages, metrics })
}

/// Percent-difference statistics for amplitude, SNR and peak time.
pub fn compare_arms(safe: &[VepMetrics], reference: &[VepMetrics]) -> Result<Vec<ComparisonStats>, AnalysisError> {
    let pick = |m: &[VepMetrics], metric: Metric| -> Vec<f64> {
        m.iter()
            .map(|v| match metric {
                Metric::Amplitude => v.amplitude_uv,
                Metric::Snr => v.snr_db,
                Metric::PeakTime => v.peak_time_ms,
            })
            .collect()
    };
    Metric::ALL
        .iter()
        .map(|&metric| Ok(percent_difference(&pick(safe, metric), &pick(reference, metric), metric)?))
        .collect()
}
