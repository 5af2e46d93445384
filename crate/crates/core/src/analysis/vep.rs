//! Evoked-potential trials, averaging and metrics.
//!
//! A trial covers `pre` samples before the anchor, the anchor itself and
//! `post` samples after it. Amplitude and peak time are read from the
//! averaged trace on `[0, post]` (inclusive); SNR compares the variance of
//! the `post` samples starting at the anchor with the `pre` samples before it.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::recording::Recording;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VepError {
    #[error("recording has no triggers")]
    NoTriggers,
    #[error("window lengths must be positive")]
    BadWindow,
    #[error("no clean trials to average")]
    NoCleanTrials,
    #[error("trace has {found} samples, window needs {expected}")]
    TraceLength { expected: usize, found: usize },
    #[error("pre-stimulus variance is zero; SNR undefined")]
    ZeroPreVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VepWindow {
    pub sample_rate_hz: f64,
    pub pre_samples: usize,
    pub post_samples: usize,
}

impl VepWindow {
    pub fn new(sample_rate_hz: f64, pre_ms: f64, post_ms: f64) -> Result<Self, VepError> {
        let pre = libm::round(pre_ms * 1e-3 * sample_rate_hz);
        let post = libm::round(post_ms * 1e-3 * sample_rate_hz);
        if !(pre >= 1.0 && post >= 1.0) {
            return Err(VepError::BadWindow);
        }
        Ok(Self { sample_rate_hz, pre_samples: pre as usize, post_samples: post as usize })
    }

    pub fn len(&self) -> usize {
        self.pre_samples + self.post_samples + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Latency of trace index `i` relative to the anchor, in ms.
    pub fn latency_ms(&self, i: usize) -> f64 {
        (i as f64 - self.pre_samples as f64) * 1e3 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub anchor_frame: usize,
    pub clean: bool,
    /// Per channel, `window.len()` samples.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub window: VepWindow,
    pub trials: Vec<Trial>,
    /// Triggers whose window fell off either end of the session.
    pub skipped: usize,
}

impl TrialSet {
    pub fn clean_count(&self) -> usize {
        self.trials.iter().filter(|t| t.clean).count()
    }
}

/// Cuts one trial per trigger, anchored according to the trigger label.
pub fn epoch_vep(rec: &Recording, pre_ms: f64, post_ms: f64) -> Result<TrialSet, VepError> {
    if rec.triggers.is_empty() {
        return Err(VepError::NoTriggers);
    }
    let window = VepWindow::new(rec.spec.sample_rate_hz, pre_ms, post_ms)?;
    let total = rec.record.total_frames();
    let mut trials = Vec::new();
    let mut skipped = 0;
    for anchor in rec.anchor_frames() {
        if anchor < window.pre_samples || anchor + window.post_samples >= total {
            skipped += 1;
            continue;
        }
        let span = anchor - window.pre_samples..anchor + window.post_samples + 1;
        let values = (0..rec.record.channel_count()).map(|c| rec.record.channel(c)[span.clone()].to_vec()).collect();
        trials.push(Trial { anchor_frame: anchor, clean: !rec.record.overlaps_absent(span), values });
    }
    Ok(TrialSet { window, trials, skipped })
}

/// Pointwise mean over clean trials, per channel.
pub fn vep_average(trials: &TrialSet) -> Result<Vec<Vec<f64>>, VepError> {
    let clean: Vec<&Trial> = trials.trials.iter().filter(|t| t.clean).collect();
    let first = clean.first().ok_or(VepError::NoCleanTrials)?;
    let n = clean.len() as f64;
    let mut avg: Vec<Vec<f64>> = first.values.iter().map(|ch| vec![0.0; ch.len()]).collect();
    for t in &clean {
        for (acc, ch) in avg.iter_mut().zip(&t.values) {
            for (a, v) in acc.iter_mut().zip(ch) {
                *a += v;
            }
        }
    }
    for ch in &mut avg {
        for a in ch.iter_mut() {
            *a /= n;
        }
    }
    Ok(avg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VepMetrics {
    pub amplitude_uv: f64,
    pub snr_db: f64,
    pub peak_time_ms: f64,
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Metrics of an averaged trace.
///
/// `peak_override_ms` replaces the automatic peak pick (largest |value| on
/// the post-stimulus window) with a manually chosen latency.
pub fn vep_metrics_with_peak(
    avg: &[f64],
    window: &VepWindow,
    peak_override_ms: Option<f64>,
) -> Result<VepMetrics, VepError> {
    if avg.len() != window.len() {
        return Err(VepError::TraceLength { expected: window.len(), found: avg.len() });
    }
    let pre = &avg[..window.pre_samples];
    let post_var = &avg[window.pre_samples..window.pre_samples + window.post_samples];
    let response = &avg[window.pre_samples..];
    let max = response.iter().copied().fold(f64::MIN, f64::max);
    let min = response.iter().copied().fold(f64::MAX, f64::min);
    let pre_var = variance(pre);
    if pre_var == 0.0 {
        return Err(VepError::ZeroPreVariance);
    }
    let snr_db = 10.0 * libm::log10(variance(post_var) / pre_var);
    let peak_time_ms = match peak_override_ms {
        Some(ms) => ms,
        None => {
            let (i, _) =
                response
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
            window.latency_ms(window.pre_samples + i)
        }
    };
    Ok(VepMetrics { amplitude_uv: max - min, snr_db, peak_time_ms })
}

pub fn vep_metrics(avg: &[f64], window: &VepWindow) -> Result<VepMetrics, VepError> {
    vep_metrics_with_peak(avg, window, None)
}
