//! One-period epochs and robust artifact rejection.

use alloc::vec::Vec;

use thiserror::Error;

use crate::transport::ContiguousRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpochError {
    #[error("frequency must be positive, got {0} Hz")]
    BadFrequency(f64),
    #[error("channel {channel} out of range ({count} channels)")]
    BadChannel { channel: usize, count: usize },
    #[error("robust rejection needs at least {needed} epochs, got {got}")]
    TooFewEpochs { needed: usize, got: usize },
    #[error("every epoch was rejected as an artifact")]
    AllRejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub values: Vec<f64>,
    pub start_frame: usize,
    /// False when the epoch touches a lost or unusable frame, or was
    /// rejected as an artifact.
    pub clean: bool,
}

impl Epoch {
    pub fn peak_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Every whole period of `freq_hz` in one channel of `record`.
///
/// Epoch `k` spans frames `[round(k fs / f), round((k + 1) fs / f))`.
pub fn period_epochs(
    record: &ContiguousRecord,
    channel: usize,
    freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<Vec<Epoch>, EpochError> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(EpochError::BadFrequency(freq_hz));
    }
    if channel >= record.channel_count() {
        return Err(EpochError::BadChannel { channel, count: record.channel_count() });
    }
    let period = sample_rate_hz / freq_hz;
    let data = record.channel(channel);
    let mut out = Vec::new();
    for k in 0.. {
        let start = libm::round(k as f64 * period) as usize;
        let end = libm::round((k + 1) as f64 * period) as usize;
        if end > record.total_frames() || end <= start {
            break;
        }
        out.push(Epoch {
            values: data[start..end].to_vec(),
            start_frame: start,
            clean: !record.overlaps_absent(start..end),
        });
    }
    Ok(out)
}

/// Clean one-period epochs, at most `max_epochs` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SineEpochs {
    pub epochs: Vec<Epoch>,
    /// Whole periods in the record.
    pub periods: usize,
    /// Periods dropped because they touched a gap or unusable segment.
    pub unclean: usize,
}

impl SineEpochs {
    pub fn is_short(&self, requested: usize) -> bool {
        self.epochs.len() < requested
    }
}

pub fn epoch_sine(
    record: &ContiguousRecord,
    channel: usize,
    freq_hz: f64,
    sample_rate_hz: f64,
    max_epochs: usize,
) -> Result<SineEpochs, EpochError> {
    let all = period_epochs(record, channel, freq_hz, sample_rate_hz)?;
    let periods = all.len();
    let unclean = all.iter().filter(|e| !e.clean).count();
    let epochs = all.into_iter().filter(|e| e.clean).take(max_epochs).collect();
    Ok(SineEpochs { epochs, periods, unclean })
}

/// Fewest epochs for which median/MAD statistics are used.
pub const MIN_EPOCHS_FOR_REJECTION: usize = 8;

pub const DEFAULT_K_MAD: f64 = 5.0;

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Drops epochs whose peak |value| exceeds `median + k_mad * MAD` of the
/// peaks. Epochs already marked unclean are dropped as well.
pub fn reject_artifacts(epochs: &[Epoch], k_mad: f64) -> Result<Vec<Epoch>, EpochError> {
    if epochs.len() < MIN_EPOCHS_FOR_REJECTION {
        return Err(EpochError::TooFewEpochs { needed: MIN_EPOCHS_FOR_REJECTION, got: epochs.len() });
    }
    let peaks: Vec<f64> = epochs.iter().map(Epoch::peak_abs).collect();
    let med = median(&mut peaks.clone());
    let mad = median(&mut peaks.iter().map(|p| (p - med).abs()).collect::<Vec<_>>());
    let limit = med + k_mad * mad;
    let kept: Vec<Epoch> =
        epochs.iter().zip(&peaks).filter(|(e, &p)| e.clean && p <= limit).map(|(e, _)| e.clone()).collect();
    if kept.is_empty() {
        return Err(EpochError::AllRejected);
    }
    Ok(kept)
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand_distr::{Distribution, StandardNormal};

    fn sine_record(total: usize, gaps: Vec<core::ops::Range<usize>>) -> ContiguousRecord {
        let ch: Vec<f64> = (0..total).map(|i| 50.0 * libm::sin(2.0 * PI * 20.0 * i as f64 / 1024.0)).collect();
        ContiguousRecord::new(vec![ch], total, gaps)
    }

    #[test]
    fn twenty_hz_lengths_alternate() {
        let rec = sine_record(1024, vec![]);
        let e = period_epochs(&rec, 0, 20.0, 1024.0).unwrap();
        assert_eq!(e.len(), 20);
        let lens: Vec<usize> = e.iter().map(|e| e.values.len()).collect();
        assert!(lens.iter().all(|&l| l == 51 || l == 52));
        // round(k * 51.2): 0, 51, 102, 154, 205, 256, ...
        assert_eq!(&lens[..5], &[51, 51, 52, 51, 51]);
        assert_eq!(lens.iter().sum::<usize>(), 1024);
    }

    #[test]
    fn thirty_seconds_has_six_hundred_periods() {
        let rec = sine_record(30 * 1024, vec![]);
        let e = epoch_sine(&rec, 0, 20.0, 1024.0, 200).unwrap();
        assert_eq!(e.periods, 600);
        assert_eq!(e.epochs.len(), 200);
        assert_eq!(e.unclean, 0);
        assert!(!e.is_short(200));
    }

    #[test]
    fn gap_marks_overlapping_epochs() {
        let rec = sine_record(1024, vec![82..123]);
        let all = period_epochs(&rec, 0, 20.0, 1024.0).unwrap();
        for e in &all {
            let end = e.start_frame + e.values.len();
            let touches = e.start_frame < 123 && end > 82;
            assert_eq!(e.clean, !touches, "epoch at {}", e.start_frame);
        }
        // epochs [51,102) and [102,154)
        assert_eq!(all.iter().filter(|e| !e.clean).count(), 2);
        let s = epoch_sine(&rec, 0, 20.0, 1024.0, 200).unwrap();
        assert_eq!(s.epochs.len(), 18);
        assert!(s.is_short(200));
        assert!(matches!(period_epochs(&rec, 3, 20.0, 1024.0), Err(EpochError::BadChannel { .. })));
        assert!(matches!(period_epochs(&rec, 0, 0.0, 1024.0), Err(EpochError::BadFrequency(_))));
    }

    fn epoch(values: Vec<f64>) -> Epoch {
        Epoch { values, start_frame: 0, clean: true }
    }

    #[test]
    fn identical_epochs_survive() {
        let e: Vec<Epoch> = (0..20).map(|_| epoch(vec![1.0, -2.0, 0.5])).collect();
        assert_eq!(reject_artifacts(&e, 5.0).unwrap().len(), 20);
    }

    #[test]
    fn spike_epoch_is_the_only_one_rejected() {
        let rec = sine_record(30 * 1024, vec![]);
        let mut e = period_epochs(&rec, 0, 20.0, 1024.0).unwrap();
        e.truncate(201);
        let mut n = rng::seeded(3);
        for ep in &mut e {
            for v in &mut ep.values {
                let z: f64 = StandardNormal.sample(&mut n);
                *v += z;
            }
        }
        e[77].values[10] = 10.0 * e[77].peak_abs();
        let kept = reject_artifacts(&e, 5.0).unwrap();
        assert_eq!(kept.len(), 200);
        assert!(kept.iter().all(|k| k.start_frame != e[77].start_frame));
    }

    #[test]
    fn gaussian_noise_rejection_rate_is_low() {
        let mut n = rng::seeded(11);
        let mut rejected = 0;
        let mut total = 0;
        for _ in 0..50 {
            let e: Vec<Epoch> = (0..200)
                .map(|_| {
                    epoch(
                        (0..51)
                            .map(|_| {
                                let z: f64 = StandardNormal.sample(&mut n);
                                9.4 * z
                            })
                            .collect(),
                    )
                })
                .collect();
            rejected += 200 - reject_artifacts(&e, 5.0).unwrap().len();
            total += 200;
        }
        assert!((rejected as f64) < 0.01 * total as f64, "{rejected}/{total}");
    }

    #[test]
    fn rejection_errors() {
        let few: Vec<Epoch> = (0..5).map(|_| epoch(vec![1.0])).collect();
        assert_eq!(reject_artifacts(&few, 5.0), Err(EpochError::TooFewEpochs { needed: 8, got: 5 }));
        let dirty: Vec<Epoch> = (0..10).map(|_| Epoch { values: vec![1.0], start_frame: 0, clean: false }).collect();
        assert_eq!(reject_artifacts(&dirty, 5.0), Err(EpochError::AllRejected));
    }
}
