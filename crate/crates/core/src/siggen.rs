//! Test inputs: DAC-generated sinusoids behind a voltage divider, and
//! synthetic visual-evoked-potential sessions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::device::SignalSource;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SiggenError {
    #[error("amplitude must be nonnegative and finite, got {0} µV")]
    BadAmplitude(f64),
    #[error("frequency must be positive and finite, got {0} Hz")]
    BadFrequency(f64),
    #[error("duration must be positive, got {0} s")]
    BadDuration(f64),
    #[error("invalid DAC model: {0}")]
    BadDac(&'static str),
    #[error("invalid VEP template: {0}")]
    BadTemplate(&'static str),
    #[error("flash rate {rate_hz} Hz leaves no room for a 200 ms response window")]
    OverlappingWindows { rate_hz: f64 },
}

/// Function-generator DAC followed by a resistive divider.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DacModel {
    pub dac_step_v: f64,
    pub divider_ratio: f64,
}

impl Default for DacModel {
    /// 610 µV/bit at the generator, 3.39 pV/bit after the divider.
    fn default() -> Self {
        Self { dac_step_v: 610e-6, divider_ratio: 610e-6 / 3.39e-12 }
    }
}

impl DacModel {
    pub fn validate(&self) -> Result<(), SiggenError> {
        if !(self.dac_step_v.is_finite() && self.dac_step_v > 0.0) {
            return Err(SiggenError::BadDac("dac_step_v must be positive"));
        }
        if !(self.divider_ratio.is_finite() && self.divider_ratio > 0.0) {
            return Err(SiggenError::BadDac("divider_ratio must be positive"));
        }
        Ok(())
    }

    /// Step size seen by the amplifier, in µV.
    pub fn post_divider_step_uv(&self) -> f64 {
        self.dac_step_v / self.divider_ratio * 1e6
    }

    /// Post-divider voltage produced when the generator is asked for `v_uv`
    /// at the amplifier input.
    ///
    /// Quantization happens at the DAC; dividing a multiple of the DAC step by
    /// the ratio is the same as rounding to the post-divider step.
    pub fn output_uv(&self, v_uv: f64) -> f64 {
        let step = self.post_divider_step_uv();
        libm::round(v_uv / step) * step
    }
}

/// `A sin(2π f t + φ)` on every channel, optionally DAC-quantized.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinusoid {
    pub amplitude_uv: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
    pub dac: Option<DacModel>,
    pub duration_s: f64,
}

impl Sinusoid {
    pub fn analytic_uv(&self, t_s: f64) -> f64 {
        self.amplitude_uv * libm::sin(2.0 * PI * self.freq_hz * t_s + self.phase_rad)
    }
}

impl SignalSource for Sinusoid {
    fn value_uv(&self, _channel: usize, t_s: f64) -> f64 {
        let v = self.analytic_uv(t_s);
        match &self.dac {
            Some(dac) => dac.output_uv(v),
            None => v,
        }
    }

    fn duration_s(&self) -> f64 {
        self.duration_s
    }
}

/// Divider-scaled, DAC-quantized sinusoid with zero phase.
///
/// A zero amplitude is accepted and yields the zero source.
pub fn gen_sinusoid(amplitude_uv: f64, freq_hz: f64, dac: DacModel, duration_s: f64) -> Result<Sinusoid, SiggenError> {
    if !(amplitude_uv.is_finite() && amplitude_uv >= 0.0) {
        return Err(SiggenError::BadAmplitude(amplitude_uv));
    }
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(SiggenError::BadFrequency(freq_hz));
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(SiggenError::BadDuration(duration_s));
    }
    dac.validate()?;
    Ok(Sinusoid { amplitude_uv, freq_hz, phase_rad: 0.0, dac: Some(dac), duration_s })
}

/// 10..=190 Hz in 10 Hz steps, skipping mains (50 Hz) and its harmonics.
pub fn sweep_frequencies() -> Vec<f64> {
    (1..=19u32).filter(|k| k % 5 != 0).map(|k| f64::from(k * 10)).collect()
}

/// 10..=100 µV in 10 µV steps.
pub fn sweep_amplitudes() -> Vec<f64> {
    (1..=10u32).map(|k| f64::from(k * 10)).collect()
}

/// Response window of a VEP template, in ms after the flash.
pub const VEP_WINDOW_MS: f64 = 200.0;

/// Stand-in evoked response: a biphasic pair of raised-cosine lobes.
///
/// The primary (positive) lobe is centred on `peak_time_ms`; a negative lobe
/// of half its height sits in the larger remaining part of the window. The
/// lobes do not overlap, so the peak-to-peak value is exactly
/// `peak_to_peak_uv` and the largest-magnitude extremum is at the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VepTemplate {
    pub peak_time_ms: f64,
    pub peak_to_peak_uv: f64,
}

impl Default for VepTemplate {
    fn default() -> Self {
        Self { peak_time_ms: 90.0, peak_to_peak_uv: 100.0 }
    }
}

const PRIMARY_HALF_WIDTH_MS: f64 = 40.0;
const SECONDARY_MAX_HALF_WIDTH_MS: f64 = 40.0;
const SECONDARY_RATIO: f64 = 0.5;

impl VepTemplate {
    pub fn new(peak_time_ms: f64, peak_to_peak_uv: f64) -> Result<Self, SiggenError> {
        let t = Self { peak_time_ms, peak_to_peak_uv };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), SiggenError> {
        if !(self.peak_time_ms > 0.0 && self.peak_time_ms < VEP_WINDOW_MS) {
            return Err(SiggenError::BadTemplate("peak_time_ms must be in (0, 200)"));
        }
        if !(self.peak_to_peak_uv.is_finite() && self.peak_to_peak_uv > 0.0) {
            return Err(SiggenError::BadTemplate("peak_to_peak_uv must be positive"));
        }
        Ok(())
    }

    /// (centre, half width, height) of both lobes.
    fn lobes(&self) -> [(f64, f64, f64); 2] {
        let peak = self.peak_time_ms;
        let hw = PRIMARY_HALF_WIDTH_MS.min(peak).min(VEP_WINDOW_MS - peak);
        let h1 = self.peak_to_peak_uv / (1.0 + SECONDARY_RATIO);
        let before = (0.0, peak - hw);
        let after = (peak + hw, VEP_WINDOW_MS);
        let (lo, hi) = if after.1 - after.0 >= before.1 - before.0 { after } else { before };
        let hw2 = ((hi - lo) / 2.0).min(SECONDARY_MAX_HALF_WIDTH_MS);
        let c2 = if lo > peak { lo + hw2 } else { hi - hw2 };
        [(peak, hw, h1), (c2, hw2, -SECONDARY_RATIO * h1)]
    }

    /// Template value at `latency_ms` after the flash; zero outside
    /// `[0, 200]` ms.
    pub fn value_uv(&self, latency_ms: f64) -> f64 {
        if !(0.0..=VEP_WINDOW_MS).contains(&latency_ms) {
            return 0.0;
        }
        self.lobes()
            .iter()
            .filter(|(c, hw, _)| (latency_ms - c).abs() < *hw)
            .map(|(c, hw, h)| h * 0.5 * (1.0 + libm::cos(PI * (latency_ms - c) / hw)))
            .sum()
    }
}

/// Flash-locked template responses plus optional Gaussian background.
#[derive(Debug, Clone, PartialEq)]
pub struct VepSession {
    pub template: VepTemplate,
    pub flash_rate_hz: f64,
    pub flash_count: usize,
    pub duration_s: f64,
    pub background_sigma_uv: f64,
    pub seed: u64,
    /// Per-channel gain on the template; channels beyond the list use 1.
    pub channel_gains: Vec<f64>,
}

/// Resolution of the background-noise time grid (0.1 µs).
const BACKGROUND_TICKS_PER_S: f64 = 1e7;

impl VepSession {
    /// Flash instants `k / rate`, `k = 0..n`.
    pub fn flash_times(&self) -> Vec<f64> {
        (0..self.flash_count).map(|k| k as f64 / self.flash_rate_hz).collect()
    }

    pub fn gain(&self, channel: usize) -> f64 {
        self.channel_gains.get(channel).copied().unwrap_or(1.0)
    }

    pub fn with_gains(mut self, gains: Vec<f64>) -> Self {
        self.channel_gains = gains;
        self
    }

    fn evoked_uv(&self, t_s: f64) -> f64 {
        if t_s < 0.0 || self.flash_count == 0 {
            return 0.0;
        }
        // responses never overlap, so only the last two flashes can contribute
        let k = libm::floor(t_s * self.flash_rate_hz) as usize;
        let k = k.min(self.flash_count - 1);
        (k.saturating_sub(1)..=k).map(|j| self.template.value_uv((t_s - j as f64 / self.flash_rate_hz) * 1e3)).sum()
    }
}

impl SignalSource for VepSession {
    fn value_uv(&self, channel: usize, t_s: f64) -> f64 {
        let mut v = self.gain(channel) * self.evoked_uv(t_s);
        if self.background_sigma_uv > 0.0 {
            let tick = libm::round(t_s * BACKGROUND_TICKS_PER_S).max(0.0) as u64;
            v += self.background_sigma_uv * rng::gaussian_at(self.seed, channel as u64, tick);
        }
        v
    }

    fn duration_s(&self) -> f64 {
        self.duration_s
    }
}

/// Builds a VEP session with `floor(duration * rate)` flashes at exact
/// multiples of the flash period. Returns the source and the flash times.
pub fn gen_vep_session(
    template: VepTemplate,
    flash_rate_hz: f64,
    duration_s: f64,
    background_sigma_uv: f64,
    seed: u64,
) -> Result<(VepSession, Vec<f64>), SiggenError> {
    template.validate()?;
    if !(flash_rate_hz.is_finite() && flash_rate_hz > 0.0) {
        return Err(SiggenError::BadFrequency(flash_rate_hz));
    }
    if flash_rate_hz * VEP_WINDOW_MS * 1e-3 >= 1.0 {
        return Err(SiggenError::OverlappingWindows { rate_hz: flash_rate_hz });
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(SiggenError::BadDuration(duration_s));
    }
    if !(background_sigma_uv.is_finite() && background_sigma_uv >= 0.0) {
        return Err(SiggenError::BadAmplitude(background_sigma_uv));
    }
    let session = VepSession {
        template,
        flash_rate_hz,
        flash_count: crate::floor_count(duration_s * flash_rate_hz),
        duration_s,
        background_sigma_uv,
        seed,
        channel_gains: vec![],
    };
    let times = session.flash_times();
    Ok((session, times))
}

/// `inner` started `lead_s` seconds into the recording; zero before that.
#[derive(Debug, Clone, PartialEq)]
pub struct Delayed<S> {
    pub inner: S,
    pub lead_s: f64,
}

impl<S: SignalSource> SignalSource for Delayed<S> {
    fn value_uv(&self, channel: usize, t_s: f64) -> f64 {
        if t_s < self.lead_s {
            0.0
        } else {
            self.inner.value_uv(channel, t_s - self.lead_s)
        }
    }

    fn duration_s(&self) -> f64 {
        self.inner.duration_s() + self.lead_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_divider_gives_3_39_pv_steps() {
        let dac = DacModel::default();
        approx::assert_relative_eq!(dac.post_divider_step_uv(), 3.39e-6, max_relative = 1e-12);
    }

    #[test]
    fn sinusoid_rms_matches_analytic() {
        let s = gen_sinusoid(50.0, 20.0, DacModel::default(), 30.0).unwrap();
        // one second at a fine grid covers 20 whole periods
        let n = 200_000;
        let ms: f64 = (0..n).map(|i| s.value_uv(0, i as f64 / n as f64).powi(2)).sum::<f64>() / n as f64;
        approx::assert_abs_diff_eq!(libm::sqrt(ms), 50.0 / libm::sqrt(2.0), epsilon = 1e-6);
    }

    #[test]
    fn zero_amplitude_is_zero_source() {
        let s = gen_sinusoid(0.0, 20.0, DacModel::default(), 1.0).unwrap();
        assert!((0..1000).all(|i| s.value_uv(3, i as f64 * 1e-3) == 0.0));
    }

    #[test]
    fn bad_sinusoid_parameters() {
        let d = DacModel::default();
        assert!(matches!(gen_sinusoid(-1.0, 20.0, d, 1.0), Err(SiggenError::BadAmplitude(_))));
        assert!(matches!(gen_sinusoid(50.0, 0.0, d, 1.0), Err(SiggenError::BadFrequency(_))));
        assert!(matches!(gen_sinusoid(50.0, -3.0, d, 1.0), Err(SiggenError::BadFrequency(_))));
        assert!(matches!(gen_sinusoid(50.0, 20.0, d, 0.0), Err(SiggenError::BadDuration(_))));
    }

    #[test]
    fn dac_error_is_half_post_divider_step() {
        let s = gen_sinusoid(50.0, 20.0, DacModel::default(), 30.0).unwrap();
        let half = DacModel::default().post_divider_step_uv() / 2.0;
        let worst = (0..20_000)
            .map(|i| {
                let t = i as f64 * 1.37e-4;
                (s.value_uv(0, t) - s.analytic_uv(t)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= half * (1.0 + 1e-6), "{worst} > {half}");
        // 1.695 pV against a 9.4 µV noise floor
        assert!(half < 1.7e-6);
        assert!(half / 9.4 < 1e-6);
    }

    #[test]
    fn sweep_lists() {
        let f = sweep_frequencies();
        assert_eq!(f.len(), 16);
        assert!(f.contains(&40.0) && f.contains(&60.0));
        assert!(!f.contains(&50.0) && !f.contains(&100.0) && !f.contains(&150.0));
        assert_eq!(f.first(), Some(&10.0));
        assert_eq!(f.last(), Some(&190.0));
        assert_eq!(f, sweep_frequencies());
        assert_eq!(sweep_amplitudes().len(), 10);
    }

    #[test]
    fn default_template_shape() {
        let t = VepTemplate::default();
        let grid: Vec<f64> = (0..=200_000).map(|i| t.value_uv(i as f64 * 1e-3)).collect();
        let max = grid.iter().copied().fold(f64::MIN, f64::max);
        let min = grid.iter().copied().fold(f64::MAX, f64::min);
        approx::assert_abs_diff_eq!(max - min, 100.0, epsilon = 1e-9);
        approx::assert_abs_diff_eq!(t.value_uv(90.0), max, epsilon = 1e-12);
        assert_eq!(t.value_uv(-1.0), 0.0);
        assert_eq!(t.value_uv(200.5), 0.0);
    }

    #[test]
    fn vep_session_triggers() {
        let (s, times) = gen_vep_session(VepTemplate::default(), 0.99, 300.0, 0.0, 1).unwrap();
        assert_eq!(times.len(), 297);
        for (k, t) in times.iter().enumerate() {
            assert_eq!(*t, k as f64 / 0.99);
        }
        // noiseless source at flash + peak equals the template maximum
        let peak = s.template.value_uv(90.0);
        for &t in &times[..20] {
            approx::assert_abs_diff_eq!(s.value_uv(0, t + 0.090), peak, epsilon = 1e-9);
        }
    }

    #[test]
    fn delayed_source_shifts_time() {
        let (s, _) = gen_vep_session(VepTemplate::default(), 0.99, 10.0, 0.0, 1).unwrap();
        let d = Delayed { inner: s.clone(), lead_s: 0.5 };
        assert_eq!(d.duration_s(), 10.5);
        assert_eq!(d.value_uv(0, 0.1), 0.0);
        assert_eq!(d.value_uv(0, 0.59), s.value_uv(0, 0.09));
    }

    #[test]
    fn overlapping_windows_rejected() {
        let r = gen_vep_session(VepTemplate::default(), 5.0, 10.0, 0.0, 1);
        assert!(matches!(r, Err(SiggenError::OverlappingWindows { .. })));
    }

    #[test]
    fn background_is_deterministic_and_scaled() {
        let (s, _) = gen_vep_session(VepTemplate::default(), 0.99, 10.0, 10.0, 5).unwrap();
        let t = 0.5 + 1e-3; // outside the response window
        assert_eq!(s.value_uv(2, t), s.value_uv(2, t));
        let n = 20_000;
        let var = (0..n).map(|i| s.value_uv(1, 0.25 + i as f64 * 1e-6).powi(2)).sum::<f64>() / n as f64;
        approx::assert_relative_eq!(libm::sqrt(var), 10.0, max_relative = 0.05);
    }

    proptest! {
        #[test]
        fn template_extremum_and_p2p(peak in 1.0f64..199.0, p2p in 1.0f64..500.0) {
            let t = VepTemplate::new(peak, p2p).unwrap();
            let grid: Vec<f64> = (0..=20_000).map(|i| t.value_uv(i as f64 * 1e-2)).collect();
            let max = grid.iter().copied().fold(f64::MIN, f64::max);
            let min = grid.iter().copied().fold(f64::MAX, f64::min);
            prop_assert!((max - min - p2p).abs() < 1e-3 * p2p);
            prop_assert!((t.value_uv(peak) - p2p / 1.5).abs() < 1e-9 * p2p);
        }
    }
}
