//! Amplifier front-end model.
//!
//! Channels are converted one after another by a single multiplexed ADC, so
//! channel `c` of frame `n` is taken at `n / fs + c * skew`. Input-referred
//! noise is white, Gaussian and independent per channel, added before the
//! converter.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid device spec: {0}")]
    InvalidSpec(&'static str),
    #[error("non-finite input voltage")]
    NonFiniteInput,
    #[error("time {time_s} s is beyond the source duration {duration_s} s")]
    BeyondSource { time_s: f64, duration_s: f64 },
    #[error("acquisition duration must be positive, got {0} s")]
    BadDuration(f64),
}

/// Parameter set of a simulated amplifier.
///
/// The default is the wireless device: 1024 Hz, 0.125 µV/step, 16 bits,
/// 10 µs between channels, six channels, 41 frames per packet (~40 ms),
/// 9.4 µV input noise and 5 % packet loss.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DeviceSpec {
    pub sample_rate_hz: f64,
    pub adc_step_uv: f64,
    pub adc_bits: u32,
    pub interchannel_skew_us: f64,
    pub channel_count: usize,
    pub frames_per_packet: usize,
    pub noise_sigma_uv: f64,
    pub loss_probability: f64,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self::safe()
    }
}

impl DeviceSpec {
    /// The wireless sub-scalp amplifier.
    pub fn safe() -> Self {
        Self {
            sample_rate_hz: 1024.0,
            adc_step_uv: 0.125,
            adc_bits: 16,
            interchannel_skew_us: 10.0,
            channel_count: 6,
            frames_per_packet: 41,
            noise_sigma_uv: 9.4,
            loss_probability: 0.05,
        }
    }

    /// Wired reference amplifier: 1200 Hz, simultaneous sampling, 4.0 µV
    /// noise, lossless transport. Triggers are sample-accurate.
    pub fn reference() -> Self {
        Self {
            sample_rate_hz: 1200.0,
            interchannel_skew_us: 0.0,
            noise_sigma_uv: 4.0,
            loss_probability: 0.0,
            ..Self::safe()
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.sample_rate_hz) {
            return Err(DeviceError::InvalidSpec("sample_rate_hz must be positive"));
        }
        if !positive(self.adc_step_uv) {
            return Err(DeviceError::InvalidSpec("adc_step_uv must be positive"));
        }
        if self.adc_bits == 0 || self.adc_bits > 32 {
            return Err(DeviceError::InvalidSpec("adc_bits must be in 1..=32"));
        }
        if self.channel_count == 0 {
            return Err(DeviceError::InvalidSpec("channel_count must be positive"));
        }
        if self.frames_per_packet == 0 || self.frames_per_packet > usize::from(u8::MAX) {
            return Err(DeviceError::InvalidSpec("frames_per_packet must be in 1..=255"));
        }
        if !(self.interchannel_skew_us.is_finite() && self.interchannel_skew_us >= 0.0) {
            return Err(DeviceError::InvalidSpec("interchannel_skew_us must be nonnegative"));
        }
        if !(self.noise_sigma_uv.is_finite() && self.noise_sigma_uv >= 0.0) {
            return Err(DeviceError::InvalidSpec("noise_sigma_uv must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(DeviceError::InvalidSpec("loss_probability must be in [0, 1]"));
        }
        // all channels of a frame are converted within one frame period
        if self.interchannel_skew_us * self.channel_count as f64 >= 1e6 / self.sample_rate_hz {
            return Err(DeviceError::InvalidSpec(
                "interchannel_skew_us * channel_count must be below the frame period",
            ));
        }
        Ok(())
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.adc_bits - 1)) - 1
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.adc_bits - 1))
    }

    /// `adc_step_uv * 2^(bits-1)`; 4096 µV with the defaults.
    pub fn full_scale_uv(&self) -> f64 {
        self.adc_step_uv * (1u64 << (self.adc_bits - 1)) as f64
    }

    pub fn skew_s(&self) -> f64 {
        self.interchannel_skew_us * 1e-6
    }

    /// Sampling instant of `channel` in frame `frame_index`.
    pub fn sample_time_s(&self, frame_index: usize, channel: usize) -> f64 {
        frame_index as f64 / self.sample_rate_hz + channel as f64 * self.skew_s()
    }

    /// ADC code of `v_uv`, rounded half away from zero and clamped.
    pub fn adc_code(&self, v_uv: f64) -> Result<i64, DeviceError> {
        if !v_uv.is_finite() {
            return Err(DeviceError::NonFiniteInput);
        }
        let code = libm::round(v_uv / self.adc_step_uv);
        Ok((code.clamp(self.min_code() as f64, self.max_code() as f64)) as i64)
    }

    pub fn code_to_uv(&self, code: i64) -> f64 {
        code as f64 * self.adc_step_uv
    }
}

/// Quantize a voltage as the ADC would.
pub fn adc_quantize(v_uv: f64, spec: &DeviceSpec) -> Result<f64, DeviceError> {
    spec.adc_code(v_uv).map(|c| spec.code_to_uv(c))
}

/// One multiplexed conversion cycle, values already quantized.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFrame {
    pub frame_index: usize,
    pub channel_values_uv: Vec<f64>,
}

/// A continuous-time, per-channel voltage source in µV.
///
/// Implementations must be deterministic: the same `(channel, t)` always
/// yields the same value.
pub trait SignalSource {
    fn value_uv(&self, channel: usize, t_s: f64) -> f64;
    fn duration_s(&self) -> f64;
}

impl<S: SignalSource + ?Sized> SignalSource for &S {
    fn value_uv(&self, channel: usize, t_s: f64) -> f64 {
        (**self).value_uv(channel, t_s)
    }
    fn duration_s(&self) -> f64 {
        (**self).duration_s()
    }
}

/// Samples one frame of `src`, drawing noise from `noise`.
///
/// Noise is drawn in channel order and only when `noise_sigma_uv > 0`, so a
/// noiseless acquisition is exactly the quantized source.
pub fn sample_frame<S, R>(
    src: &S,
    frame_index: usize,
    spec: &DeviceSpec,
    noise: &mut R,
) -> Result<SampleFrame, DeviceError>
where
    S: SignalSource + ?Sized,
    R: Rng + ?Sized,
{
    let frame_time = spec.sample_time_s(frame_index, 0);
    if frame_time > src.duration_s() {
        return Err(DeviceError::BeyondSource { time_s: frame_time, duration_s: src.duration_s() });
    }
    let sigma = spec.noise_sigma_uv;
    let channel_values_uv = (0..spec.channel_count)
        .map(|c| {
            let mut v = src.value_uv(c, spec.sample_time_s(frame_index, c));
            if sigma > 0.0 {
                let z: f64 = noise.sample(StandardNormal);
                v += sigma * z;
            }
            adc_quantize(v, spec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampleFrame { frame_index, channel_values_uv })
}

/// Acquires `floor(duration_s * fs)` frames, indices contiguous from 0.
pub fn run_acquisition<S: SignalSource + ?Sized>(
    src: &S,
    spec: &DeviceSpec,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<SampleFrame>, DeviceError> {
    spec.validate()?;
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(DeviceError::BadDuration(duration_s));
    }
    if duration_s > src.duration_s() {
        return Err(DeviceError::BeyondSource { time_s: duration_s, duration_s: src.duration_s() });
    }
    let n = crate::floor_count(duration_s * spec.sample_rate_hz);
    let mut noise = rng::seeded(seed);
    (0..n).map(|i| sample_frame(src, i, spec, &mut noise)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Ramp;
    impl SignalSource for Ramp {
        // 1 µV per µs
        fn value_uv(&self, _c: usize, t: f64) -> f64 {
            t * 1e6
        }
        fn duration_s(&self) -> f64 {
            1.0
        }
    }

    struct Zero(f64);
    impl SignalSource for Zero {
        fn value_uv(&self, _c: usize, _t: f64) -> f64 {
            0.0
        }
        fn duration_s(&self) -> f64 {
            self.0
        }
    }

    fn quiet(spec: DeviceSpec) -> DeviceSpec {
        DeviceSpec { noise_sigma_uv: 0.0, ..spec }
    }

    #[test]
    fn defaults_are_valid_and_full_scale_is_4096() {
        let s = DeviceSpec::safe();
        s.validate().unwrap();
        DeviceSpec::reference().validate().unwrap();
        assert_eq!(s.full_scale_uv(), 4096.0);
        assert_eq!(s.max_code(), 32767);
        assert_eq!(s.min_code(), -32768);
    }

    #[test]
    fn skew_must_fit_in_a_frame() {
        let s = DeviceSpec { interchannel_skew_us: 200.0, ..DeviceSpec::safe() };
        assert!(matches!(s.validate(), Err(DeviceError::InvalidSpec(_))));
    }

    #[test]
    fn quantize_examples() {
        let s = DeviceSpec::safe();
        assert_eq!(adc_quantize(0.0, &s).unwrap(), 0.0);
        assert_eq!(adc_quantize(1.0, &s).unwrap(), 1.0);
        assert_eq!(s.adc_code(1.0).unwrap(), 8);
        assert_eq!(adc_quantize(5000.0, &s).unwrap(), 4095.875);
        assert_eq!(adc_quantize(-5000.0, &s).unwrap(), -4096.0);
        // half away from zero
        assert_eq!(adc_quantize(0.0625, &s).unwrap(), 0.125);
        assert_eq!(adc_quantize(-0.0625, &s).unwrap(), -0.125);
        assert_eq!(adc_quantize(f64::NAN, &s), Err(DeviceError::NonFiniteInput));
        assert_eq!(adc_quantize(f64::INFINITY, &s), Err(DeviceError::NonFiniteInput));
    }

    #[test]
    fn ramp_channels_differ_by_slope_times_skew() {
        let spec = quiet(DeviceSpec::safe());
        let f = sample_frame(&Ramp, 3, &spec, &mut rng::seeded(0)).unwrap();
        for c in 1..spec.channel_count {
            let d = f.channel_values_uv[c] - f.channel_values_uv[c - 1];
            assert!((d - 10.0).abs() <= spec.adc_step_uv, "channel {c}: {d}");
        }
    }

    #[test]
    fn zero_source_gives_zero_frames() {
        let spec = quiet(DeviceSpec::safe());
        let f = sample_frame(&Zero(1.0), 10, &spec, &mut rng::seeded(0)).unwrap();
        assert!(f.channel_values_uv.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_beyond_source_is_rejected() {
        let spec = DeviceSpec::safe();
        let err = sample_frame(&Zero(1.0), 2048, &spec, &mut rng::seeded(0)).unwrap_err();
        assert!(matches!(err, DeviceError::BeyondSource { .. }));
    }

    #[test]
    fn frame_counts() {
        let spec = DeviceSpec::safe();
        let src = Zero(400.0);
        assert_eq!(run_acquisition(&src, &spec, 30.0, 1).unwrap().len(), 30720);
        assert_eq!(run_acquisition(&src, &spec, 0.5, 1).unwrap().len(), 512);
        let frames = run_acquisition(&src, &spec, 300.0, 1).unwrap();
        assert_eq!(frames.len(), 307_200);
        assert!(frames.iter().enumerate().all(|(i, f)| f.frame_index == i));
        assert!(matches!(run_acquisition(&src, &spec, 0.0, 1), Err(DeviceError::BadDuration(_))));
        assert!(matches!(run_acquisition(&src, &spec, -1.0, 1), Err(DeviceError::BadDuration(_))));
    }

    #[test]
    fn acquisition_is_deterministic() {
        let spec = DeviceSpec::safe();
        let src = Zero(2.0);
        let a = run_acquisition(&src, &spec, 1.0, 42).unwrap();
        let b = run_acquisition(&src, &spec, 1.0, 42).unwrap();
        let c = run_acquisition(&src, &spec, 1.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(v in -1.0e5f64..1.0e5) {
            let s = DeviceSpec::safe();
            let q = adc_quantize(v, &s).unwrap();
            prop_assert_eq!(adc_quantize(q, &s).unwrap(), q);
        }

        #[test]
        fn quantize_error_is_at_most_half_step(v in -4096.0f64..4095.875) {
            let s = DeviceSpec::safe();
            let q = adc_quantize(v, &s).unwrap();
            prop_assert!((v - q).abs() <= s.adc_step_uv / 2.0);
            prop_assert_eq!(libm::fmod(q, s.adc_step_uv), 0.0);
        }
    }
}
