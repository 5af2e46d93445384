//! Zero-phase Butterworth high-pass filtering.
//!
//! The filter is designed in second-order sections (bilinear transform with
//! pre-warping) because a 3 Hz corner at ~1 kHz puts the poles very close to
//! the unit circle. It is applied forward and backward, so the magnitude
//! response is squared and the phase is zero.
//!
//! Records are filtered one contiguous segment at a time. Each segment has
//! its mean removed and is mirror-padded before filtering; segments shorter
//! than [`Highpass::warmup_len`] cannot be filtered meaningfully and are
//! marked unusable.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use thiserror::Error;

use crate::transport::ContiguousRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    BadCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("filter order must be positive")]
    BadOrder,
}

/// 72 dB at half the cutoff after the forward-backward pass.
pub const DEFAULT_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
    fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// One biquad, `b0 + b1 z^-1 + b2 z^-2` over `1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: C64) -> C64 {
        let z2 = z_inv.mul(z_inv);
        let one = C64::new(1.0, 0.0);
        let num =
            C64::new(self.b[0], 0.0).add(z_inv.mul(C64::new(self.b[1], 0.0))).add(z2.mul(C64::new(self.b[2], 0.0)));
        let den = one.add(z_inv.mul(C64::new(self.a[0], 0.0))).add(z2.mul(C64::new(self.a[1], 0.0)));
        num.div(den)
    }

    /// Direct form II transposed, in place.
    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Butterworth high-pass as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Highpass {
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
    pub sections: Vec<Biquad>,
}

impl Highpass {
    pub fn butterworth(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, FilterError> {
        let nyquist_hz = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
            return Err(FilterError::BadCutoff { cutoff_hz, nyquist_hz });
        }
        if order == 0 {
            return Err(FilterError::BadOrder);
        }
        let fs2 = 2.0 * sample_rate_hz;
        let warped = fs2 * libm::tan(PI * cutoff_hz / sample_rate_hz);
        let bilinear = |s: C64| {
            let h = C64::new(s.re / fs2, s.im / fs2);
            C64::new(1.0, 0.0).add(h).div(C64::new(1.0, 0.0).sub(h))
        };
        // analog high-pass poles: warped / (low-pass prototype pole)
        let hp_pole = |k: usize| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            C64::new(warped, 0.0).div(C64::new(libm::cos(theta), libm::sin(theta)))
        };
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for k in 0..order / 2 {
            let z = bilinear(hp_pole(k));
            sections.push(Biquad { b: [1.0, -2.0, 1.0], a: [-2.0 * z.re, z.norm_sqr()] });
        }
        if order % 2 == 1 {
            let z = bilinear(hp_pole(order / 2));
            sections.push(Biquad { b: [1.0, -1.0, 0.0], a: [-z.re, 0.0] });
        }
        // unit gain at Nyquist
        for s in &mut sections {
            let g = libm::sqrt(s.response(C64::new(-1.0, 0.0)).norm_sqr());
            for b in &mut s.b {
                *b /= g;
            }
        }
        Ok(Self { cutoff_hz, sample_rate_hz, sections })
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = C64::new(libm::cos(w), -libm::sin(w));
        self.sections.iter().map(|s| libm::sqrt(s.response(z_inv).norm_sqr())).product()
    }

    /// Attenuation of the forward-backward filter at `freq_hz`, in dB.
    pub fn zero_phase_attenuation_db(&self, freq_hz: f64) -> f64 {
        -40.0 * libm::log10(self.magnitude(freq_hz))
    }

    /// Minimum segment length that can be filtered: one period of the cutoff.
    pub fn warmup_len(&self) -> usize {
        libm::ceil(self.sample_rate_hz / self.cutoff_hz) as usize
    }

    fn pass(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Forward-backward filtering of one contiguous segment.
    ///
    /// The segment mean is removed and the ends are mirror-padded by up to
    /// three warm-up lengths so the start-up transient decays outside the
    /// data.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        let pad = (3 * self.warmup_len()).min(n - 1);
        let mut buf = Vec::with_capacity(n + 2 * pad);
        buf.extend((1..=pad).rev().map(|i| x[i] - mean));
        buf.extend(x.iter().map(|v| v - mean));
        buf.extend((n - 1 - pad..n - 1).rev().map(|i| x[i] - mean));
        self.pass(&mut buf);
        buf.reverse();
        self.pass(&mut buf);
        buf.reverse();
        buf.drain(..pad);
        buf.truncate(n);
        buf
    }
}

/// High-pass filters every contiguous segment of `record`.
pub fn highpass_with(filter: &Highpass, record: &ContiguousRecord) -> ContiguousRecord {
    let warmup = filter.warmup_len();
    let mut channels: Vec<Vec<f64>> = (0..record.channel_count()).map(|c| record.channel(c).to_vec()).collect();
    let mut unusable: Vec<Range<usize>> = record.unusable().to_vec();
    for seg in record.segments() {
        if seg.len() < warmup {
            unusable.push(seg);
            continue;
        }
        for ch in &mut channels {
            let y = filter.filtfilt(&ch[seg.clone()]);
            ch[seg.clone()].copy_from_slice(&y);
        }
    }
    unusable.sort_by_key(|r| r.start);
    record.with_channels(channels, unusable)
}

/// High-pass at `cutoff_hz` with the default order.
pub fn highpass(
    record: &ContiguousRecord,
    cutoff_hz: f64,
    sample_rate_hz: f64,
) -> Result<ContiguousRecord, FilterError> {
    let filter = Highpass::butterworth(DEFAULT_ORDER, cutoff_hz, sample_rate_hz)?;
    Ok(highpass_with(&filter, record))
}
