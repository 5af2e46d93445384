//! Phase-only sinusoid fit.
//!
//! Amplitude and frequency are held at the delivered values; only the phase
//! is free. The residual sum of squares is a degree-two trigonometric
//! polynomial in the phase, computed from five sums over the epoch, so the
//! search is a coarse scan of that closed form followed by golden-section
//! and Newton refinement around the best bracket.

use core::f64::consts::PI;

use thiserror::Error;

use super::epoch::Epoch;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("cannot fit an empty epoch")]
    EmptyEpoch,
    #[error("epoch contains absent or non-finite samples")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFitResult {
    /// In `(-π, π]`.
    pub phase_rad: f64,
    pub rmse_uv: f64,
}

/// Sufficient statistics of `y` against `sin θ`, `cos θ`.
struct Sums {
    ys: f64,
    yc: f64,
    ss: f64,
    cc: f64,
    sc: f64,
    yy: f64,
}

impl Sums {
    fn sse(&self, a: f64, phi: f64) -> f64 {
        let (s, c) = (libm::sin(phi), libm::cos(phi));
        self.yy - 2.0 * a * (self.ys * c + self.yc * s)
            + a * a * (self.ss * c * c + 2.0 * self.sc * s * c + self.cc * s * s)
    }

    fn d1(&self, a: f64, phi: f64) -> f64 {
        -2.0 * a * (self.yc * libm::cos(phi) - self.ys * libm::sin(phi))
            + a * a * ((self.cc - self.ss) * libm::sin(2.0 * phi) + 2.0 * self.sc * libm::cos(2.0 * phi))
    }

    fn d2(&self, a: f64, phi: f64) -> f64 {
        2.0 * a * (self.yc * libm::sin(phi) + self.ys * libm::cos(phi))
            + a * a * (2.0 * (self.cc - self.ss) * libm::cos(2.0 * phi) - 4.0 * self.sc * libm::sin(2.0 * phi))
    }
}

const COARSE_STEPS: usize = 72;

/// Wraps into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = libm::fmod(phi, 2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Fits `A sin(2π f t + φ)` to `values`, with sample `i` at
/// `t = (start_frame + i) / fs`.
pub fn fit_phase(
    values: &[f64],
    start_frame: usize,
    amplitude_uv: f64,
    freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<SineFitResult, FitError> {
    if values.is_empty() {
        return Err(FitError::EmptyEpoch);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let w = 2.0 * PI * freq_hz / sample_rate_hz;
    let theta = |i: usize| w * (start_frame + i) as f64;
    let mut sums = Sums { ys: 0.0, yc: 0.0, ss: 0.0, cc: 0.0, sc: 0.0, yy: 0.0 };
    for (i, &y) in values.iter().enumerate() {
        let (s, c) = (libm::sin(theta(i)), libm::cos(theta(i)));
        sums.ys += y * s;
        sums.yc += y * c;
        sums.ss += s * s;
        sums.cc += c * c;
        sums.sc += s * c;
        sums.yy += y * y;
    }
    let a = amplitude_uv;
    let step = 2.0 * PI / COARSE_STEPS as f64;
    let best = (0..COARSE_STEPS)
        .map(|k| -PI + k as f64 * step)
        .min_by(|p, q| sums.sse(a, *p).total_cmp(&sums.sse(a, *q)))
        .unwrap_or(0.0);

    // golden section on [best - step, best + step]
    let g = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (best - step, best + step);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (sums.sse(a, x1), sums.sse(a, x2));
    while hi - lo > 1e-9 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = sums.sse(a, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = sums.sse(a, x2);
        }
    }
    let mut phi = 0.5 * (lo + hi);
    for _ in 0..3 {
        let curvature = sums.d2(a, phi);
        if curvature <= 0.0 {
            break;
        }
        let next = phi - sums.d1(a, phi) / curvature;
        if (next - phi).abs() > step || sums.sse(a, next) > sums.sse(a, phi) {
            break;
        }
        phi = next;
    }

    let sse: f64 = values
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let r = y - a * libm::sin(theta(i) + phi);
            r * r
        })
        .sum();
    Ok(SineFitResult { phase_rad: wrap_phase(phi), rmse_uv: libm::sqrt(sse / values.len() as f64) })
}

pub fn fit_sine_phase(
    epoch: &Epoch,
    amplitude_uv: f64,
    freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<SineFitResult, FitError> {
    fit_phase(&epoch.values, epoch.start_frame, amplitude_uv, freq_hz, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec::Vec;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Brute-force argmin over a dense phase grid, residuals summed directly.
    fn grid_oracle(values: &[f64], start: usize, a: f64, f: f64, fs: f64, n: usize) -> f64 {
        (0..n)
            .map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64)
            .map(|phi| {
                let sse: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, y)| {
                        let r = y - a * libm::sin(2.0 * PI * f * (start + i) as f64 / fs + phi);
                        r * r
                    })
                    .sum();
                (phi, sse)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap()
            .0
    }

    fn phase_distance(a: f64, b: f64) -> f64 {
        wrap_phase(a - b).abs()
    }

    #[test]
    fn self_fit_recovers_phase() {
        let fs = 1024.0;
        let v: Vec<f64> = (0..52).map(|i| 50.0 * libm::sin(2.0 * PI * 20.0 * (100 + i) as f64 / fs + 0.3)).collect();
        let r = fit_phase(&v, 100, 50.0, 20.0, fs).unwrap();
        assert!((r.phase_rad - 0.3).abs() < 1e-3, "{}", r.phase_rad);
        assert!(r.rmse_uv < 1e-9);
    }

    #[test]
    fn matches_grid_oracle_on_random_cases() {
        let mut g = rng::seeded(2024);
        for case in 0..100 {
            let fs = if case % 2 == 0 { 1024.0 } else { 1200.0 };
            let a: f64 = g.random_range(10.0..100.0);
            let f: f64 = g.random_range(10.0..190.0);
            let phi: f64 = g.random_range(-PI..PI);
            let sigma: f64 = g.random_range(0.0..10.0);
            let start: usize = g.random_range(0..30_000);
            let len = libm::round(fs / f) as usize;
            let v: Vec<f64> = (0..len)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut g);
                    a * libm::sin(2.0 * PI * f * (start + i) as f64 / fs + phi) + sigma * z
                })
                .collect();
            let r = fit_phase(&v, start, a, f, fs).unwrap();
            let oracle = grid_oracle(&v, start, a, f, fs, 10_000);
            assert!(phase_distance(r.phase_rad, oracle) <= 1e-3, "case {case}: {} vs {oracle}", r.phase_rad);
        }
    }

    #[test]
    fn rmse_of_noisy_epochs_tracks_sigma() {
        let fs = 1024.0;
        let mut g = rng::seeded(5);
        for (sigma, tol) in [(9.4, 1.0), (4.0, 0.5)] {
            let mut total = 0.0;
            for k in 0..200 {
                let start = k * 51;
                let v: Vec<f64> = (0..51)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut g);
                        50.0 * libm::sin(2.0 * PI * 20.0 * (start + i) as f64 / fs) + sigma * z
                    })
                    .collect();
                total += fit_phase(&v, start, 50.0, 20.0, fs).unwrap().rmse_uv;
            }
            let mean = total / 200.0;
            assert!((mean - sigma).abs() <= tol, "sigma {sigma}: mean rmse {mean}");
        }
    }

    #[test]
    fn errors() {
        assert_eq!(fit_phase(&[], 0, 1.0, 1.0, 10.0), Err(FitError::EmptyEpoch));
        assert_eq!(fit_phase(&[1.0, f64::NAN], 0, 1.0, 1.0, 10.0), Err(FitError::NonFinite));
    }

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        approx::assert_abs_diff_eq!(wrap_phase(-PI), PI, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(wrap_phase(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
    }
}
