//! Percent differences between two recording arms and one-sample Student's
//! t-tests on them.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("arms have {safe} and {reference} channels")]
    LengthMismatch { safe: usize, reference: usize },
    #[error("channel {0}: mean of the two values is zero")]
    ZeroMean(usize),
    #[error("t-test needs at least two values, got {0}")]
    TooFew(usize),
    #[error("zero variance; t statistic undefined")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Amplitude,
    Snr,
    PeakTime,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Amplitude, Metric::Snr, Metric::PeakTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Amplitude => "amplitude",
            Metric::Snr => "snr",
            Metric::PeakTime => "peak_time",
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1).
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonStats {
    pub metric: Metric,
    /// Per-channel percent differences.
    pub d: Vec<f64>,
    pub mean_d: f64,
    pub std_d: f64,
    /// `None` when the differences have zero variance.
    pub ttest: Option<TTest>,
}

/// Symmetric percent difference, signed so that negative values favour the
/// device under test: higher amplitude or SNR, or an earlier peak.
pub fn percent_difference_one(safe: f64, reference: f64, metric: Metric) -> Option<f64> {
    let m = 0.5 * (safe + reference);
    if m == 0.0 {
        return None;
    }
    Some(match metric {
        Metric::Amplitude | Metric::Snr => 100.0 * (reference - safe) / m,
        Metric::PeakTime => 100.0 * (safe - reference) / m,
    })
}

pub fn percent_difference(safe: &[f64], reference: &[f64], metric: Metric) -> Result<ComparisonStats, StatsError> {
    if safe.len() != reference.len() {
        return Err(StatsError::LengthMismatch { safe: safe.len(), reference: reference.len() });
    }
    let d = safe
        .iter()
        .zip(reference)
        .enumerate()
        .map(|(i, (&s, &r))| percent_difference_one(s, r, metric).ok_or(StatsError::ZeroMean(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let ttest = one_sample_ttest(&d).ok();
    Ok(ComparisonStats { metric, mean_d: mean(&d), std_d: std_dev(&d), d, ttest })
}

/// One-sample t-test of `d` against zero, two-tailed.
pub fn one_sample_ttest(d: &[f64]) -> Result<TTest, StatsError> {
    if d.len() < 2 {
        return Err(StatsError::TooFew(d.len()));
    }
    ttest_from_summary(mean(d), std_dev(d), d.len())
}

/// The same test from a reported `mean ± std` over `n` values.
pub fn ttest_from_summary(mean: f64, std: f64, n: usize) -> Result<TTest, StatsError> {
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    // relative threshold: identical values rarely produce an exact zero
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(std > 1e-12 * mean.abs()) {
        return Err(StatsError::ZeroVariance);
    }
    let df = (n - 1) as f64;
    let t = mean / (std / libm::sqrt(n as f64));
    Ok(TTest { t_statistic: t, p_value: student_t_two_tailed(t, df), df })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// `I_x(a, b)` by the modified Lentz continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    // the fraction converges fast for x below the mean of the distribution
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let tiny = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / tiny(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / tiny(1.0 + aa * d);
        c = tiny(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / tiny(1.0 + aa * d);
        c = tiny(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn statrs_two_tailed(t: f64, df: f64) -> f64 {
        2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()))
    }

    #[test]
    fn t_distribution_against_statrs() {
        for df in [1.0, 2.0, 5.0, 10.0, 30.0, 200.0] {
            for t in [0.0, 0.1, 0.8165, 1.0, 2.0996, 2.5475, 3.0619, 7.7, 15.87] {
                let ours = student_t_two_tailed(t, df);
                let oracle = statrs_two_tailed(t, df);
                assert!((ours - oracle).abs() < 1e-9 * oracle.max(1e-6), "t={t} df={df}: {ours} vs {oracle}");
            }
        }
        assert_eq!(student_t_two_tailed(0.0, 5.0), 1.0);
    }

    #[test]
    fn ttest_examples() {
        // mean 30, std 24, n 6
        let r = ttest_from_summary(30.0, 24.0, 6).unwrap();
        approx::assert_abs_diff_eq!(r.t_statistic, 3.0619, epsilon = 1e-4);
        approx::assert_abs_diff_eq!(r.p_value, 0.028, epsilon = 1e-3);
        let r = ttest_from_summary(-22.0, 7.0, 6).unwrap();
        approx::assert_abs_diff_eq!(r.t_statistic, -7.6984, epsilon = 1e-4);
        assert!(r.p_value < 0.001);
        assert_eq!(one_sample_ttest(&[0.0; 6]), Err(StatsError::ZeroVariance));
        assert_eq!(one_sample_ttest(&[5.0; 6]), Err(StatsError::ZeroVariance));
        assert_eq!(one_sample_ttest(&[1.0]), Err(StatsError::TooFew(1)));
    }

    #[test]
    fn percent_difference_examples() {
        let d = percent_difference_one(437.0, 352.0, Metric::Amplitude).unwrap();
        approx::assert_abs_diff_eq!(d, -21.546, epsilon = 1e-3);
        let d = percent_difference_one(16.0, 112.0, Metric::Amplitude).unwrap();
        approx::assert_abs_diff_eq!(d, 150.0, epsilon = 1e-12);
        assert_eq!(percent_difference_one(7.0, 7.0, Metric::Snr), Some(0.0));
        // an earlier device peak is negative
        assert!(percent_difference_one(80.0, 100.0, Metric::PeakTime).unwrap() < 0.0);
        assert_eq!(percent_difference_one(1.0, -1.0, Metric::Snr), None);
        assert_eq!(
            percent_difference(&[1.0, 2.0], &[1.0], Metric::Snr),
            Err(StatsError::LengthMismatch { safe: 2, reference: 1 })
        );
        assert_eq!(percent_difference(&[1.0, 2.0], &[1.0, -2.0], Metric::Snr), Err(StatsError::ZeroMean(1)));
    }

    #[test]
    fn comparison_summary() {
        let s = percent_difference(&[10.0, 12.0, 9.0], &[11.0, 11.0, 11.0], Metric::Amplitude).unwrap();
        assert_eq!(s.d.len(), 3);
        approx::assert_abs_diff_eq!(s.mean_d, mean(&s.d), epsilon = 1e-12);
        assert!(s.ttest.is_some());
        let same = percent_difference(&[10.0; 6], &[10.0; 6], Metric::Amplitude).unwrap();
        assert_eq!(same.mean_d, 0.0);
        assert!(same.ttest.is_none());
    }

    proptest! {
        #[test]
        fn antisymmetric(a in 0.1f64..1e3, b in 0.1f64..1e3) {
            for m in Metric::ALL {
                let x = percent_difference_one(a, b, m).unwrap();
                let y = percent_difference_one(b, a, m).unwrap();
                prop_assert!((x + y).abs() < 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn p_is_scale_invariant(d in proptest::collection::vec(-100.0f64..100.0, 3..12), k in 0.01f64..100.0) {
            if let Ok(base) = one_sample_ttest(&d) {
                let scaled: Vec<f64> = d.iter().map(|v| v * k).collect();
                let s = one_sample_ttest(&scaled).unwrap();
                prop_assert!((base.p_value - s.p_value).abs() < 1e-9);
                prop_assert!(base.p_value > 0.0 && base.p_value <= 1.0);
            }
        }
    }
}
