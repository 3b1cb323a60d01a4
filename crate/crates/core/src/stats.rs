//! Two-sample t-tests and five-number summaries.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Welch's unequal-variance two-sample t-test.
///
/// Degenerate samples with zero variance on both sides give `p = 1` when
/// the means agree and `p = 0` otherwise.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stats(format!(
            "t-test needs at least two samples per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mean_a, mean_b) = (mean(a), mean(b));
    let (sa, sb) = (variance(a) / na, variance(b) / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if mean_a == mean_b {
            TTest { mean_a, mean_b, t: 0.0, df, p_value: 1.0 }
        } else {
            let t = if mean_a > mean_b { f64::INFINITY } else { f64::NEG_INFINITY };
            TTest { mean_a, mean_b, t, df, p_value: 0.0 }
        });
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Stats(e.to_string()))?;
    let p_value = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest { mean_a, mean_b, t, df, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics: position
/// `h = (n - 1) q` in the sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(Error::Stats("quartiles of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Quartiles {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided p-value for Student's t with 4 degrees of freedom in closed
    /// form: with `s = sin(atan(t / 2))`, `P(|T| < t) = s (1 + cos^2 / 2)`.
    fn p_df4(t: f64) -> f64 {
        let theta = (t.abs() / 2.0).atan();
        1.0 - theta.sin() * (1.0 + theta.cos().powi(2) / 2.0)
    }

    #[test]
    fn hand_computed_reference() {
        let r = welch_ttest(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        // t = -3 / sqrt(2/3), equal variances and sizes give df = 4.
        let t = -3.0 / (2.0f64 / 3.0).sqrt();
        assert!((r.t - t).abs() < 1e-12);
        assert!((r.t + 3.674).abs() < 1e-3);
        assert!((r.df - 4.0).abs() < 1e-12);
        assert!((r.p_value - p_df4(t)).abs() < 1e-9, "{} vs {}", r.p_value, p_df4(t));
        assert!((r.p_value - 0.021_311_641_128_756_727).abs() < 1e-9);
    }

    #[test]
    fn unequal_variances() {
        // Independent reference values from a Welch test in another statistics package.
        let r = welch_ttest(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]).unwrap();
        assert!((r.t + 2.809_757_434_745_082).abs() < 1e-9);
        assert!((r.df - 8.037_105_751_391_467).abs() < 1e-9);
        assert!((r.p_value - 0.022_747_255_279_670_916).abs() < 1e-9);
    }

    #[test]
    fn degenerate_samples() {
        let same = welch_ttest(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(same.p_value, 1.0);
        let flat = welch_ttest(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(flat.p_value, 1.0);
        let split = welch_ttest(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(split.p_value, 0.0);
        assert!(welch_ttest(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn quartile_examples() {
        let q = quartiles(&[7.5]).unwrap();
        assert_eq!([q.min, q.q1, q.median, q.q3, q.max], [7.5; 5]);
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = quartiles(&v).unwrap();
        assert!((q.q1 - 25.75).abs() < 1e-9);
        assert!((q.q3 - 75.25).abs() < 1e-9);
        assert!(quartiles(&[]).is_err());
    }

    proptest! {
        #[test]
        fn ttest_is_symmetric(a in prop::collection::vec(0.0f64..100.0, 2..30), b in prop::collection::vec(0.0f64..100.0, 2..30)) {
            let x = welch_ttest(&a, &b).unwrap();
            let y = welch_ttest(&b, &a).unwrap();
            prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x.p_value));
        }

        #[test]
        fn quartiles_are_ordered(v in prop::collection::vec(-1e3f64..1e3, 1..60)) {
            let q = quartiles(&v).unwrap();
            prop_assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
        }
    }
}
