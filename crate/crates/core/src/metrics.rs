//! Error and classification metrics, and boxplot-style summaries.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

/// Normalized quadratic error in percent, `100 ||x_hat - x||^2 / ||x||^2`,
/// after mean-centering both vectors.
pub fn nqe(x_hat: &[f64], x_true: &[f64]) -> Result<f64> {
    check_len("x_hat", x_hat.len(), x_true.len())?;
    let n = x_true.len() as f64;
    let mh = x_hat.iter().sum::<f64>() / n;
    let mt = x_true.iter().sum::<f64>() / n;
    let den: f64 = x_true.iter().map(|t| (t - mt).powi(2)).sum();
    if !(den > 0.0) {
        return Err(invalid(
            "x_true",
            "ground truth has zero norm after centering",
        ));
    }
    let num: f64 = x_hat
        .iter()
        .zip(x_true)
        .map(|(h, t)| ((h - mh) - (t - mt)).powi(2))
        .sum();
    Ok(100.0 * num / den)
}

/// Fraction of edges where `pi_e > threshold` disagrees with the true label.
/// A value exactly at the threshold counts as "good".
pub fn misclassification(pi: &[f64], z_true: &[u8], threshold: f64) -> Result<f64> {
    check_len("pi", pi.len(), z_true.len())?;
    if pi.is_empty() {
        return Ok(0.0);
    }
    let wrong = pi
        .iter()
        .zip(z_true)
        .filter(|(&q, &z)| (q > threshold) != (z == 1))
        .count();
    Ok(wrong as f64 / pi.len() as f64)
}

/// Boxplot statistics. Quartiles use linear interpolation between order
/// statistics (position `q (n - 1)`); whiskers reach the most extreme data
/// points within 1.5 IQR of the quartiles, but never stop inside the box;
/// anything beyond the fences is an outlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(invalid("values", "cannot summarize an empty list"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid("values", "NaN in input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q25 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q75 = quantile_sorted(&sorted, 0.75);
    let iqr = q75 - q25;
    let (fence_lo, fence_hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&v| v >= fence_lo && v <= fence_hi)
        .collect();
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < fence_lo || v > fence_hi)
        .collect();
    Ok(Summary {
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median,
        q25,
        q75,
        whisker_low: inside.first().map_or(q25, |&v| v.min(q25)),
        whisker_high: inside.last().map_or(q75, |&v| v.max(q75)),
        outliers,
    })
}

/// One estimator run inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub estimator: String,
    pub nqe_percent: f64,
    pub iterations: usize,
    pub converged: bool,
    pub misclassification: Option<f64>,
    /// Wall-clock time; left out of serialized output so reports stay
    /// byte-reproducible.
    #[serde(default, skip_serializing)]
    pub runtime_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nqe_basics() {
        let x = [0.5, -0.25, -0.25];
        assert_eq!(nqe(&x, &x).unwrap(), 0.0);
        // constant offsets are invisible
        let shifted: Vec<f64> = x.iter().map(|v| v + 3.0).collect();
        assert!(nqe(&shifted, &x).unwrap() < 1e-24);
        assert!(nqe(&x, &[1.0, 1.0, 1.0]).is_err());
        assert!(nqe(&x[..2], &x).is_err());
    }

    #[test]
    fn misclassification_cases() {
        let z = [0u8, 1, 1, 0, 0];
        let exact: Vec<f64> = z.iter().map(|&v| v as f64).collect();
        assert_eq!(misclassification(&exact, &z, 0.5).unwrap(), 0.0);
        let flipped: Vec<f64> = z.iter().map(|&v| 1.0 - v as f64).collect();
        assert_eq!(misclassification(&flipped, &z, 0.5).unwrap(), 1.0);
        assert_eq!(misclassification(&[0.5; 5], &z, 0.5).unwrap(), 0.4);
        assert!(misclassification(&[0.5; 4], &z, 0.5).is_err());
    }

    #[test]
    fn summary_of_small_lists() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.q25, s.median, s.q75), (2.0, 3.0, 4.0));
        assert!(s.outliers.is_empty());

        let s = summarize(&[2.5; 7]).unwrap();
        assert_eq!(
            (
                s.q25,
                s.median,
                s.q75,
                s.mean,
                s.whisker_low,
                s.whisker_high
            ),
            (2.5, 2.5, 2.5, 2.5, 2.5, 2.5)
        );
        assert!(s.outliers.is_empty());

        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_flags_far_point() {
        // q25 = 3.25, q75 = 7.75, IQR = 4.5, upper fence = 14.5
        let mut v: Vec<f64> = (1..=9).map(f64::from).collect();
        v.push(100.0);
        let s = summarize(&v).unwrap();
        assert_eq!((s.q25, s.q75), (3.25, 7.75));
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.whisker_high, 9.0);
        assert_eq!(s.whisker_low, 1.0);
    }
}
