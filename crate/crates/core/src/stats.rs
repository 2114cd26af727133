//! Sample statistics for fluctuation samples.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add((x - m) * (x - m)));
    s.value() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    libm::sqrt(variance(xs) / xs.len() as f64)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!("sample lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Domain("correlation needs at least two points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for (&a, &b) in x.iter().zip(y) {
        sxy.add((a - mx) * (b - my));
        sxx.add((a - mx) * (a - mx));
        syy.add((b - my) * (b - my));
    }
    let denom = libm::sqrt(sxx.value() * syy.value());
    if denom == 0.0 {
        return Err(Error::Domain("correlation of a constant sample".into()));
    }
    Ok((sxy.value() / denom).clamp(-1.0, 1.0))
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and
/// `N(0, variance)`, taking both one-sided gaps at every sample point.
pub fn ks_statistic(sample: &[f64], variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("reference variance must be positive, got {variance}")));
    }
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("sample contains non-finite values".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let sd = libm::sqrt(variance);
    let r = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal_cdf(x / sd);
        d.max((i as f64 + 1.0) / r - f).max(f - i as f64 / r)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        Self { mean: mean(xs), variance: variance(xs), stderr: stderr(xs) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub moments: Vec<Moments>,
    /// Pearson correlations, `correlation[i][j]`.
    pub correlation: Vec<Vec<f64>>,
}

pub fn summarize(samples: &[&[f64]]) -> Result<Summary> {
    if let Some(first) = samples.first() {
        if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
            return Err(Error::Domain(format!("sample lengths differ: {} vs {}", first.len(), bad.len())));
        }
    }
    let moments = samples.iter().map(|s| Moments::of(s)).collect();
    let mut correlation = alloc::vec![alloc::vec![1.0; samples.len()]; samples.len()];
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let c = pearson(samples[i], samples[j])?;
            correlation[i][j] = c;
            correlation[j][i] = c;
        }
    }
    Ok(Summary { moments, correlation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values() {
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn ks_three_points() {
        let d = ks_statistic(&[1.0, -1.0, 0.0], 1.0).unwrap();
        assert!((d - 0.174_678).abs() < 1e-6, "{d}");
        assert!(ks_statistic(&[1.0], 0.0).is_err());
        assert!(ks_statistic(&[], 1.0).is_err());
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((stderr(&xs) - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn correlations() {
        let x = [1.0, 4.0, 2.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &y).unwrap(), -1.0);
        assert!(pearson(&x, &y[..3]).is_err());
        assert!(pearson(&x, &[1.0; 4]).is_err());
        assert!(summarize(&[&x, &y[..2]]).is_err());
        let s = summarize(&[&x, &y]).unwrap();
        assert_eq!(s.correlation[0][1], -1.0);
    }
}
