//! Exact law of the degree histogram for small `n`, by exhaustive
//! propagation of the attachment chain. Shares no code with the engine.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gamma::WeightExponent;

/// Largest `n` the oracle accepts.
pub const ORACLE_MAX_N: u64 = 7;

/// A degree histogram as `(degree, count)` pairs, ascending, counts > 0.
pub type Histogram = Vec<(u64, u64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDistribution {
    pub gamma: WeightExponent,
    pub n: u64,
    pub outcomes: BTreeMap<Histogram, f64>,
}

fn step(h: &Histogram, gamma: f64) -> Vec<(Histogram, f64)> {
    let w = |d: u64| libm::pow(d as f64, gamma);
    let total: f64 = h.iter().map(|&(d, c)| w(d) * c as f64).sum();
    h.iter()
        .map(|&(d, c)| {
            let mut counts: BTreeMap<u64, u64> = h.iter().copied().collect();
            *counts.get_mut(&d).unwrap() -= 1;
            *counts.entry(d + 1).or_default() += 1;
            *counts.entry(1).or_default() += 1;
            let next = counts.into_iter().filter(|&(_, c)| c > 0).collect();
            (next, w(d) * c as f64 / total)
        })
        .collect()
}

impl OracleDistribution {
    pub fn new(gamma: WeightExponent, n: u64) -> Result<Self> {
        if n == 0 || n > ORACLE_MAX_N {
            return Err(Error::Domain(format!("exact oracle supports 1 ≤ n ≤ {ORACLE_MAX_N}, got {n}")));
        }
        let mut outcomes = BTreeMap::new();
        outcomes.insert(alloc::vec![(1, 2)], 1.0);
        for _ in 1..n {
            let mut next: BTreeMap<Histogram, f64> = BTreeMap::new();
            for (h, p) in &outcomes {
                for (h2, q) in step(h, gamma.value()) {
                    *next.entry(h2).or_default() += p * q;
                }
            }
            outcomes = next;
        }
        Ok(Self { gamma, n, outcomes })
    }

    pub fn probability(&self, h: &[(u64, u64)]) -> f64 {
        self.outcomes.get(h).copied().unwrap_or(0.0)
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.values().sum()
    }

    pub fn expected_count(&self, k: u64) -> f64 {
        self.outcomes
            .iter()
            .map(|(h, p)| p * h.iter().find(|&&(d, _)| d == k).map_or(0.0, |&(_, c)| c as f64))
            .sum()
    }

    pub fn expected_total_weight(&self) -> f64 {
        let g = self.gamma.value();
        self.outcomes
            .iter()
            .map(|(h, p)| p * h.iter().map(|&(d, c)| libm::pow(d as f64, g) * c as f64).sum::<f64>())
            .sum()
    }

    /// Law of the maximum degree.
    pub fn max_degree_distribution(&self) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (h, p) in &self.outcomes {
            *out.entry(h.last().map_or(0, |&(d, _)| d)).or_default() += p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> WeightExponent {
        s.parse().unwrap()
    }

    #[test]
    fn second_step_is_forced() {
        for s in ["1/2", "5/4", "3"] {
            let o = OracleDistribution::new(g(s), 2).unwrap();
            assert_eq!(o.outcomes.len(), 1);
            assert_eq!(o.probability(&[(1, 2), (2, 1)]), 1.0);
        }
    }

    #[test]
    fn third_step_at_five_quarters() {
        let o = OracleDistribution::new(g("5/4"), 3).unwrap();
        let p = 2f64.powf(1.25) / (2f64.powf(1.25) + 2.0);
        assert!((o.expected_count(1) - (2.0 + p)).abs() < 1e-15);
        let v = o.max_degree_distribution();
        assert!((v[&3] - p).abs() < 1e-15);
        assert!((v[&2] - (1.0 - p)).abs() < 1e-15);
        assert!((o.expected_count(1) - 2.543215).abs() < 2e-6);
    }

    #[test]
    fn laws_are_normalized_and_conserve() {
        for s in ["0", "1/2", "1", "5/4", "2", "3", "8"] {
            for n in 1..=ORACLE_MAX_N {
                let o = OracleDistribution::new(g(s), n).unwrap();
                assert!((o.total_probability() - 1.0).abs() < 1e-12);
                for h in o.outcomes.keys() {
                    assert_eq!(h.iter().map(|&(_, c)| c).sum::<u64>(), n + 1);
                    assert_eq!(h.iter().map(|&(d, c)| d * c).sum::<u64>(), 2 * n);
                }
                let e: f64 = (1..=n + 1).map(|k| o.expected_count(k)).sum();
                assert!((e - (n + 1) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(OracleDistribution::new(g("5/4"), 8).is_err());
        assert!(OracleDistribution::new(g("5/4"), 0).is_err());
    }

    #[test]
    fn uniform_attachment_at_three() {
        // γ = 0: the third vertex joins either old leaf (deg 1) or the
        // centre (deg 2) with chance 1/3 each.
        let o = OracleDistribution::new(g("0"), 3).unwrap();
        assert!((o.probability(&[(1, 3), (3, 1)]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((o.probability(&[(1, 2), (2, 2)]) - 2.0 / 3.0).abs() < 1e-15);
    }
}
