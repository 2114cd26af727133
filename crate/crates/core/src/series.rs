//! Truncated asymptotic series `Σ c · n^α (log n)^ι` with exact rational
//! exponents `α` and `ι ∈ {0, 1}`.
//!
//! Every series carries a cutoff exponent: all terms at or above the cutoff
//! are retained, everything below is dropped. Operations propagate the
//! cutoff so results never claim more precision than their inputs.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::{max, min, Reverse};
use core::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Exponent = Ratio<i64>;

/// The gauge function `n^power`, optionally times `log n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gauge {
    pub power: Exponent,
    pub log: bool,
}

impl Gauge {
    pub const fn power(power: Exponent) -> Self {
        Self { power, log: false }
    }

    /// `log n`.
    pub fn log() -> Self {
        Self { power: Exponent::from_integer(0), log: true }
    }

    pub fn one() -> Self {
        Self::power(Exponent::from_integer(0))
    }

    fn mul(self, other: Self) -> Option<Self> {
        if self.log && other.log {
            return None;
        }
        Some(Self { power: self.power + other.power, log: self.log || other.log })
    }

    pub fn eval(&self, n: f64) -> f64 {
        let p = libm::pow(n, ratio_f64(self.power));
        if self.log {
            p * libm::log(n)
        } else {
            p
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.log, *self.power.numer()) {
            (true, 0) => write!(f, "log n"),
            (false, 0) => write!(f, "1"),
            (log, _) => {
                write!(f, "n^{}", self.power)?;
                if log {
                    write!(f, " log n")?;
                }
                Ok(())
            }
        }
    }
}

pub fn ratio_f64(r: Exponent) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Generalized binomial coefficient `(γ choose m)`.
fn binomial(gamma: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (gamma - i as f64) / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSeries {
    /// Strictly decreasing gauges, nonzero coefficients.
    terms: Vec<(Gauge, f64)>,
    cutoff: Exponent,
    dropped_constant: bool,
}

impl AsymptoticSeries {
    pub fn zero(cutoff: Exponent) -> Self {
        Self { terms: Vec::new(), cutoff, dropped_constant: false }
    }

    pub fn monomial(coeff: f64, gauge: Gauge, cutoff: Exponent) -> Self {
        Self::from_terms([(gauge, coeff)], cutoff)
    }

    /// Builds a normalized series: duplicate gauges merged by addition, zero
    /// coefficients and terms below the cutoff dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (Gauge, f64)>, cutoff: Exponent) -> Self {
        let mut v: Vec<(Gauge, f64)> = terms.into_iter().filter(|(g, _)| g.power >= cutoff).collect();
        v.sort_by_key(|&(g, _)| Reverse(g));
        let mut out: Vec<(Gauge, f64)> = Vec::with_capacity(v.len());
        for (g, c) in v {
            match out.last_mut() {
                Some((lg, lc)) if *lg == g => *lc += c,
                _ => out.push((g, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        Self { terms: out, cutoff, dropped_constant: false }
    }

    pub fn terms(&self) -> &[(Gauge, f64)] {
        &self.terms
    }

    pub fn cutoff(&self) -> Exponent {
        self.cutoff
    }

    /// Whether an `O(1)` contribution was discarded by [`sum_over_j`](Self::sum_over_j).
    pub fn dropped_constant(&self) -> bool {
        self.dropped_constant
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(Gauge, f64)> {
        self.terms.first().copied()
    }

    pub fn coefficient(&self, gauge: Gauge) -> f64 {
        self.terms.iter().find(|(g, _)| *g == gauge).map_or(0.0, |&(_, c)| c)
    }

    pub fn truncate(&self, cutoff: Exponent) -> Self {
        let cutoff = max(cutoff, self.cutoff);
        let mut s = Self::from_terms(self.terms.iter().copied(), cutoff);
        s.dropped_constant = self.dropped_constant;
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let cutoff = max(self.cutoff, other.cutoff);
        let mut s = Self::from_terms(self.terms.iter().chain(&other.terms).copied(), cutoff);
        s.dropped_constant = self.dropped_constant || other.dropped_constant;
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut s = Self::from_terms(self.terms.iter().map(|&(g, x)| (g, c * x)), self.cutoff);
        s.dropped_constant = self.dropped_constant;
        s
    }

    /// Multiply by `n^p`.
    pub fn shift(&self, p: Exponent) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|&(g, c)| (Gauge { power: g.power + p, log: g.log }, c))
                .collect(),
            cutoff: self.cutoff + p,
            dropped_constant: self.dropped_constant,
        }
    }

    /// Product, valid down to `max(cutoff, min(lead(a) + cut(b), lead(b) + cut(a)))`.
    pub fn mul(&self, other: &Self, cutoff: Exponent) -> Result<Self> {
        let lead = |s: &Self| s.leading().map(|(g, _)| g.power);
        let valid = match (lead(self), lead(other)) {
            (Some(a), Some(b)) => min(a + other.cutoff, b + self.cutoff),
            (Some(a), None) => a + other.cutoff,
            (None, Some(b)) => b + self.cutoff,
            (None, None) => self.cutoff + other.cutoff,
        };
        let cutoff = max(cutoff, valid);
        let mut terms = Vec::new();
        for &(ga, ca) in &self.terms {
            for &(gb, cb) in &other.terms {
                if ga.power + gb.power < cutoff {
                    continue;
                }
                let g = ga.mul(gb).ok_or_else(|| {
                    Error::Domain(format!("product of {ga} and {gb} needs a log^2 gauge"))
                })?;
                terms.push((g, ca * cb));
            }
        }
        let mut s = Self::from_terms(terms, cutoff);
        s.dropped_constant = self.dropped_constant || other.dropped_constant;
        Ok(s)
    }

    /// `(1 + x)^γ` by the generalized binomial series, for a series whose
    /// leading term is exactly `1 · n^0` and whose other exponents are
    /// negative. Truncated at the series' own cutoff.
    pub fn pow(&self, gamma: f64) -> Result<Self> {
        match self.leading() {
            Some((g, c)) if g == Gauge::one() && libm::fabs(c - 1.0) <= 1e-12 => {}
            _ => {
                return Err(Error::Domain(format!(
                    "power series expansion needs leading term 1, got {:?}",
                    self.leading()
                )))
            }
        }
        let one = Self::monomial(1.0, Gauge::one(), self.cutoff);
        let x = Self::from_terms(self.terms[1..].iter().copied(), self.cutoff);
        let mut result = one.clone();
        let mut xm = one;
        for m in 1.. {
            xm = xm.mul(&x, self.cutoff)?;
            if xm.is_empty() {
                break;
            }
            result = result.add(&xm.scale(binomial(gamma, m)));
        }
        Ok(result)
    }

    /// Map a series in `j` to the leading behaviour of `Σ_{j<n}` in `n`:
    /// `j^α → n^{α+1}/(α+1)` for `α > −1`, `j^{−1} → log n`,
    /// `j^α log j → n^{α+1} log n/(α+1) − n^{α+1}/(α+1)²` for `α > −1`.
    /// Summable terms only contribute `O(1)` and are dropped; the
    /// `dropped_constant` flag records that.
    pub fn sum_over_j(&self) -> Result<Self> {
        let minus_one = Exponent::from_integer(-1);
        let one = Exponent::from_integer(1);
        let mut terms = Vec::new();
        let mut dropped = self.dropped_constant;
        for &(g, c) in &self.terms {
            let p = g.power + one;
            match (g.log, g.power.cmp(&minus_one)) {
                (false, core::cmp::Ordering::Greater) => terms.push((Gauge::power(p), c / ratio_f64(p))),
                (false, core::cmp::Ordering::Equal) => terms.push((Gauge::log(), c)),
                (true, core::cmp::Ordering::Greater) => {
                    let pf = ratio_f64(p);
                    terms.push((Gauge { power: p, log: true }, c / pf));
                    terms.push((Gauge::power(p), -c / (pf * pf)));
                }
                (true, core::cmp::Ordering::Equal) => {
                    return Err(Error::Domain("summing log j / j needs a log^2 gauge".into()))
                }
                (_, core::cmp::Ordering::Less) => dropped = true,
            }
        }
        let mut s = Self::from_terms(terms, self.cutoff + one);
        s.dropped_constant = dropped;
        Ok(s)
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.terms.iter().map(|&(g, c)| c * g.eval(n)).sum()
    }
}

impl fmt::Display for AsymptoticSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (g, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{g}")?;
        }
        write!(f, " + o(n^{})", self.cutoff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Exponent {
        Exponent::new(p, d)
    }

    fn pw(p: i64, d: i64) -> Gauge {
        Gauge::power(q(p, d))
    }

    #[test]
    fn normalizes_terms() {
        let s = AsymptoticSeries::from_terms(
            [(pw(-1, 2), 2.0), (pw(0, 1), 1.0), (pw(-1, 2), 3.0), (pw(-3, 1), 9.0), (pw(1, 4), 0.0)],
            q(-1, 1),
        );
        assert_eq!(s.terms(), &[(pw(0, 1), 1.0), (pw(-1, 2), 5.0)]);
    }

    #[test]
    fn power_of_one_is_one() {
        let one = AsymptoticSeries::monomial(1.0, Gauge::one(), q(-2, 1));
        assert_eq!(one.pow(1.25).unwrap(), one);
    }

    #[test]
    fn binomial_expansion() {
        let c = 0.7;
        let u = AsymptoticSeries::from_terms([(Gauge::one(), 1.0), (pw(-1, 4), c)], q(-1, 2));
        let p = u.pow(1.25).unwrap();
        assert_eq!(p.terms().len(), 3);
        assert!((p.coefficient(pw(-1, 4)) - 1.25 * c).abs() < 1e-15);
        assert!((p.coefficient(pw(-1, 2)) - 5.0 / 32.0 * c * c).abs() < 1e-15);
    }

    #[test]
    fn pow_requires_unit_leading_term() {
        let s = AsymptoticSeries::from_terms([(Gauge::one(), 2.0)], q(-1, 1));
        assert!(s.pow(2.0).is_err());
        let s = AsymptoticSeries::from_terms([(pw(1, 2), 1.0)], q(-1, 1));
        assert!(s.pow(2.0).is_err());
    }

    #[test]
    fn pow_round_trip() {
        let cut = q(-3, 1);
        let u = AsymptoticSeries::from_terms(
            [(Gauge::one(), 1.0), (pw(-1, 4), -1.3), (pw(-1, 2), 0.4), (pw(-5, 4), 2.2)],
            cut,
        );
        let back = u.pow(1.25).unwrap().pow(0.8).unwrap();
        let diff = back.sub(&u);
        assert!(diff.terms().iter().all(|&(_, c)| c.abs() < 1e-9), "{diff}");
    }

    #[test]
    fn summation_rules() {
        let s = AsymptoticSeries::from_terms(
            [(Gauge::one(), 2.0), (pw(-1, 4), 1.0), (pw(-1, 1), 3.0), (pw(-5, 4), 1.0)],
            q(-2, 1),
        );
        let t = s.sum_over_j().unwrap();
        assert_eq!(t.coefficient(pw(1, 1)), 2.0);
        assert!((t.coefficient(pw(3, 4)) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.coefficient(Gauge::log()), 3.0);
        assert!(t.dropped_constant());
        assert_eq!(t.cutoff(), q(-1, 1));
    }

    #[test]
    fn log_products_are_rejected() {
        let l = AsymptoticSeries::monomial(1.0, Gauge::log(), q(-1, 1));
        assert!(l.mul(&l, q(-1, 1)).is_err());
        let lj = AsymptoticSeries::monomial(1.0, Gauge { power: q(-1, 1), log: true }, q(-2, 1));
        assert!(lj.sum_over_j().is_err());
    }

    #[test]
    fn product_respects_accuracy() {
        // (n + o(n^0)) · (1 + n^{-1/2} + o(n^{-1})) is only known to o(n^0).
        let a = AsymptoticSeries::monomial(1.0, pw(1, 1), q(0, 1));
        let b = AsymptoticSeries::from_terms([(Gauge::one(), 1.0), (pw(-1, 2), 1.0)], q(-1, 1));
        let p = a.mul(&b, q(-5, 1)).unwrap();
        assert_eq!(p.cutoff(), q(0, 1));
        assert_eq!(p.terms(), &[(pw(1, 1), 1.0), (pw(1, 2), 1.0)]);
    }

    #[test]
    fn evaluation() {
        let s = AsymptoticSeries::from_terms([(pw(1, 2), 2.0), (Gauge::log(), 1.0)], q(-1, 1));
        let n = 100.0;
        assert!((s.eval(n) - (20.0 + libm::log(100.0))).abs() < 1e-12);
    }
}
