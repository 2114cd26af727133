//! The attachment exponent `γ` in `w(d) = d^γ`.

use alloc::format;
use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Largest exponent accepted anywhere: `k^γ ≤ n^8` stays well inside the
/// double range for `n ≤ 10^7`.
pub const GAMMA_MAX: f64 = 8.0;

/// Attachment exponent, kept as an exact rational whenever the input was one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightExponent {
    rational: Option<Ratio<i64>>,
    value: f64,
}

impl WeightExponent {
    pub fn rational(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::ParseExponent(format!("{numer}/{denom}")));
        }
        let r = Ratio::new(numer, denom);
        let value = *r.numer() as f64 / *r.denom() as f64;
        Self::checked(Some(r), value)
    }

    /// A float-only exponent. Usable for simulation; the coefficient engine
    /// rejects it because regime boundaries must be decided exactly.
    pub fn from_f64(value: f64) -> Result<Self> {
        Self::checked(None, value)
    }

    fn checked(rational: Option<Ratio<i64>>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Config(format!("exponent {value} is not finite")));
        }
        if value > GAMMA_MAX {
            return Err(Error::Config(format!(
                "exponent {value} exceeds the supported maximum {GAMMA_MAX}"
            )));
        }
        Ok(Self { rational, value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_ratio(&self) -> Option<Ratio<i64>> {
        self.rational
    }

    pub fn is_superlinear(&self) -> bool {
        self.value > 1.0
    }

    /// `w(k) = k^γ`.
    pub fn weight(&self, k: u64) -> f64 {
        libm::pow(k as f64, self.value)
    }
}

impl fmt::Display for WeightExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rational {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for WeightExponent {
    type Err = Error;

    /// Accepts `p/q`, a plain integer, or a decimal (float-only).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::ParseExponent(s.to_string());
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Self::rational(p, q);
        }
        if let Ok(p) = s.parse::<i64>() {
            return Self::rational(p, 1);
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Self::from_f64(v)
    }
}
