//! Theoretical constants for the degree counts: regime data, the
//! law-of-large-numbers coefficients `a_k`, `b_k`, the drift coefficients
//! `c^k_ℓ` obtained by formal series matching, and the limit laws for the
//! linear and sublinear cases.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::gamma::WeightExponent;
use crate::series::{ratio_f64, AsymptoticSeries, Exponent, Gauge};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `k < γ/(γ−1)`: polynomial growth.
    Below,
    /// `k = γ/(γ−1)`: logarithmic growth.
    AtCritical,
    /// `k > γ/(γ−1)`: bounded.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeInfo {
    gamma: Exponent,
    critical: Exponent,
}

impl RegimeInfo {
    /// Requires an exact rational `γ > 1`.
    pub fn new(gamma: &WeightExponent) -> Result<Self> {
        let g = gamma.as_ratio().ok_or_else(|| {
            Error::Domain(format!("regime data needs a rational exponent, got {gamma}"))
        })?;
        if g <= Exponent::from_integer(1) {
            return Err(Error::Domain(format!("regimes are defined for γ > 1, got {gamma}")));
        }
        Ok(Self { gamma: g, critical: g / (g - 1) })
    }

    pub fn gamma(&self) -> Exponent {
        self.gamma
    }

    /// `γ/(γ−1)`.
    pub fn critical(&self) -> Exponent {
        self.critical
    }

    /// `A = ⌊γ/(γ−1)⌋`.
    pub fn a(&self) -> usize {
        self.critical.floor().to_integer() as usize
    }

    pub fn critical_is_integer(&self) -> bool {
        self.critical.is_integer()
    }

    pub fn classify(&self, k: usize) -> Regime {
        let k = Exponent::from_integer(k as i64);
        match k.cmp(&self.critical) {
            core::cmp::Ordering::Less => Regime::Below,
            core::cmp::Ordering::Equal => Regime::AtCritical,
            core::cmp::Ordering::Greater => Regime::Above,
        }
    }

    /// Largest index below the critical one.
    pub fn last_below(&self) -> usize {
        if self.critical_is_integer() {
            self.a() - 1
        } else {
            self.a()
        }
    }

    /// `k* = ⌊γ/(2(γ−1)) + k/2⌋`.
    pub fn kstar(&self, k: usize) -> usize {
        ((self.critical + Exponent::from_integer(k as i64)) / 2).floor().to_integer() as usize
    }

    /// `2* = ⌊γ/(2(γ−1))⌋ + 1`.
    pub fn two_star(&self) -> usize {
        (self.critical / 2).floor().to_integer() as usize + 1
    }

    /// Growth exponent `ℓ − (ℓ−1)γ` of the `ℓ`-th gauge.
    pub fn gauge_exponent(&self, l: usize) -> Exponent {
        let l = Exponent::from_integer(l as i64);
        l - (l - 1) * self.gamma
    }
}

fn below_critical(gamma: &WeightExponent, k: usize) -> Result<bool> {
    if !gamma.is_superlinear() {
        return Err(Error::Domain(format!("a_k is defined for γ > 1, got {gamma}")));
    }
    Ok(match gamma.as_ratio() {
        Some(g) => Ratio::from_integer(k as i64) * (g - 1) < g,
        None => k as f64 * (gamma.value() - 1.0) < gamma.value(),
    })
}

/// `a_k = ∏_{j=2}^k w(j−1)/(j − (j−1)γ)` for `k < γ/(γ−1)`.
pub fn compute_a(gamma: &WeightExponent, k: usize) -> Result<f64> {
    if k == 0 || !below_critical(gamma, k)? {
        return Err(Error::Domain(format!("a_{k} needs 1 ≤ k < γ/(γ−1) at γ = {gamma}")));
    }
    let g = gamma.value();
    Ok((2..=k).fold(1.0, |acc, j| {
        acc * gamma.weight(j as u64 - 1) / (j as f64 - (j as f64 - 1.0) * g)
    }))
}

/// `b_k = w(k−1) a_{k−1}` at the integer critical index `k = γ/(γ−1)`.
pub fn compute_b(gamma: &WeightExponent) -> Result<f64> {
    let info = RegimeInfo::new(gamma)?;
    if !info.critical_is_integer() {
        return Err(Error::Domain(format!("γ/(γ−1) is not an integer at γ = {gamma}")));
    }
    let k = info.a();
    Ok(gamma.weight(k as u64 - 1) * compute_a(gamma, k - 1)?)
}

pub fn classify(gamma: &WeightExponent, k: usize) -> Result<Regime> {
    Ok(RegimeInfo::new(gamma)?.classify(k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub gamma: WeightExponent,
    pub regime: RegimeInfo,
    /// `a_1, a_2, …` for every `k` below the critical index.
    pub a: Vec<f64>,
    /// Coefficient of `log n` in the critical count.
    pub b_critical: Option<f64>,
    /// `(k, ℓ) → c^k_ℓ` for `2 ≤ k < γ/(γ−1)`, `k ≤ ℓ ≤ k*`.
    pub c: BTreeMap<(usize, usize), f64>,
    /// `ℓ → c¹_ℓ` for `2 ≤ ℓ ≤ 2*`, empty at `γ = 2`.
    pub c1: BTreeMap<usize, f64>,
    /// `ℓ → m_ℓ` for `2 ≤ ℓ ≤ 2*`, empty at `γ = 2`.
    pub m: BTreeMap<usize, f64>,
}

impl CoefficientTable {
    pub fn c(&self, k: usize, l: usize) -> Option<f64> {
        self.c.get(&(k, l)).copied()
    }

    pub fn a(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.a.get(i)).copied()
    }

    /// Limiting variance of the standardized count: `a_k` below the
    /// critical index, `b_k` at it, `None` above.
    pub fn clt_variance(&self, k: usize) -> Option<f64> {
        match self.regime.classify(k) {
            Regime::Below if k >= 2 => self.a(k),
            Regime::AtCritical => self.b_critical,
            _ => None,
        }
    }

    /// Deterministic approximation of `Z_k(j)` from the table; `Z_1` is
    /// closed by conservation.
    pub fn y(&self, k: usize, j: f64) -> f64 {
        if k == 1 {
            return j - (2..=self.regime.a()).map(|m| self.y(m, j)).sum::<f64>();
        }
        match self.regime.classify(k) {
            Regime::Below => self
                .c
                .range((k, 0)..=(k, usize::MAX))
                .map(|(&(_, l), &c)| c * libm::pow(j, ratio_f64(self.regime.gauge_exponent(l))))
                .sum(),
            Regime::AtCritical => self.b_critical.unwrap_or(0.0) * libm::log(j),
            Regime::Above => 0.0,
        }
    }
}

struct Solver<'a> {
    gamma: &'a WeightExponent,
    info: RegimeInfo,
    c: BTreeMap<(usize, usize), f64>,
    b: Option<f64>,
}

impl Solver<'_> {
    fn y_series(&self, k: usize, cutoff: Exponent) -> AsymptoticSeries {
        if self.info.classify(k) == Regime::AtCritical {
            return match self.b {
                Some(b) => AsymptoticSeries::monomial(b, Gauge::log(), cutoff),
                None => AsymptoticSeries::zero(cutoff),
            };
        }
        AsymptoticSeries::from_terms(
            self.c
                .range((k, 0)..=(k, usize::MAX))
                .map(|(&(_, l), &c)| (Gauge::power(self.info.gauge_exponent(l)), c)),
            cutoff,
        )
    }

    /// Coefficient of `n^{e(k+ℓ)}` (or `log n` at the critical index) on
    /// the right of `Y_k(n) = Σ_{j<n} (w(k−1)Y_{k−1}(j) − w(k)Y_k(j)) / T(j)`.
    fn solve(&self, k: usize, l: usize) -> Result<f64> {
        let g = self.info.gamma();
        let gf = self.gamma.value();
        let critical = self.info.classify(k) == Regime::AtCritical;
        let t = if critical { Exponent::from_integer(0) } else { self.info.gauge_exponent(k + l) };
        let one = Exponent::from_integer(1);
        let sc = t - one;
        let lead_n = self.info.gauge_exponent(k - 1);
        let ru = sc + g - lead_n;
        let top = self.info.a();

        let ys: Vec<AsymptoticSeries> = (2..=top).map(|m| self.y_series(m, ru)).collect();
        let y = |m: usize| &ys[m - 2];

        let unit = AsymptoticSeries::monomial(1.0, Gauge::one(), ru);
        let mut inner = unit.clone();
        let mut linear = AsymptoticSeries::monomial(1.0, Gauge::power(one), ru + g);
        for m in 2..=top {
            inner = inner.sub(&y(m).shift(-one).scale((m - 1) as f64));
            linear = linear.add(&y(m).scale(self.gamma.weight(m as u64) - 1.0));
        }
        let u = inner.truncate(ru).pow(gf)?.add(&linear.shift(-g).truncate(ru));
        let u_inv = u.pow(-1.0)?;

        let nc = sc + g;
        let numer = if k == 2 {
            let mut s = AsymptoticSeries::monomial(1.0, Gauge::power(one), nc);
            for m in 2..=top {
                s = s.sub(y(m));
            }
            s.sub(&y(2).scale(self.gamma.weight(2)))
        } else {
            let below = y(k - 1).scale(self.gamma.weight(k as u64 - 1));
            let here = if k <= top { y(k).scale(self.gamma.weight(k as u64)) } else { AsymptoticSeries::zero(nc) };
            below.sub(&here)
        }
        .truncate(nc);

        let summand = numer.mul(&u_inv, nc)?.shift(-g).truncate(sc);
        let total = summand.sum_over_j()?;
        Ok(if critical { total.coefficient(Gauge::log()) } else { total.coefficient(Gauge::power(t)) })
    }
}

/// Regime data with `a_k` and `b_k` only, for any rational `γ > 1`.
pub fn leading_coefficients(gamma: &WeightExponent) -> Result<CoefficientTable> {
    let regime = RegimeInfo::new(gamma)?;
    let a = (1..=regime.last_below()).map(|k| compute_a(gamma, k)).collect::<Result<Vec<_>>>()?;
    let b_critical = if regime.critical_is_integer() { Some(compute_b(gamma)?) } else { None };
    Ok(CoefficientTable {
        gamma: *gamma,
        regime,
        a,
        b_critical,
        c: BTreeMap::new(),
        c1: BTreeMap::new(),
        m: BTreeMap::new(),
    })
}

/// Solves for every drift coefficient by matching powers of `n`, diagonal
/// by diagonal: `ℓ = 0, 1, …` outer, `k = 2..A` inner, while `k + ℓ ≤ k*`.
/// Requires an exact rational `1 < γ ≤ 2`.
pub fn solve_coefficients(gamma: &WeightExponent) -> Result<CoefficientTable> {
    let info = RegimeInfo::new(gamma)?;
    if info.gamma() > Exponent::from_integer(2) {
        return Err(Error::Domain(format!("drift expansion needs γ ≤ 2, got {gamma}")));
    }
    let mut s = Solver { gamma, info, c: BTreeMap::new(), b: None };
    let top = info.a();
    for l in 0.. {
        let mut any = false;
        for k in 2..=top {
            if k + l > info.kstar(k) {
                continue;
            }
            any = true;
            let v = s.solve(k, l)?;
            if !v.is_finite() {
                return Err(Error::NumericRange(format!("c^{k}_{} is not finite", k + l)));
            }
            if info.classify(k) == Regime::AtCritical {
                s.b = Some(v);
            } else {
                s.c.insert((k, k + l), v);
            }
        }
        if !any {
            break;
        }
    }

    let a = (1..=info.last_below()).map(|k| compute_a(gamma, k)).collect::<Result<Vec<_>>>()?;
    let mut c1 = BTreeMap::new();
    let mut m = BTreeMap::new();
    if info.critical() > Exponent::from_integer(2) {
        let two_star = info.two_star();
        for l in 2..=two_star {
            let (mut x, mut y) = (0.0, 0.0);
            for k in 2..=l.min(two_star) {
                let c = s.c[&(k, l)];
                x += c;
                y += (k - 1) as f64 * c;
            }
            c1.insert(l, x);
            m.insert(l, y);
        }
    }
    Ok(CoefficientTable { gamma: *gamma, regime: info, a, b_critical: s.b, c: s.c, c1, m })
}

/// Counts with a central limit theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Z(usize),
    Z1MinusN,
    MinusZ2,
    VMinusN,
}

impl core::fmt::Display for Target {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Target::Z(k) => write!(f, "Z_{k}"),
            Target::Z1MinusN => write!(f, "Z_1-n"),
            Target::MinusZ2 => write!(f, "-Z_2"),
            Target::VMinusN => write!(f, "V-n"),
        }
    }
}

/// Fluctuation scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Power(Exponent),
    SqrtLog,
}

impl Scale {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Scale::Power(p) => libm::pow(n, ratio_f64(*p)),
            Scale::SqrtLog => libm::sqrt(libm::log(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    pub target: Target,
    pub drift: AsymptoticSeries,
    pub scale: Scale,
    pub variance: f64,
}

impl DriftModel {
    pub fn standardize(&self, value: f64, n: f64) -> f64 {
        (value - self.drift.eval(n)) / self.scale.eval(n)
    }
}

/// The deterministic centring of a target, its fluctuation scale and the
/// limiting variance.
pub fn drift_polynomial(table: &CoefficientTable, target: Target) -> Result<DriftModel> {
    let info = &table.regime;
    let zero = Exponent::from_integer(0);
    let power = |l: usize| Gauge::power(info.gauge_exponent(l));
    match target {
        Target::Z(k) if k >= 2 => match info.classify(k) {
            Regime::Below => {
                if table.c(k, k).is_none() {
                    return Err(Error::Domain(format!("drift coefficients of Z_{k} were not solved")));
                }
                let drift = AsymptoticSeries::from_terms(
                    table.c.range((k, 0)..=(k, usize::MAX)).map(|(&(_, l), &c)| (power(l), c)),
                    zero,
                );
                Ok(DriftModel {
                    target,
                    drift,
                    scale: Scale::Power(info.gauge_exponent(k) / 2),
                    variance: table.a(k).unwrap_or(f64::NAN),
                })
            }
            Regime::AtCritical => {
                let b = table.b_critical.ok_or_else(|| Error::Domain("missing b_k".into()))?;
                Ok(DriftModel {
                    target,
                    drift: AsymptoticSeries::monomial(b, Gauge::log(), zero),
                    scale: Scale::SqrtLog,
                    variance: b,
                })
            }
            Regime::Above => Err(Error::Domain(format!("Z_{k} is bounded at γ = {}", table.gamma))),
        },
        Target::Z(k) => Err(Error::Domain(format!("no drift for Z_{k}; use Z_1 − n"))),
        Target::Z1MinusN | Target::MinusZ2 | Target::VMinusN => {
            if info.critical() == Exponent::from_integer(2) {
                let b = table.b_critical.ok_or_else(|| Error::Domain("missing b_2".into()))?;
                return Ok(DriftModel {
                    target,
                    drift: AsymptoticSeries::monomial(-b, Gauge::log(), zero),
                    scale: Scale::SqrtLog,
                    variance: b,
                });
            }
            if table.c1.is_empty() {
                return Err(Error::Domain(format!("no joint expansion for {target} at γ = {}", table.gamma)));
            }
            let coeffs = match target {
                Target::Z1MinusN => table.c1.clone(),
                Target::VMinusN => table.m.clone(),
                _ => (2..=info.two_star()).map(|l| (l, table.c[&(2, l)])).collect(),
            };
            Ok(DriftModel {
                target,
                drift: AsymptoticSeries::from_terms(coeffs.iter().map(|(&l, &c)| (power(l), -c)), zero),
                scale: Scale::Power(info.gauge_exponent(2) / 2),
                variance: table.a(2).unwrap_or(f64::NAN),
            })
        }
    }
}

/// Dyadic increments of the mismatch in the drift equations,
/// `[Y_k(2n) − Y_k(n)] − Σ_{j=n}^{2n−1} (w(k−1)Y_{k−1}(j) − w(k)Y_k(j)) / T(j)`
/// for `k = 2..=A`, with every `Y` taken from the table. Taking increments
/// cancels the `O(1)` constant the table does not carry.
pub fn drift_residual_increments(table: &CoefficientTable, n: u64) -> Result<Vec<f64>> {
    let gamma = &table.gamma;
    let top = table.regime.a();
    let rows: Vec<Vec<(f64, f64)>> = (2..=top)
        .map(|k| {
            table
                .c
                .range((k, 0)..=(k, usize::MAX))
                .map(|(&(_, l), &c)| (c, ratio_f64(table.regime.gauge_exponent(l))))
                .collect()
        })
        .collect();
    let b = table.b_critical.unwrap_or(0.0);
    let critical = table.regime.critical_is_integer();
    let w: Vec<f64> = (0..=top).map(|m| gamma.weight(m as u64)).collect();
    // ys[0] = Y_1, ys[m−1] = Y_m.
    let fill = |jf: f64, ys: &mut [f64]| {
        let lj = libm::log(jf);
        for (i, row) in rows.iter().enumerate() {
            ys[i + 1] = row.iter().map(|&(c, e)| c * libm::exp(e * lj)).sum();
        }
        if critical {
            ys[top - 1] = b * lj;
        }
        ys[0] = jf - ys[1..].iter().sum::<f64>();
    };
    let mut ys = alloc::vec![0.0; top];
    let mut acc: Vec<CompensatedSum> = alloc::vec![CompensatedSum::default(); top - 1];
    for j in n..2 * n {
        let jf = j as f64;
        fill(jf, &mut ys);
        let base = jf - (2..=top).map(|m| (m - 1) as f64 * ys[m - 1]).sum::<f64>();
        if base <= 0.0 {
            return Err(Error::Domain(format!("table gives V(j) ≤ 0 at j = {j}")));
        }
        let t = libm::pow(base, gamma.value()) + (1..=top).map(|m| w[m] * ys[m - 1]).sum::<f64>();
        for k in 2..=top {
            acc[k - 2].add((w[k - 1] * ys[k - 2] - w[k] * ys[k - 1]) / t);
        }
    }
    let nf = n as f64;
    let mut lo = alloc::vec![0.0; top];
    let mut hi = alloc::vec![0.0; top];
    fill(nf, &mut lo);
    fill(2.0 * nf, &mut hi);
    Ok((2..=top).map(|k| hi[k - 1] - lo[k - 1] - acc[k - 2].value()).collect())
}

/// Limit `q(k)` of `Z_k(n)/n` for `0 ≤ γ < 1`: returns `(s̄, [q(1), q(2), …])`
/// where `s̄` solves `1 = Σ_k ∏_{j≤k} j^γ/(s̄ + j^γ)`.
pub fn sublinear_q(gamma: f64) -> Result<(f64, Vec<f64>)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("sublinear law needs 0 ≤ γ < 1, got {gamma}")));
    }
    const K_MAX: usize = 10_000_000;
    // Σ_k P_k(s) − 1 with P_k = ∏_{j≤k} j^γ/(s + j^γ), and the truncation used.
    let excess = |s: f64| -> Result<(f64, usize)> {
        let mut p = 1.0;
        let mut acc = CompensatedSum::default();
        for k in 1..=K_MAX {
            let w = libm::pow(k as f64, gamma);
            p *= w / (s + w);
            acc.add(p);
            if p * (k as f64) < 1e-16 {
                return Ok((acc.value() - 1.0, k));
            }
        }
        Err(Error::NumericRange(format!("tail of the sublinear series at s = {s} did not converge")))
    };
    // The sum is at least 1 at s = 1 for every γ ≥ 0.
    let mut lo = 1.0;
    let mut hi = 2.0;
    while excess(hi)?.0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NumericRange("no bracket for s̄".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)?.0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let (_, k_max) = excess(s)?;
    let mut q = Vec::with_capacity(k_max);
    let mut p = 1.0;
    for k in 1..=k_max {
        let w = libm::pow(k as f64, gamma);
        p *= w / (s + w);
        q.push(s / w * p);
    }
    Ok((s, q))
}

/// `4/(k(k+1)(k+2))`, the limit of `Z_k(n)/n` at `γ = 1`.
pub fn linear_limit(k: u64) -> f64 {
    let k = k as f64;
    4.0 / (k * (k + 1.0) * (k + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: i64, q: i64) -> WeightExponent {
        WeightExponent::rational(p, q).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn a_coefficients() {
        let gm = g(5, 4);
        assert_eq!(compute_a(&gm, 1).unwrap(), 1.0);
        assert!(close(compute_a(&gm, 2).unwrap(), 4.0 / 3.0, 1e-14));
        assert!(close(compute_a(&gm, 3).unwrap(), 6.342438, 1e-6));
        assert!(compute_a(&gm, 5).is_err());
        assert!(compute_a(&gm, 6).is_err());
        assert!(compute_a(&g(1, 1), 2).is_err());
    }

    #[test]
    fn b_coefficients() {
        assert!(close(compute_b(&g(5, 4)).unwrap(), 566.621, 1e-6));
        assert_eq!(compute_b(&g(2, 1)).unwrap(), 1.0);
        assert!(close(compute_b(&g(3, 2)).unwrap(), 5.656854, 1e-6));
        assert!(compute_b(&g(7, 5)).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(classify(&g(5, 4), 3).unwrap(), Regime::Below);
        assert_eq!(classify(&g(5, 4), 5).unwrap(), Regime::AtCritical);
        assert_eq!(classify(&g(3, 1), 2).unwrap(), Regime::Above);
        let info = RegimeInfo::new(&g(5, 4)).unwrap();
        assert_eq!(info.a(), 5);
        assert!(info.critical_is_integer());
        assert_eq!((2..=5).map(|k| info.kstar(k)).collect::<Vec<_>>(), [3, 4, 4, 5]);
        assert_eq!(info.two_star(), 3);
        assert!(RegimeInfo::new(&WeightExponent::from_f64(1.3).unwrap()).is_err());
    }

    #[test]
    fn sublinear_geometric_case() {
        let (s, q) = sublinear_q(0.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((q[0] - 0.5).abs() < 1e-12);
        assert!((q[4] - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn linear_law() {
        assert!((linear_limit(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((linear_limit(2) - 1.0 / 6.0).abs() < 1e-15);
    }
}
