//! Online tracking of the degree-count martingales.
//!
//! For each tracked degree `k` the tracker accumulates the martingale parts
//! `M_k` (of `Z_k`), `Q_k` (of `Φ_k`, `k ≥ 2`) and `R` (of `V`), their
//! predictable quadratic variations, and the compensators `Σ E[· | F_j]`
//! so the Doob decompositions can be checked against the graph at any time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::GraphState;
use crate::error::{Error, Result};
use crate::gamma::WeightExponent;
use crate::sum::CompensatedSum;

/// `A + 2` with `A = ⌊γ/(γ−1)⌋` above the linear case; 8 otherwise.
pub fn default_k_track(gamma: &WeightExponent) -> usize {
    if !gamma.is_superlinear() {
        return 8;
    }
    let a = match gamma.as_ratio() {
        Some(g) => (g / (g - 1)).floor().to_integer() as usize,
        None => libm::floor(gamma.value() / (gamma.value() - 1.0)) as usize,
    };
    a + 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MartingaleId {
    /// `M_k`, `k ≥ 1`.
    M(usize),
    /// `Q_k`, `k ≥ 2`.
    Q(usize),
    R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSnapshot {
    pub n: u64,
    /// `M_1 … M_K`.
    pub m: Vec<f64>,
    pub qv_m: Vec<f64>,
    /// `Q_2 … Q_K`.
    pub q: Vec<f64>,
    pub qv_q: Vec<f64>,
    pub r: f64,
    pub qv_r: f64,
}

impl MartingaleSnapshot {
    pub fn k_track(&self) -> usize {
        self.m.len()
    }

    /// `(X(n), ⟨X⟩(n))`, or `None` when `X` is not tracked.
    pub fn get(&self, id: MartingaleId) -> Option<(f64, f64)> {
        match id {
            MartingaleId::M(k) if k >= 1 => Some((*self.m.get(k - 1)?, self.qv_m[k - 1])),
            MartingaleId::Q(k) if k >= 2 => Some((*self.q.get(k - 2)?, self.qv_q[k - 2])),
            MartingaleId::R => Some((self.r, self.qv_r)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MartingaleState {
    n: u64,
    weights: Vec<f64>,
    counts: Vec<u64>,
    m: Vec<CompensatedSum>,
    qv_m: Vec<CompensatedSum>,
    drift_m: Vec<CompensatedSum>,
    q: Vec<CompensatedSum>,
    qv_q: Vec<CompensatedSum>,
    drift_q: Vec<CompensatedSum>,
    r: CompensatedSum,
    qv_r: CompensatedSum,
    drift_r: CompensatedSum,
}

impl MartingaleState {
    /// Tracker at `n = 1`, all martingales zero.
    pub fn new(gamma: &WeightExponent, k_track: usize) -> Self {
        let k_track = k_track.max(2);
        let zeros = || vec![CompensatedSum::default(); k_track];
        Self {
            n: 1,
            weights: (0..=k_track as u64).map(|k| gamma.weight(k)).collect(),
            counts: vec![0; k_track + 1],
            m: zeros(),
            qv_m: zeros(),
            drift_m: zeros(),
            q: vec![CompensatedSum::default(); k_track - 1],
            qv_q: vec![CompensatedSum::default(); k_track - 1],
            drift_q: vec![CompensatedSum::default(); k_track - 1],
            r: CompensatedSum::default(),
            qv_r: CompensatedSum::default(),
            drift_r: CompensatedSum::default(),
        }
    }

    pub fn k_track(&self) -> usize {
        self.m.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Record one step. `pre` is the graph *before* the attachment and
    /// `chosen` the degree of the vertex that was picked.
    pub fn update(&mut self, pre: &GraphState, chosen: u64) -> Result<()> {
        if pre.n() != self.n {
            return Err(Error::Consistency(format!(
                "tracker is at n={} but the graph is at n={}",
                self.n,
                pre.n()
            )));
        }
        if pre.count(chosen) == 0 {
            return Err(Error::Consistency(format!(
                "chosen degree {chosen} is absent at n={}",
                pre.n()
            )));
        }
        let kt = self.k_track();
        self.counts.iter_mut().for_each(|c| *c = 0);
        for (d, c) in pre.histogram() {
            if d as usize > kt {
                break;
            }
            self.counts[d as usize] = c;
        }
        let s = pre.total_weight();
        let p = |k: usize| self.weights[k] * self.counts[k] as f64 / s;
        let hit = |k: usize| if chosen == k as u64 { 1.0 } else { 0.0 };

        let p1 = p(1);
        let mean = 1.0 - p1;
        self.m[0].add((1.0 - hit(1)) - mean);
        self.qv_m[0].add(p1 * (1.0 - p1));
        self.drift_m[0].add(mean);

        for k in 2..=kt {
            let up = p(k - 1);
            let down = p(k);
            let mean = up - down;
            self.m[k - 1].add((hit(k - 1) - hit(k)) - mean);
            self.qv_m[k - 1].add((up + down - mean * mean).max(0.0));
            self.drift_m[k - 1].add(mean);

            self.q[k - 2].add(hit(k - 1) - up);
            self.qv_q[k - 2].add(up * (1.0 - up));
            self.drift_q[k - 2].add(up);
        }

        let v = pre.max_degree();
        let pv = pre.class_probability(v);
        self.r.add(if chosen == v { 1.0 } else { 0.0 } - pv);
        self.qv_r.add(pv * (1.0 - pv));
        self.drift_r.add(pv);

        self.n += 1;
        Ok(())
    }

    pub fn snapshot(&self) -> MartingaleSnapshot {
        let vals = |v: &[CompensatedSum]| v.iter().map(CompensatedSum::value).collect();
        MartingaleSnapshot {
            n: self.n,
            m: vals(&self.m),
            qv_m: vals(&self.qv_m),
            q: vals(&self.q),
            qv_q: vals(&self.qv_q),
            r: self.r.value(),
            qv_r: self.qv_r.value(),
        }
    }

    /// Doob decompositions against the current graph:
    /// `Z_k(n) − Z_k(1) − Σ E[d_k|F] = M_k(n)`, the `Φ_k` analogue for `Q_k`,
    /// and `V(n) − 1 − Σ E[h|F] = R(n)`. Tolerance is `1e−9` absolute,
    /// widened to double resolution of `n` for very long runs.
    pub fn check_identities(&self, state: &GraphState) -> Result<()> {
        let n = state.n();
        if n != self.n {
            return Err(Error::Consistency(format!("tracker at n={} vs graph at n={n}", self.n)));
        }
        let tol = 1e-9_f64.max(4e-16 * n as f64);
        let fail = |what| Err(Error::Invariant { n, what });
        for k in 1..=self.k_track() {
            let z1 = if k == 1 { 2.0 } else { 0.0 };
            let lhs = state.count(k as u64) as f64 - z1 - self.drift_m[k - 1].value();
            let gap = libm::fabs(lhs - self.m[k - 1].value());
            if gap > tol {
                return fail(format!("M_{k} decomposition off by {gap:e}"));
            }
            if k >= 2 {
                let lhs = state.tail_count(k as u64) as f64 - self.drift_q[k - 2].value();
                let gap = libm::fabs(lhs - self.q[k - 2].value());
                if gap > tol {
                    return fail(format!("Q_{k} decomposition off by {gap:e}"));
                }
            }
        }
        let lhs = state.max_degree() as f64 - 1.0 - self.drift_r.value();
        let gap = libm::fabs(lhs - self.r.value());
        if gap > tol {
            return fail(format!("R decomposition off by {gap:e}"));
        }
        Ok(())
    }
}
