//! Class-indexed growth engine.
//!
//! Vertices are grouped by degree. Only nonempty classes are stored, sorted
//! by degree, so a draw is a cumulative-weight scan over a short list: in
//! the superlinear regime the list holds the bounded-degree bulk plus the
//! condensate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gamma::WeightExponent;
use crate::sum::CompensatedSum;

const WEIGHT_CACHE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Degree counts only.
    Histogram,
    /// Counts plus per-vertex degrees and class member lists.
    Tracked,
}

#[derive(Debug, Clone)]
struct Class {
    degree: u64,
    count: u64,
    weight: f64,
    members: Vec<u32>,
}

/// A sampled attachment target, not yet applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    index: usize,
    member: usize,
    pub degree: u64,
}

#[derive(Debug, Clone)]
pub struct GraphState {
    gamma: WeightExponent,
    mode: Mode,
    n: u64,
    classes: Vec<Class>,
    total_weight: CompensatedSum,
    degrees: Vec<u32>,
    positions: Vec<u32>,
    argmax: Option<u32>,
    weights: Vec<f64>,
    descending: bool,
}

impl GraphState {
    /// The initial graph: two vertices joined by one edge (`n = 1`).
    pub fn new(gamma: WeightExponent, mode: Mode) -> Self {
        let weights: Vec<f64> = (0..WEIGHT_CACHE as u64).map(|k| gamma.weight(k)).collect();
        let tracked = mode == Mode::Tracked;
        let members = if tracked { vec![0, 1] } else { Vec::new() };
        Self {
            gamma,
            mode,
            n: 1,
            classes: vec![Class { degree: 1, count: 2, weight: weights[1], members }],
            total_weight: CompensatedSum::new(2.0 * weights[1]),
            degrees: if tracked { vec![1, 1] } else { Vec::new() },
            positions: if tracked { vec![0, 1] } else { Vec::new() },
            argmax: tracked.then_some(0),
            weights,
            // Superlinear weight sits in the condensate at the top of the list.
            descending: gamma.value() > 1.0,
        }
    }

    #[inline]
    fn w(&self, k: u64) -> f64 {
        match self.weights.get(k as usize) {
            Some(&w) => w,
            None => self.gamma.weight(k),
        }
    }

    pub fn gamma(&self) -> WeightExponent {
        self.gamma
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Step count; the graph has `n + 1` vertices and `n` edges.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `S(n)`, maintained incrementally.
    pub fn total_weight(&self) -> f64 {
        self.total_weight.value()
    }

    /// `V(n)`.
    pub fn max_degree(&self) -> u64 {
        self.classes.last().map_or(0, |c| c.degree)
    }

    /// Current maximum-degree vertex (tracked mode). The incumbent is kept
    /// until strictly exceeded.
    pub fn argmax_vertex(&self) -> Option<u32> {
        self.argmax
    }

    /// `Z_k(n)`.
    pub fn count(&self, k: u64) -> u64 {
        match self.classes.binary_search_by_key(&k, |c| c.degree) {
            Ok(i) => self.classes[i].count,
            Err(_) => 0,
        }
    }

    /// `Φ_k(n)`: number of vertices with degree at least `k`.
    pub fn tail_count(&self, k: u64) -> u64 {
        let start = self.classes.partition_point(|c| c.degree < k);
        self.classes[start..].iter().map(|c| c.count).sum()
    }

    /// Nonempty classes as `(degree, count)`, ascending in degree.
    pub fn histogram(&self) -> impl DoubleEndedIterator<Item = (u64, u64)> + ExactSizeIterator + '_ {
        self.classes.iter().map(|c| (c.degree, c.count))
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Degree of a vertex (tracked mode).
    pub fn degree_of(&self, vertex: u32) -> Option<u64> {
        self.degrees.get(vertex as usize).map(|&d| d as u64)
    }

    /// Conditional probability that the next attachment picks a vertex of
    /// degree `k`: `w(k) Z_k / S`.
    pub fn class_probability(&self, k: u64) -> f64 {
        self.w(k) * self.count(k) as f64 / self.total_weight()
    }

    /// Sample the next attachment target from one uniform draw. In tracked
    /// mode the position inside the class reuses the same draw, so both modes
    /// consume the generator identically.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Choice {
        let u: f64 = rng.random();
        self.choose_at(u)
    }

    /// Deterministic part of [`choose`](Self::choose) for a uniform `u ∈ [0, 1)`.
    pub fn choose_at(&self, u: f64) -> Choice {
        let target = u * self.total_weight();
        let mut acc = 0.0;
        let pick = |i: usize, offset: f64| {
            let c = &self.classes[i];
            let member = ((offset / c.weight) as u64).min(c.count - 1) as usize;
            Choice { index: i, member, degree: c.degree }
        };
        let last = self.classes.len() - 1;
        if self.descending {
            for i in (0..=last).rev() {
                let c = &self.classes[i];
                let cw = c.weight * c.count as f64;
                if target < acc + cw || i == 0 {
                    return pick(i, (target - acc).max(0.0));
                }
                acc += cw;
            }
        } else {
            for i in 0..=last {
                let c = &self.classes[i];
                let cw = c.weight * c.count as f64;
                if target < acc + cw || i == last {
                    return pick(i, (target - acc).max(0.0));
                }
                acc += cw;
            }
        }
        unreachable!("class list is never empty")
    }

    /// Apply a choice made on the current state: the chosen vertex moves from
    /// degree `k` to `k + 1` and a new leaf joins. Returns `k`.
    pub fn apply(&mut self, choice: Choice) -> Result<u64> {
        let i = choice.index;
        let k = match self.classes.get(i) {
            Some(c) if c.degree == choice.degree && choice.member < c.count as usize => c.degree,
            _ => {
                return Err(Error::Consistency(format!(
                    "choice of degree {} does not match the current state",
                    choice.degree
                )))
            }
        };
        let tracked = self.mode == Mode::Tracked;
        let v_old = self.max_degree();
        let w_up = self.w(k + 1);
        let w_leaf = self.w(1);

        let vertex = if tracked {
            let cls = &mut self.classes[i];
            let v = cls.members.swap_remove(choice.member);
            if let Some(&moved) = cls.members.get(choice.member) {
                self.positions[moved as usize] = choice.member as u32;
            }
            Some(v)
        } else {
            None
        };

        let w_old = self.classes[i].weight;
        self.classes[i].count -= 1;
        let emptied = self.classes[i].count == 0;
        let target = if i + 1 < self.classes.len() && self.classes[i + 1].degree == k + 1 {
            self.classes[i + 1].count += 1;
            if emptied {
                self.classes.remove(i);
                i
            } else {
                i + 1
            }
        } else if emptied {
            // The only member moves up: relabel the class in place.
            let c = &mut self.classes[i];
            c.degree = k + 1;
            c.weight = w_up;
            c.count = 1;
            i
        } else {
            self.classes.insert(
                i + 1,
                Class { degree: k + 1, count: 1, weight: w_up, members: Vec::new() },
            );
            i + 1
        };
        if let Some(v) = vertex {
            let members = &mut self.classes[target].members;
            self.positions[v as usize] = members.len() as u32;
            members.push(v);
            self.degrees[v as usize] = (k + 1) as u32;
            if k + 1 > v_old {
                self.argmax = Some(v);
            }
        }

        let leaf = (self.n + 1) as u32;
        let leaf_class = if self.classes[0].degree == 1 {
            self.classes[0].count += 1;
            0
        } else {
            self.classes
                .insert(0, Class { degree: 1, count: 1, weight: w_leaf, members: Vec::new() });
            0
        };
        if tracked {
            let members = &mut self.classes[leaf_class].members;
            self.positions.push(members.len() as u32);
            members.push(leaf);
            self.degrees.push(1);
        }

        self.total_weight.add((w_up - w_old) + w_leaf);
        self.n += 1;
        if !self.total_weight.value().is_finite() {
            return Err(Error::NumericRange(format!(
                "total weight is not finite at n={}",
                self.n
            )));
        }
        Ok(k)
    }

    /// One growth step. Returns the degree of the vertex that was chosen.
    pub fn attach_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u64> {
        let choice = self.choose(rng);
        self.apply(choice)
    }

    /// `(S, V)` recomputed from the class counts alone.
    pub fn recompute_aggregates(&self) -> (f64, u64) {
        let mut s = CompensatedSum::default();
        let mut v = 0;
        for c in &self.classes {
            if c.count > 0 {
                s.add(self.gamma.weight(c.degree) * c.count as f64);
                v = v.max(c.degree);
            }
        }
        (s.value(), v)
    }

    /// Checks the conservation laws, the support and maximum of the degree
    /// counts, incremental-versus-recomputed weight, and the weight bounds.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        let fail = |what| Err(Error::Invariant { n, what });
        let vertices: u64 = self.classes.iter().map(|c| c.count).sum();
        let degree_sum: u64 = self.classes.iter().map(|c| c.degree * c.count).sum();
        if vertices != n + 1 {
            return fail(format!("sum of Z_k is {vertices}, expected {}", n + 1));
        }
        if degree_sum != 2 * n {
            return fail(format!("sum of k Z_k is {degree_sum}, expected {}", 2 * n));
        }
        if self.classes.windows(2).any(|w| w[0].degree >= w[1].degree)
            || self.classes.iter().any(|c| c.count == 0)
        {
            return fail("class list is not strictly sorted and nonempty".into());
        }
        let (s, v) = self.recompute_aggregates();
        if v != self.max_degree() || v > n {
            return fail(format!("max degree {} vs recomputed {v} (n={n})", self.max_degree()));
        }
        let s_inc = self.total_weight();
        if libm::fabs(s - s_inc) > 1e-9 * s {
            return fail(format!("incremental S={s_inc} vs recomputed {s}"));
        }
        let g = self.gamma.value();
        let nf = n as f64;
        if g >= 1.0 {
            let bound = 2.0 * libm::pow(nf, g);
            if s > bound * (1.0 + 1e-12) {
                return fail(format!("S={s} exceeds 2 n^gamma = {bound}"));
            }
        }
        if g > 1.0 && g <= 2.0 {
            let bound = nf * (libm::pow(v as f64, g - 1.0) + 2.0 * g);
            if s > bound * (1.0 + 1e-12) {
                return fail(format!("S={s} exceeds n(V^(gamma-1) + 2 gamma) = {bound}"));
            }
        }
        Ok(())
    }

    /// Tracked-mode bookkeeping: every vertex sits in the class of its
    /// degree at its recorded position, and the argmax holds the maximum.
    pub fn check_tracking(&self) -> Result<()> {
        if self.mode != Mode::Tracked {
            return Ok(());
        }
        let n = self.n;
        let fail = |what| Err(Error::Invariant { n, what });
        if self.degrees.len() as u64 != n + 1 {
            return fail(format!("{} tracked vertices", self.degrees.len()));
        }
        for c in &self.classes {
            if c.members.len() as u64 != c.count {
                return fail(format!("class {} lists {} members", c.degree, c.members.len()));
            }
            for (pos, &v) in c.members.iter().enumerate() {
                if self.degrees[v as usize] as u64 != c.degree || self.positions[v as usize] as usize != pos
                {
                    return fail(format!("vertex {v} misplaced in class {}", c.degree));
                }
            }
        }
        match self.argmax {
            Some(a) if self.degrees[a as usize] as u64 == self.max_degree() => Ok(()),
            _ => fail("argmax vertex does not hold the maximum degree".into()),
        }
    }
}
