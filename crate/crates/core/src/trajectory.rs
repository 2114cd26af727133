//! Seeded growth runs with geometric checkpoints.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{GraphState, Mode};
use crate::error::{Error, Result};
use crate::gamma::WeightExponent;
use crate::martingale::{MartingaleSnapshot, MartingaleState};

/// Default number of densely reported degrees.
pub const DEFAULT_K_REPORT: usize = 16;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `r` in an ensemble: `splitmix64(base ^ splitmix64(r))`.
/// Each seed then initialises a ChaCha8 stream via `seed_from_u64`.
pub fn replica_seed(base: u64, replica: u64) -> u64 {
    splitmix64(base ^ splitmix64(replica))
}

/// Checkpoints at `⌈n_max · ratio^{−j}⌉` for `j = 0, 1, …` down to 1, plus
/// any explicit extra points.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSchedule {
    pub ratio: f64,
    pub extra: Vec<u64>,
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        Self { ratio: 2.0, extra: Vec::new() }
    }
}

impl CheckpointSchedule {
    pub fn geometric(ratio: f64) -> Self {
        Self { ratio, extra: Vec::new() }
    }

    pub fn with_points(mut self, points: impl IntoIterator<Item = u64>) -> Self {
        self.extra.extend(points);
        self
    }

    pub fn points(&self, n_max: u64) -> Vec<u64> {
        let mut out: Vec<u64> = self.extra.iter().copied().filter(|&p| p >= 1 && p <= n_max).collect();
        let mut j = 0;
        loop {
            let x = n_max as f64 / libm::pow(self.ratio, j as f64);
            let p = (libm::ceil(x * (1.0 - 1e-12)) as u64).max(1);
            out.push(p);
            if p == 1 {
                break;
            }
            j += 1;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckLevel {
    Off,
    /// Invariants and martingale decompositions at every checkpoint.
    Checkpoints,
    /// Also the cheap invariants after every step.
    EveryStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub gamma: WeightExponent,
    pub n_max: u64,
    pub seed: u64,
    pub schedule: CheckpointSchedule,
    pub mode: Mode,
    pub k_report: usize,
    /// Track martingales up to this degree.
    pub k_track: Option<usize>,
    pub checks: CheckLevel,
}

impl SimulationConfig {
    pub fn new(gamma: WeightExponent, n_max: u64, seed: u64) -> Self {
        Self {
            gamma,
            n_max,
            seed,
            schedule: CheckpointSchedule::default(),
            mode: Mode::Histogram,
            k_report: DEFAULT_K_REPORT,
            k_track: None,
            checks: if cfg!(debug_assertions) { CheckLevel::EveryStep } else { CheckLevel::Off },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if !(self.schedule.ratio > 1.0) {
            return Err(Error::Config(format!(
                "checkpoint ratio must exceed 1, got {}",
                self.schedule.ratio
            )));
        }
        if self.k_report < 1 {
            return Err(Error::Config("k_report must be at least 1".into()));
        }
        if self.mode == Mode::Tracked && self.n_max >= u32::MAX as u64 {
            return Err(Error::Config("tracked mode supports n_max < 2^32 - 1".into()));
        }
        Ok(())
    }
}

/// State of one run at a scheduled step.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    /// `Z_1 … Z_K`.
    pub z: Vec<u64>,
    /// `(degree, count)` for degrees above `K`.
    pub tail: Vec<(u64, u64)>,
    /// `Φ_1 … Φ_K`.
    pub phi: Vec<u64>,
    pub s: f64,
    pub v: u64,
    pub argmax: Option<u32>,
    pub martingale: Option<MartingaleSnapshot>,
}

impl Checkpoint {
    pub fn capture(state: &GraphState, k_report: usize, tracker: Option<&MartingaleState>) -> Self {
        let mut z = alloc::vec![0u64; k_report];
        let mut tail = Vec::new();
        for (d, c) in state.histogram() {
            if d as usize <= k_report {
                z[d as usize - 1] = c;
            } else {
                tail.push((d, c));
            }
        }
        let mut phi = Vec::with_capacity(k_report);
        let mut below = 0;
        for k in 0..k_report {
            phi.push(state.n() + 1 - below);
            below += z[k];
        }
        Self {
            n: state.n(),
            z,
            tail,
            phi,
            s: state.total_weight(),
            v: state.max_degree(),
            argmax: state.argmax_vertex(),
            martingale: tracker.map(MartingaleState::snapshot),
        }
    }

    pub fn k_report(&self) -> usize {
        self.z.len()
    }

    /// `Z_k` for any `k ≥ 1`.
    pub fn count(&self, k: u64) -> u64 {
        match k {
            0 => 0,
            k if k as usize <= self.z.len() => self.z[k as usize - 1],
            k => self.tail.iter().find(|&&(d, _)| d == k).map_or(0, |&(_, c)| c),
        }
    }

    /// `Φ_k` for any `k ≥ 1`.
    pub fn tail_count(&self, k: u64) -> u64 {
        match k {
            0 => self.n + 1,
            k if k as usize <= self.phi.len() => self.phi[k as usize - 1],
            k => self.tail.iter().filter(|&&(d, _)| d >= k).map(|&(_, c)| c).sum(),
        }
    }

    /// Conservation laws recomputed from the checkpoint alone.
    pub fn conserves(&self) -> bool {
        let all = self.z.iter().enumerate().map(|(i, &c)| ((i + 1) as u64, c)).chain(self.tail.iter().copied());
        let (vertices, degrees) = all.fold((0, 0), |(v, d), (k, c)| (v + c, d + k * c));
        vertices == self.n + 1 && degrees == 2 * self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub gamma: WeightExponent,
    pub seed: u64,
    pub mode: Mode,
    pub n_max: u64,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    pub fn at(&self, n: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.n == n)
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("a trajectory always ends with a checkpoint at n_max")
    }
}

/// Run one seeded trajectory. Identical configurations give identical
/// trajectories.
pub fn run(config: &SimulationConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points = config.schedule.points(config.n_max);
    let mut state = GraphState::new(config.gamma, config.mode);
    let mut tracker = config.k_track.map(|k| MartingaleState::new(&config.gamma, k));
    let mut checkpoints = Vec::with_capacity(points.len());
    let mut next = 0;

    let mut record = |state: &GraphState, tracker: Option<&MartingaleState>| -> Result<()> {
        if config.checks != CheckLevel::Off {
            state.check_invariants()?;
            state.check_tracking()?;
            if let Some(t) = tracker {
                t.check_identities(state)?;
            }
        }
        checkpoints.push(Checkpoint::capture(state, config.k_report, tracker));
        Ok(())
    };

    if points[0] == 1 {
        record(&state, tracker.as_ref())?;
        next = 1;
    }
    while state.n() < config.n_max {
        let choice = state.choose(&mut rng);
        if let Some(t) = tracker.as_mut() {
            t.update(&state, choice.degree)?;
        }
        let v_before = state.max_degree();
        state.apply(choice)?;
        if config.checks == CheckLevel::EveryStep {
            let v = state.max_degree();
            if v != v_before && v != v_before + 1 {
                return Err(Error::Invariant {
                    n: state.n(),
                    what: format!("max degree jumped from {v_before} to {v}"),
                });
            }
            state.check_invariants()?;
        }
        if state.n() == points[next] {
            record(&state, tracker.as_ref())?;
            next += 1;
        }
    }
    Ok(Trajectory {
        gamma: config.gamma,
        seed: config.seed,
        mode: config.mode,
        n_max: config.n_max,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(g: &str, n: u64, seed: u64) -> SimulationConfig {
        SimulationConfig::new(g.parse().unwrap(), n, seed)
    }

    #[test]
    fn schedule_points() {
        assert_eq!(CheckpointSchedule::default().points(10), [1, 2, 3, 5, 10]);
        assert_eq!(CheckpointSchedule::geometric(10.0).points(1_000_000), [1, 10, 100, 1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(CheckpointSchedule::default().with_points([7, 99]).points(8), [1, 2, 4, 7, 8]);
        assert_eq!(CheckpointSchedule::default().points(1), [1]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run(&cfg("5/4", 0, 1)).is_err());
        let mut c = cfg("5/4", 10, 1);
        c.schedule.ratio = 1.0;
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn two_step_run_is_deterministic() {
        let t = run(&cfg("5/4", 2, 99)).unwrap();
        let last = t.last();
        assert_eq!(last.n, 2);
        assert_eq!(&last.z[..3], &[2, 1, 0]);
        assert_eq!(t.checkpoints[0].n, 1);
        assert_eq!(t.checkpoints[0].z[0], 2);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mut c = cfg("5/4", 20_000, 5);
        c.k_track = Some(7);
        c.mode = Mode::Tracked;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a, b);
        c.seed = 6;
        assert_ne!(a, run(&c).unwrap());
    }

    #[test]
    fn checkpoint_views() {
        let mut c = cfg("5/4", 5000, 1);
        c.k_report = 4;
        let t = run(&c).unwrap();
        for cp in &t.checkpoints {
            assert!(cp.conserves());
            assert_eq!(cp.tail_count(1), cp.n + 1);
            assert!(cp.phi.windows(2).all(|w| w[0] >= w[1]));
            for k in 1..=6u64 {
                assert_eq!(cp.count(k), cp.tail_count(k) - cp.tail_count(k + 1));
            }
            assert_eq!(cp.tail_count(cp.v), cp.count(cp.v));
            assert_eq!(cp.tail_count(cp.v + 1), 0);
        }
    }

    #[test]
    fn replica_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|r| replica_seed(42, r)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_ne!(replica_seed(42, 0), replica_seed(43, 0));
    }
}
