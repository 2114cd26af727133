//! Replica ensembles and the statistics that compare them with the
//! asymptotic theory.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use crate::asymptotics::Target;
use crate::asymptotics::{drift_polynomial, CoefficientTable, Regime};
use crate::engine::{GraphState, Mode};
use crate::error::{Error, Result};
use crate::gamma::WeightExponent;
use crate::martingale::MartingaleId;
use crate::oracle::Histogram;
use crate::stats::{self, Moments, Summary};
use crate::trajectory::{self, replica_seed, Checkpoint, SimulationConfig, Trajectory};

/// `replicas` runs of `template`, replica `r` seeded with
/// `replica_seed(template.seed, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub template: SimulationConfig,
    pub replicas: u64,
}

impl EnsembleConfig {
    pub fn new(template: SimulationConfig, replicas: u64) -> Self {
        Self { template, replicas }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::Config(format!("an ensemble needs at least 2 replicas, got {}", self.replicas)));
        }
        self.template.validate()
    }

    pub fn replica(&self, r: u64) -> SimulationConfig {
        SimulationConfig { seed: replica_seed(self.template.seed, r), ..self.template.clone() }
    }
}

pub fn run_replica(config: &EnsembleConfig, r: u64) -> Result<Trajectory> {
    trajectory::run(&config.replica(r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    /// Indexed by replica.
    pub replicas: Vec<Trajectory>,
}

impl EnsembleResult {
    pub fn new(config: EnsembleConfig, replicas: Vec<Trajectory>) -> Result<Self> {
        config.validate()?;
        if replicas.len() as u64 != config.replicas {
            return Err(Error::Consistency(format!(
                "expected {} replicas, got {}",
                config.replicas,
                replicas.len()
            )));
        }
        Ok(Self { config, replicas })
    }

    pub fn gamma(&self) -> WeightExponent {
        self.config.template.gamma
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    /// Checkpoint `n` of every replica.
    pub fn at(&self, n: u64) -> Result<Vec<&Checkpoint>> {
        self.replicas
            .iter()
            .enumerate()
            .map(|(r, t)| t.at(n).ok_or_else(|| Error::Consistency(format!("replica {r} has no checkpoint at n = {n}"))))
            .collect()
    }
}

/// Serial ensemble; replicas are independent so the result does not
/// depend on execution order.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let replicas = (0..config.replicas).map(|r| run_replica(config, r)).collect::<Result<Vec<_>>>()?;
    EnsembleResult::new(config.clone(), replicas)
}

/// Final histograms of `replicas` short runs, counted. Streams so that
/// millions of replicas need no trajectory storage.
pub fn histogram_frequencies(
    gamma: WeightExponent,
    n: u64,
    replicas: core::ops::Range<u64>,
    base_seed: u64,
    mode: Mode,
) -> Result<BTreeMap<Histogram, u64>> {
    let mut out = BTreeMap::new();
    for r in replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(base_seed, r));
        let mut state = GraphState::new(gamma, mode);
        while state.n() < n {
            state.attach_step(&mut rng)?;
        }
        *out.entry(state.histogram().collect()).or_insert(0) += 1;
    }
    Ok(out)
}

/// Raw value of a target at a checkpoint.
pub fn target_value(cp: &Checkpoint, target: Target) -> f64 {
    match target {
        Target::Z(k) => cp.count(k as u64) as f64,
        Target::Z1MinusN => cp.count(1) as f64 - cp.n as f64,
        Target::MinusZ2 => -(cp.count(2) as f64),
        Target::VMinusN => cp.v as f64 - cp.n as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSample {
    pub target: Target,
    pub n: u64,
    /// `(value − drift(n)) / scale(n)`, one per replica.
    pub values: Vec<f64>,
    pub theoretical_variance: f64,
}

impl FluctuationSample {
    pub fn moments(&self) -> Moments {
        Moments::of(&self.values)
    }

    pub fn ks(&self) -> Result<f64> {
        stats::ks_statistic(&self.values, self.theoretical_variance)
    }
}

/// Subtract the drift polynomial and divide by the fluctuation scale.
pub fn standardize(ens: &EnsembleResult, table: &CoefficientTable, target: Target, n: u64) -> Result<FluctuationSample> {
    if table.gamma != ens.gamma() {
        return Err(Error::Consistency(format!(
            "coefficient table is for γ = {}, ensemble for γ = {}",
            table.gamma,
            ens.gamma()
        )));
    }
    if let Target::Z(k) = target {
        if table.regime.classify(k) == Regime::Above {
            return Err(Error::Domain(format!("no central limit theorem for Z_{k} above the critical index")));
        }
    }
    let model = drift_polynomial(table, target)?;
    let values = ens
        .at(n)?
        .into_iter()
        .map(|cp| model.standardize(target_value(cp, target), n as f64))
        .collect::<Vec<_>>();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericRange(format!("non-finite standardized value for {target}")));
    }
    Ok(FluctuationSample { target, n, values, theoretical_variance: model.variance })
}

pub fn moments_and_correlation(samples: &[FluctuationSample]) -> Result<Summary> {
    let views: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
    stats::summarize(&views)
}

/// Quantities expected to freeze after a random finite time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Phi(u64),
    VMinusN,
    Z1MinusN,
    Argmax,
}

impl Quantity {
    pub fn value(&self, cp: &Checkpoint) -> Result<i64> {
        Ok(match *self {
            Quantity::Phi(k) => cp.tail_count(k) as i64,
            Quantity::VMinusN => cp.v as i64 - cp.n as i64,
            Quantity::Z1MinusN => cp.count(1) as i64 - cp.n as i64,
            Quantity::Argmax => cp
                .argmax
                .ok_or_else(|| Error::Config("condensate identity needs tracked mode".into()))?
                as i64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stabilization {
    /// Fraction of replicas with equal values at both checkpoints.
    pub fraction_stable: f64,
    pub median_increment: f64,
}

pub fn stabilization_test(ens: &EnsembleResult, q: Quantity, n_half: u64, n_full: u64) -> Result<Stabilization> {
    let a = ens.at(n_half)?;
    let b = ens.at(n_full)?;
    let mut incs = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(&b) {
        incs.push(q.value(y)? - q.value(x)?);
    }
    let stable = incs.iter().filter(|&&d| d == 0).count();
    incs.sort_unstable();
    let m = incs.len();
    let median = if m % 2 == 1 { incs[m / 2] as f64 } else { 0.5 * (incs[m / 2 - 1] + incs[m / 2]) as f64 };
    Ok(Stabilization { fraction_stable: stable as f64 / m as f64, median_increment: median })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroMean {
    /// Mean and standard error of `X(n)`.
    pub value: (f64, f64),
    /// Mean and standard error of `X(n)² − ⟨X⟩(n)`.
    pub compensated_square: (f64, f64),
}

/// Ensemble mean of a tracked martingale and of its compensated square.
pub fn zero_mean_statistic(ens: &EnsembleResult, id: MartingaleId, n: u64) -> Result<ZeroMean> {
    let cps = ens.at(n)?;
    if cps.len() < 2 {
        return Err(Error::Domain("standard error needs at least 2 replicas".into()));
    }
    let mut xs = Vec::with_capacity(cps.len());
    let mut sq = Vec::with_capacity(cps.len());
    for cp in cps {
        let snap = cp
            .martingale
            .as_ref()
            .ok_or_else(|| Error::Config("martingale tracking was off".into()))?;
        let (x, qv) = snap.get(id).ok_or_else(|| Error::Domain(format!("{id:?} is not tracked")))?;
        xs.push(x);
        sq.push(x * x - qv);
    }
    Ok(ZeroMean {
        value: (stats::mean(&xs), stats::stderr(&xs)),
        compensated_square: (stats::mean(&sq), stats::stderr(&sq)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::solve_coefficients;

    fn cfg(g: &str, n: u64, r: u64) -> EnsembleConfig {
        let mut t = SimulationConfig::new(g.parse().unwrap(), n, 7);
        t.k_track = Some(7);
        EnsembleConfig::new(t, r)
    }

    #[test]
    fn deterministic() {
        let c = cfg("5/4", 1000, 4);
        assert_eq!(run_ensemble(&c).unwrap(), run_ensemble(&c).unwrap());
    }

    #[test]
    fn needs_two_replicas() {
        assert!(run_ensemble(&cfg("5/4", 10, 1)).is_err());
    }

    #[test]
    fn martingales_vanish_at_two() {
        let ens = run_ensemble(&cfg("5/4", 2, 10)).unwrap();
        let z = zero_mean_statistic(&ens, MartingaleId::M(1), 2).unwrap();
        assert_eq!(z.value.0, 0.0);
        assert!(zero_mean_statistic(&ens, MartingaleId::M(1), 3).is_err());
    }

    #[test]
    fn stabilization_of_constants() {
        let ens = run_ensemble(&cfg("5/4", 100, 5)).unwrap();
        let s = stabilization_test(&ens, Quantity::Phi(1000), 50, 100).unwrap();
        assert_eq!(s.fraction_stable, 1.0);
        assert_eq!(s.median_increment, 0.0);
        assert!(stabilization_test(&ens, Quantity::Phi(2), 49, 100).is_err());
    }

    #[test]
    fn standardize_checks_inputs() {
        let ens = run_ensemble(&cfg("5/4", 64, 3)).unwrap();
        let table = solve_coefficients(&"5/4".parse().unwrap()).unwrap();
        assert!(standardize(&ens, &table, Target::Z(6), 64).is_err());
        let s = standardize(&ens, &table, Target::Z(2), 64).unwrap();
        assert_eq!(s.values.len(), 3);
        let other = solve_coefficients(&"4/3".parse().unwrap()).unwrap();
        assert!(standardize(&ens, &other, Target::Z(2), 64).is_err());
    }

    #[test]
    fn streaming_histograms_match_trajectories() {
        let c = cfg("2", 7, 50);
        let ens = run_ensemble(&c).unwrap();
        let mut expect: BTreeMap<Histogram, u64> = BTreeMap::new();
        for t in &ens.replicas {
            let cp = t.last();
            let h: Histogram = (1..=8).filter(|&k| cp.count(k) > 0).map(|k| (k, cp.count(k))).collect();
            *expect.entry(h).or_default() += 1;
        }
        let got = histogram_frequencies(c.template.gamma, 7, 0..50, c.template.seed, Mode::Histogram).unwrap();
        assert_eq!(got, expect);
    }
}
