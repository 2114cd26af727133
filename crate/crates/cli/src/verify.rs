//! The verification battery: each function runs one group of checks and
//! returns one [`Check`] per compared number.

use std::time::Instant;

use condensa_core::asymptotics::{
    compute_a, drift_residual_increments, leading_coefficients, linear_limit, solve_coefficients, sublinear_q,
    CoefficientTable, Target,
};
use condensa_core::ensemble::{
    moments_and_correlation, stabilization_test, standardize, zero_mean_statistic, EnsembleConfig, EnsembleResult,
    Quantity,
};
use condensa_core::martingale::{default_k_track, MartingaleId};
use condensa_core::series::ratio_f64;
use condensa_core::trajectory::{self, CheckLevel, CheckpointSchedule};
use condensa_core::{Checkpoint, Mode, OracleDistribution, SimulationConfig, WeightExponent};
use serde::Serialize;
use serde_json::Value;

use crate::error::AppResult;
use crate::formats::coefficients_json;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub gamma: String,
    pub n: u64,
    #[serde(rename = "R")]
    pub replicas: u64,
    pub statistic: f64,
    /// `"<="` or `">="`: how `statistic` is compared with `threshold`.
    pub op: &'static str,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, gamma: &str, n: u64, replicas: u64, statistic: f64, threshold: f64) -> Self {
        let pass = statistic <= threshold;
        Self { name: name.into(), gamma: gamma.into(), n, replicas, statistic, op: "<=", threshold, pass }
    }

    pub fn ge(name: impl Into<String>, gamma: &str, n: u64, replicas: u64, statistic: f64, threshold: f64) -> Self {
        let pass = statistic >= threshold;
        Self { name: name.into(), gamma: gamma.into(), n, replicas, statistic, op: ">=", threshold, pass }
    }
}

/// Shared knobs for a battery run.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub workers: usize,
    pub seed: u64,
}

fn gamma(s: &str) -> WeightExponent {
    s.parse().expect("battery exponents are well formed")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    condensa_core::stats::mean(&v)
}

/// Closed forms for `γ = 5/4` against the solver.
pub fn coefficients_at_five_quarters() -> AppResult<Vec<Check>> {
    let gm = gamma("5/4");
    let t = solve_coefficients(&gm)?;
    let p = |b: f64| b.powf(1.25);
    let g2 = p(2.0);
    let cases = [
        ("a_2", t.c(2, 2), 4.0 / 3.0),
        ("a_3", t.c(3, 3), 8.0 / 3.0 * g2),
        ("a_4", t.c(4, 4), 32.0 / 3.0 * p(6.0)),
        ("b_5", t.b_critical, 32.0 / 3.0 * p(24.0)),
        ("c^2_3", t.c(2, 3), 8.0 / 3.0 * g2 - 4.0 / 3.0),
        ("c^3_4", t.c(3, 4), -16.0 / 9.0 * (g2 + 6.0 * p(4.0) + 6.0 * p(6.0))),
        ("c1_2", t.c1.get(&2).copied(), 4.0 / 3.0),
        ("m_2", t.m.get(&2).copied(), 4.0 / 3.0),
        ("c1_3", t.c1.get(&3).copied(), 16.0 / 3.0 * g2 - 4.0 / 3.0),
        ("m_3", t.m.get(&3).copied(), 8.0 * g2 - 4.0 / 3.0),
    ];
    Ok(cases
        .into_iter()
        .map(|(name, got, want)| {
            Check::le(format!("coefficient {name} relative error"), "5/4", 0, 0, got.map_or(f64::INFINITY, |g| rel(g, want)), 1e-9)
        })
        .collect())
}

/// Internal consistency of a solved table: diagonal against the product
/// formula and decay of the drift-equation residual.
pub fn coefficient_consistency(g: &str, ns: &[u64]) -> AppResult<Vec<Check>> {
    let gm = gamma(g);
    let t = solve_coefficients(&gm)?;
    let mut out = Vec::new();
    for k in 2..=t.regime.last_below() {
        let err = rel(t.c(k, k).unwrap_or(f64::NAN), compute_a(&gm, k)?);
        out.push(Check::le(format!("diagonal c^{k}_{k} vs a_{k}"), g, 0, 0, if err.is_nan() { f64::INFINITY } else { err }, 1e-9));
    }
    for &n in ns {
        let r1 = drift_residual_increments(&t, n)?;
        let r2 = drift_residual_increments(&t, 2 * n)?;
        for k in 2..=t.regime.a() {
            let bound = 2f64.powf(ratio_f64(t.regime.gauge_exponent(k)) / 2.0 - 0.01);
            out.push(Check::le(
                format!("drift residual ratio for Z_{k} at n→2n"),
                g,
                n,
                0,
                (r2[k - 2] / r1[k - 2]).abs(),
                bound,
            ));
        }
    }
    Ok(out)
}

/// Simulated final-histogram frequencies against exhaustive enumeration.
pub fn oracle_equivalence(ctx: Ctx, g: &str, n: u64, replicas: u64) -> AppResult<Vec<Check>> {
    let gm = gamma(g);
    let oracle = OracleDistribution::new(gm, n)?;
    let freq = parallel::histogram_frequencies(gm, n, replicas, ctx.seed, ctx.workers)?;
    let r = replicas as f64;
    let unexpected = freq.keys().filter(|h| !oracle.outcomes.contains_key(*h)).count();
    let worst = oracle
        .outcomes
        .iter()
        .map(|(h, &p)| {
            let f = *freq.get(h).unwrap_or(&0) as f64 / r;
            let se = (p * (1.0 - p) / r).sqrt();
            if se > 0.0 { (f - p).abs() / se } else if f == p { 0.0 } else { f64::INFINITY }
        })
        .fold(0.0, f64::max);
    Ok(vec![
        Check::le("outcomes outside the exact support", g, n, replicas, unexpected as f64, 0.0),
        Check::le("max |frequency - probability| / SE over histograms", g, n, replicas, worst, 4.0),
    ])
}

/// Mean of `Z_1(3)` at `γ = 5/4` against `2.543215`, in standard errors.
pub fn z1_at_three(ctx: Ctx, replicas: u64) -> AppResult<Check> {
    let freq = parallel::histogram_frequencies(gamma("5/4"), 3, replicas, ctx.seed ^ 0x5eed, ctx.workers)?;
    let r = replicas as f64;
    let z1 = |h: &Vec<(u64, u64)>| h.iter().find(|&&(d, _)| d == 1).map_or(0.0, |&(_, c)| c as f64);
    let m: f64 = freq.iter().map(|(h, &c)| z1(h) * c as f64).sum::<f64>() / r;
    let var: f64 = freq.iter().map(|(h, &c)| (z1(h) - m).powi(2) * c as f64).sum::<f64>() / (r - 1.0);
    let se = (var / r).sqrt();
    Ok(Check::le("|mean Z_1(3) - 2.543215| / SE", "5/4", 3, replicas, (m - 2.543215).abs() / se, 3.0))
}

fn checkpoint_violations(cps: &[Checkpoint]) -> usize {
    let mut bad = 0;
    for (i, cp) in cps.iter().enumerate() {
        bad += usize::from(!cp.conserves());
        bad += usize::from(cp.phi.first() != Some(&(cp.n + 1)));
        bad += usize::from(cp.phi.windows(2).any(|w| w[0] < w[1]));
        if i > 0 {
            let prev = &cps[i - 1];
            bad += usize::from(cp.phi.iter().zip(&prev.phi).any(|(a, b)| a < b));
            bad += usize::from(cp.v < prev.v || cp.v - prev.v > cp.n - prev.n);
        }
    }
    bad
}

/// Per-step and per-checkpoint invariants plus the martingale
/// decompositions over `runs` seeded runs.
pub fn invariant_suite(ctx: Ctx, g: &str, n: u64, runs: u64) -> AppResult<Vec<Check>> {
    let gm = gamma(g);
    let mut template = SimulationConfig::new(gm, n, ctx.seed);
    template.mode = Mode::Tracked;
    template.k_track = Some(default_k_track(&gm));
    template.checks = CheckLevel::EveryStep;
    let cfg = EnsembleConfig::new(template, runs);
    let mut failures = 0usize;
    let mut violations = 0usize;
    // Run replicas one by one so a failure in one does not hide the others.
    let results: Vec<_> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.workers).build().expect("thread pool");
        pool.install(|| (0..runs).into_par_iter().map(|r| condensa_core::ensemble::run_replica(&cfg, r)).collect())
    };
    for r in results {
        match r {
            Ok(t) => violations += checkpoint_violations(&t.checkpoints),
            Err(_) => failures += 1,
        }
    }
    Ok(vec![
        Check::le("runs aborted by a per-step or decomposition check", g, n, runs, failures as f64, 0.0),
        Check::le("checkpoint invariant violations", g, n, runs, violations as f64, 0.0),
    ])
}

/// Ensemble means of the tracked martingales, in standard errors.
pub fn martingale_zero_mean(ens: &EnsembleResult, n: u64) -> AppResult<Vec<Check>> {
    let g = ens.gamma().to_string();
    let r = ens.len() as u64;
    let k = ens.replicas[0].last().martingale.as_ref().map_or(0, |m| m.k_track());
    let ids = (1..=k).map(MartingaleId::M).chain((2..=k).map(MartingaleId::Q)).chain([MartingaleId::R]);
    let mut out = Vec::new();
    for id in ids {
        let z = zero_mean_statistic(ens, id, n)?;
        let score = |(m, se): (f64, f64)| if se > 0.0 { m.abs() / se } else if m == 0.0 { 0.0 } else { f64::INFINITY };
        out.push(Check::le(format!("|mean {id:?}| / SE"), &g, n, r, score(z.value), 4.0));
        out.push(Check::le(format!("|mean {id:?}^2 - <{id:?}>| / SE"), &g, n, r, score(z.compensated_square), 4.0));
    }
    Ok(out)
}

fn schedule_with(points: &[u64]) -> CheckpointSchedule {
    CheckpointSchedule::default().with_points(points.iter().copied())
}

/// The `γ = 5/4`, `n = 10^6`, `R = 100` tracked ensemble shared by the
/// law-of-large-numbers and fixation checks.
pub fn condensation_ensemble(ctx: Ctx) -> AppResult<EnsembleResult> {
    let mut t = SimulationConfig::new(gamma("5/4"), 1_000_000, ctx.seed.wrapping_add(4));
    t.mode = Mode::Tracked;
    t.checks = CheckLevel::Off;
    t.schedule = schedule_with(&[10_000, 100_000]);
    parallel::run_ensemble(&EnsembleConfig::new(t, 100), ctx.workers)
}

fn interval(out: &mut Vec<Check>, name: &str, g: &str, n: u64, r: u64, x: f64, lo: f64, hi: f64) {
    out.push(Check::ge(format!("{name} lower"), g, n, r, x, lo));
    out.push(Check::le(format!("{name} upper"), g, n, r, x, hi));
}

/// Ensemble means of the normalized counts at `γ = 5/4`.
pub fn law_of_large_numbers(ens: &EnsembleResult) -> AppResult<Vec<Check>> {
    let gm = ens.gamma();
    let g = gm.to_string();
    let t = leading_coefficients(&gm)?;
    let r = ens.len() as u64;
    let n = ens.config.template.n_max;
    let at = |m: u64| ens.at(m);
    let ratio = |m: u64, f: &dyn Fn(&Checkpoint, f64) -> f64| -> AppResult<f64> {
        Ok(mean(at(m)?.into_iter().map(|cp| f(cp, m as f64))))
    };
    let (a2, a3, b5) = (t.a(2).unwrap(), t.a(3).unwrap(), t.b_critical.unwrap());
    let gf = gm.value();
    let z1 = |cp: &Checkpoint, n: f64| cp.count(1) as f64 / n;
    let v = |cp: &Checkpoint, n: f64| cp.v as f64 / n;
    let mut out = Vec::new();
    interval(&mut out, "mean Z_1/n", &g, n, r, ratio(n, &z1)?, 0.97, 1.03);
    interval(&mut out, "mean Z_2/(a_2 n^(3/4))", &g, n, r, ratio(n, &|cp, n| cp.count(2) as f64 / (a2 * n.powf(0.75)))?, 0.85, 1.15);
    interval(&mut out, "mean Z_3/(a_3 n^(1/2))", &g, n, r, ratio(n, &|cp, n| cp.count(3) as f64 / (a3 * n.sqrt()))?, 0.80, 1.20);
    interval(&mut out, "mean Z_5/(b_5 log n)", &g, n, r, ratio(n, &|cp, n| cp.count(5) as f64 / (b5 * n.ln()))?, 0.6, 1.4);
    interval(&mut out, "mean V/n", &g, n, r, ratio(n, &v)?, 0.90, 1.02);
    interval(&mut out, "mean S/n^gamma", &g, n, r, ratio(n, &|cp, n| cp.s / n.powf(gf))?, 0.85, 1.15);
    for (name, f) in [("Z_1/n", &z1 as &dyn Fn(&Checkpoint, f64) -> f64), ("V/n", &v)] {
        let d: Vec<f64> = [10_000, 100_000, n].iter().map(|&m| ratio(m, f).map(|x| (x - 1.0).abs())).collect::<AppResult<_>>()?;
        out.push(Check::le(format!("|mean {name} - 1| change from 1e4 to 1e5 (must shrink)"), &g, 100_000, r, d[1] - d[0], 0.0));
        out.push(Check::le(format!("|mean {name} - 1| change from 1e5 to 1e6 (must shrink)"), &g, n, r, d[2] - d[1], 0.0));
    }
    Ok(out)
}

/// Bounded counts freeze and the condensate keeps its identity.
pub fn fixation(ens: &EnsembleResult) -> AppResult<Vec<Check>> {
    let g = ens.gamma().to_string();
    let r = ens.len() as u64;
    let n = ens.config.template.n_max;
    let phi = stabilization_test(ens, Quantity::Phi(6), 100_000, n)?;
    let cps = &ens.replicas[0].checkpoints;
    let before = cps[cps.len() - 2].n;
    let arg = stabilization_test(ens, Quantity::Argmax, before, n)?;
    Ok(vec![
        Check::ge("fraction with Phi_6 equal at 1e5 and 1e6", &g, n, r, phi.fraction_stable, 0.5),
        Check::le("|median Phi_6 increment| from 1e5 to 1e6", &g, n, r, phi.median_increment.abs(), 0.0),
        Check::ge("fraction with the same argmax vertex at the last two checkpoints", &g, n, r, arg.fraction_stable, 0.5),
    ])
}

/// Standardized fluctuations at `γ = 5/4`, `n = 10^6`, `R = 400`.
pub fn clt_ensemble(ctx: Ctx) -> AppResult<EnsembleResult> {
    let mut t = SimulationConfig::new(gamma("5/4"), 1_000_000, ctx.seed.wrapping_add(5));
    t.checks = CheckLevel::Off;
    parallel::run_ensemble(&EnsembleConfig::new(t, 400), ctx.workers)
}

pub fn central_limit(ens: &EnsembleResult, table: &CoefficientTable) -> AppResult<Vec<Check>> {
    let g = ens.gamma().to_string();
    let r = ens.len() as u64;
    let n = ens.config.template.n_max;
    let mut out = Vec::new();
    let targets = [Target::Z(2), Target::Z(3), Target::Z(4), Target::Z(5), Target::Z1MinusN, Target::MinusZ2, Target::VMinusN];
    let mut triple = Vec::new();
    for target in targets {
        let s = standardize(ens, table, target, n)?;
        let m = s.moments();
        let sd = s.theoretical_variance.sqrt();
        out.push(Check::le(format!("{target}: |mean| / sqrt(theory variance)"), &g, n, r, m.mean.abs() / sd, 0.25));
        out.push(Check::le(format!("{target}: |variance / theory - 1|"), &g, n, r, (m.variance / s.theoretical_variance - 1.0).abs(), 0.30));
        out.push(Check::le(format!("{target}: KS distance to N(0, theory)"), &g, n, r, s.ks()?, 0.12));
        if matches!(target, Target::Z1MinusN | Target::MinusZ2 | Target::VMinusN) {
            triple.push(s);
        }
    }
    let summary = moments_and_correlation(&triple)?;
    for i in 0..3 {
        for j in i + 1..3 {
            out.push(Check::ge(
                format!("corr({}, {})", triple[i].target, triple[j].target),
                &g,
                n,
                r,
                summary.correlation[i][j],
                0.9,
            ));
        }
    }
    Ok(out)
}

/// `γ = 3`: `Z_1 − n` and `V − n` freeze.
pub fn below_two_regime(ctx: Ctx) -> AppResult<Vec<Check>> {
    let mut t = SimulationConfig::new(gamma("3"), 1_000_000, ctx.seed.wrapping_add(7));
    t.checks = CheckLevel::Off;
    t.schedule = schedule_with(&[100_000]);
    let ens = parallel::run_ensemble(&EnsembleConfig::new(t, 100), ctx.workers)?;
    let n = 1_000_000;
    let z1 = stabilization_test(&ens, Quantity::Z1MinusN, 100_000, n)?;
    let v = stabilization_test(&ens, Quantity::VMinusN, 100_000, n)?;
    Ok(vec![
        Check::ge("fraction with Z_1 - n equal at 1e5 and 1e6", "3", n, 100, z1.fraction_stable, 0.5),
        Check::ge("fraction with V - n equal at 1e5 and 1e6", "3", n, 100, v.fraction_stable, 0.5),
    ])
}

/// Linear and sublinear degree laws.
pub fn cross_regime(ctx: Ctx) -> AppResult<Vec<Check>> {
    let n = 1_000_000;
    let mut out = Vec::new();
    let (_, q) = sublinear_q(0.5)?;
    let total: f64 = q.iter().rev().sum();
    out.push(Check::le("|sum q(k) - 1| at gamma = 1/2", "1/2", 0, 0, (total - 1.0).abs(), 1e-10));
    let mean_degree: f64 = q.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
    out.push(Check::le("|sum k q(k) - 2| at gamma = 1/2", "1/2", 0, 0, (mean_degree - 2.0).abs(), 1e-9));
    for (g, limit) in [("1", (1..=5).map(linear_limit).collect::<Vec<_>>()), ("1/2", q[..5].to_vec())] {
        let mut t = SimulationConfig::new(gamma(g), n, ctx.seed.wrapping_add(8));
        t.checks = CheckLevel::Off;
        let ens = parallel::run_ensemble(&EnsembleConfig::new(t, 20), ctx.workers)?;
        let last = ens.at(n)?;
        for (k, &lim) in limit.iter().enumerate() {
            let k = k as u64 + 1;
            let m = mean(last.iter().map(|cp| cp.count(k) as f64 / n as f64));
            out.push(Check::le(format!("|mean Z_{k}/n / limit - 1|"), g, n, 20, (m / lim - 1.0).abs(), 0.10));
        }
    }
    Ok(out)
}

/// Wall time of one `10^7`-step trajectory in each mode on this thread.
pub fn performance() -> AppResult<Vec<Check>> {
    let n = 10_000_000;
    let mut out = Vec::new();
    for (mode, budget, name) in [(Mode::Histogram, 5.0, "histogram"), (Mode::Tracked, 15.0, "tracked")] {
        let mut c = SimulationConfig::new(gamma("5/4"), n, 9);
        c.mode = mode;
        c.checks = CheckLevel::Off;
        let start = Instant::now();
        trajectory::run(&c)?;
        out.push(Check::le(format!("seconds for 1e7 steps, {name} mode"), "5/4", n, 1, start.elapsed().as_secs_f64(), budget));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Quick,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub profile: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub coefficient_tables: Vec<Value>,
}

/// Runs a profile. `timing` adds the wall-clock budget checks, whose
/// statistics differ from run to run.
pub fn run_profile(profile: Profile, ctx: Ctx, timing: bool, mut progress: impl FnMut(&str)) -> AppResult<Report> {
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let five_quarters = solve_coefficients(&gamma("5/4"))?;
    tables.push(coefficients_json(&five_quarters));
    match profile {
        Profile::Quick => {
            progress("invariants");
            checks.extend(invariant_suite(ctx, "5/4", 100_000, 50)?);
            progress("martingales");
            let mut t = SimulationConfig::new(gamma("5/4"), 100_000, ctx.seed.wrapping_add(1));
            t.k_track = Some(default_k_track(&t.gamma));
            t.checks = CheckLevel::Checkpoints;
            let ens = parallel::run_ensemble(&EnsembleConfig::new(t, 50), ctx.workers)?;
            checks.extend(martingale_zero_mean(&ens, 100_000)?);
            progress("coefficients");
            checks.extend(coefficient_consistency("5/4", &[100_000])?);
            progress("oracle");
            checks.extend(oracle_equivalence(ctx, "5/4", 6, 100_000)?);
        }
        Profile::Full => {
            for g in ["1/2", "1", "5/4", "2", "3"] {
                progress(&format!("invariants γ={g}"));
                checks.extend(invariant_suite(ctx, g, 100_000, 20)?);
            }
            progress("coefficients");
            checks.extend(coefficients_at_five_quarters()?);
            for g in ["5/4", "4/3", "3/2"] {
                checks.extend(coefficient_consistency(g, &[100_000, 1_000_000])?);
            }
            for g in ["2", "3"] {
                tables.push(coefficients_json(&leading_coefficients(&gamma(g))?));
            }
            for g in ["5/4", "2", "3"] {
                progress(&format!("oracle γ={g}"));
                checks.extend(oracle_equivalence(ctx, g, 7, 1_000_000)?);
            }
            checks.push(z1_at_three(ctx, 1_000_000)?);
            progress("condensation ensemble");
            let ens = condensation_ensemble(ctx)?;
            checks.extend(law_of_large_numbers(&ens)?);
            checks.extend(fixation(&ens)?);
            progress("fluctuation ensemble");
            let ens = clt_ensemble(ctx)?;
            checks.extend(central_limit(&ens, &five_quarters)?);
            progress("γ=3 ensemble");
            checks.extend(below_two_regime(ctx)?);
            progress("cross-regime ensembles");
            checks.extend(cross_regime(ctx)?);
            if timing {
                progress("timing");
                checks.extend(performance()?);
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let profile = match profile {
        Profile::Quick => "quick",
        Profile::Full => "full",
    };
    Ok(Report { profile: profile.into(), pass, checks, coefficient_tables: tables })
}
