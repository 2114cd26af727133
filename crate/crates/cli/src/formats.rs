//! CSV trajectories and JSON coefficient tables.

use std::io::{Read, Write};

use condensa_core::asymptotics::{drift_polynomial, CoefficientTable, Target};
use condensa_core::ensemble::EnsembleResult;
use condensa_core::martingale::MartingaleSnapshot;
use condensa_core::{Checkpoint, Trajectory};
use serde_json::{json, Map, Value};

use crate::error::{AppError, AppResult};

pub fn trajectory_header(k_report: usize, k_track: Option<usize>) -> Vec<String> {
    let mut h: Vec<String> = ["n", "V", "S", "argmax"].map(String::from).into();
    h.extend((1..=k_report).map(|k| format!("Z_{k}")));
    h.extend((2..=k_report).map(|k| format!("Phi_{k}")));
    h.push("tail".into());
    if let Some(k) = k_track {
        h.extend((1..=k).map(|i| format!("M_{i}")));
        h.extend((1..=k).map(|i| format!("qvM_{i}")));
        h.extend((2..=k).map(|i| format!("Q_{i}")));
        h.extend((2..=k).map(|i| format!("qvQ_{i}")));
        h.push("R".into());
        h.push("qvR".into());
    }
    h
}

pub fn trajectory_row(cp: &Checkpoint) -> Vec<String> {
    let mut r = vec![
        cp.n.to_string(),
        cp.v.to_string(),
        cp.s.to_string(),
        cp.argmax.map_or_else(String::new, |a| a.to_string()),
    ];
    r.extend(cp.z.iter().map(u64::to_string));
    r.extend(cp.phi.iter().skip(1).map(u64::to_string));
    r.push(cp.tail.iter().map(|(k, c)| format!("{k}:{c}")).collect::<Vec<_>>().join(";"));
    if let Some(m) = &cp.martingale {
        let f = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>();
        r.extend(f(&m.m));
        r.extend(f(&m.qv_m));
        r.extend(f(&m.q));
        r.extend(f(&m.qv_q));
        r.push(m.r.to_string());
        r.push(m.qv_r.to_string());
    }
    r
}

fn k_track(t: &Trajectory) -> Option<usize> {
    t.checkpoints.first().and_then(|c| c.martingale.as_ref()).map(MartingaleSnapshot::k_track)
}

pub fn write_trajectory_csv<W: Write>(out: W, t: &Trajectory) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let k_report = t.checkpoints.first().map_or(0, Checkpoint::k_report);
    w.write_record(trajectory_header(k_report, k_track(t)))?;
    for cp in &t.checkpoints {
        w.write_record(trajectory_row(cp))?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))?;
    Ok(())
}

/// Long format: one row per replica and checkpoint.
pub fn write_ensemble_csv<W: Write>(out: W, ens: &EnsembleResult) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let first = &ens.replicas[0];
    let k_report = first.checkpoints.first().map_or(0, Checkpoint::k_report);
    let mut header = vec!["replica".to_string(), "seed".to_string()];
    header.extend(trajectory_header(k_report, k_track(first)));
    w.write_record(&header)?;
    for (r, t) in ens.replicas.iter().enumerate() {
        for cp in &t.checkpoints {
            let mut row = vec![r.to_string(), t.seed.to_string()];
            row.extend(trajectory_row(cp));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))?;
    Ok(())
}

fn bad(what: impl Into<String>) -> AppError {
    AppError::Usage(format!("malformed trajectory csv: {}", what.into()))
}

/// Reads back what [`write_trajectory_csv`] wrote.
pub fn read_trajectory_csv<R: Read>(input: R) -> AppResult<Vec<Checkpoint>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let k_report = header.iter().filter(|h| h.starts_with("Z_")).count();
    let k_track = header.iter().filter(|h| h.starts_with("M_")).count();
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let mut next = || it.next().ok_or_else(|| bad("short row"));
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("{s:?} is not an integer")));
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("{s:?} is not a number")));
        let n = int(next()?)?;
        let v = int(next()?)?;
        let s = float(next()?)?;
        let argmax = match next()? {
            "" => None,
            a => Some(a.parse::<u32>().map_err(|_| bad("argmax"))?),
        };
        let z = (0..k_report).map(|_| int(next()?)).collect::<AppResult<Vec<_>>>()?;
        let mut phi = vec![n + 1];
        for _ in 1..k_report {
            phi.push(int(next()?)?);
        }
        let tail_field = next()?;
        let tail = if tail_field.is_empty() {
            Vec::new()
        } else {
            tail_field
                .split(';')
                .map(|p| {
                    let (k, c) = p.split_once(':').ok_or_else(|| bad(format!("tail entry {p:?}")))?;
                    Ok((int(k)?, int(c)?))
                })
                .collect::<AppResult<Vec<_>>>()?
        };
        let martingale = if k_track > 0 {
            let mut vec_of = |len: usize| (0..len).map(|_| float(next()?)).collect::<AppResult<Vec<_>>>();
            let m = vec_of(k_track)?;
            let qv_m = vec_of(k_track)?;
            let q = vec_of(k_track - 1)?;
            let qv_q = vec_of(k_track - 1)?;
            let r = vec_of(2)?;
            Some(MartingaleSnapshot { n, m, qv_m, q, qv_q, r: r[0], qv_r: r[1] })
        } else {
            None
        };
        out.push(Checkpoint { n, z, tail, phi, s, v, argmax, martingale });
    }
    Ok(out)
}

fn series_json(s: &condensa_core::AsymptoticSeries) -> Value {
    Value::Array(
        s.terms()
            .iter()
            .map(|(g, c)| json!({ "coeff": c, "exponent": g.power.to_string(), "is_log": g.log }))
            .collect(),
    )
}

/// Targets whose drift the table determines.
pub fn clt_targets(table: &CoefficientTable) -> Vec<Target> {
    (2..=table.regime.a())
        .map(Target::Z)
        .chain([Target::Z1MinusN, Target::MinusZ2, Target::VMinusN])
        .filter(|&t| drift_polynomial(table, t).is_ok())
        .collect()
}

/// The `coeffs` document. Exponents are exact rationals written as strings.
pub fn coefficients_json(table: &CoefficientTable) -> Value {
    let r = &table.regime;
    let mut c = Map::new();
    for (&(k, l), &v) in &table.c {
        c.insert(format!("{k},{l}"), json!(v));
    }
    let keyed = |m: &std::collections::BTreeMap<usize, f64>| {
        Value::Object(m.iter().map(|(l, v)| (l.to_string(), json!(v))).collect())
    };
    let mut variances = Map::new();
    let mut drifts = Map::new();
    for target in clt_targets(table) {
        if let Ok(d) = drift_polynomial(table, target) {
            variances.insert(target.to_string(), json!(d.variance));
            drifts.insert(target.to_string(), series_json(&d.drift));
        }
    }
    json!({
        "gamma": table.gamma.to_string(),
        "A": r.a(),
        "critical": r.critical().to_string(),
        "critical_is_integer": r.critical_is_integer(),
        "two_star": r.two_star(),
        "kstar": Value::Object((2..=r.a()).map(|k| (k.to_string(), json!(r.kstar(k)))).collect()),
        "a": table.a,
        "b": table.b_critical,
        "c": c,
        "c1": keyed(&table.c1),
        "m": keyed(&table.m),
        "variances": variances,
        "drift_polynomials": drifts,
    })
}
