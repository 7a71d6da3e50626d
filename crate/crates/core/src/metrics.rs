//! Feasibility and tour-length ratios, approximation ratios and the
//! feasibility transition fit.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::encoding::{decode_tsp, encode_tsp_path, BitString};
use crate::error::{Error, Result};
use crate::instance::TspInstance;
use crate::optimize::{nelder_mead, Budget};
use crate::oracle::for_each_tour;
use crate::variational::PreparedState;

/// Rendering of an undefined `m_len`.
pub const UNDEFINED: &str = "---";

/// `m_feas`: probability of a feasible tour. `m_len`: `L_opt` over the mean
/// length of the feasible part, `None` when nothing is feasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPair {
    pub m_len: Option<f64>,
    pub m_feas: f64,
}

impl fmt::Display for MetricPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m_len {
            Some(l) => write!(f, "({l:.4}, {:.4})", self.m_feas),
            None => write!(f, "({UNDEFINED}, {:.4})", self.m_feas),
        }
    }
}

fn check_l_opt(l_opt: f64) -> Result<()> {
    if !(l_opt > 0.0 && l_opt.is_finite()) {
        return Err(Error::InvalidArgument(format!("L_opt = {l_opt} must be > 0")));
    }
    Ok(())
}

fn pair(feasible_mass: f64, weighted_length: f64, total: f64, l_opt: f64) -> MetricPair {
    let m_feas = feasible_mass / total;
    let m_len = (feasible_mass > 0.0).then(|| l_opt * feasible_mass / weighted_length);
    MetricPair { m_len, m_feas }
}

/// Metric pair of an exact state over the TSP register of `inst`.
pub fn metrics_exact(state: &PreparedState, inst: &TspInstance, l_opt: f64) -> Result<MetricPair> {
    check_l_opt(l_opt)?;
    let n = inst.n();
    if state.qubits() != (n - 1) * (n - 1) {
        return Err(Error::LengthMismatch {
            expected: (n - 1) * (n - 1),
            actual: state.qubits(),
        });
    }
    let (mut mass, mut weighted) = (0.0, 0.0);
    let mut err = None;
    for_each_tour(n, |t| match encode_tsp_path(t) {
        Ok(x) => {
            let p = state.probability(x.index());
            mass += p;
            weighted += p * inst.tour_length(t);
        }
        Err(e) => err = Some(e),
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(pair(mass, weighted, 1.0, l_opt))
}

/// Metric pair of measured counts. Estimates from few shots have high variance.
pub fn metrics_shots(counts: &BTreeMap<BitString, u64>, inst: &TspInstance, l_opt: f64) -> Result<MetricPair> {
    check_l_opt(l_opt)?;
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("no shots".into()));
    }
    let (mut mass, mut weighted) = (0.0, 0.0);
    for (x, &c) in counts {
        if let Some(t) = decode_tsp(x, inst.n())?.tour() {
            mass += c as f64;
            weighted += c as f64 * inst.tour_length(t);
        }
    }
    Ok(pair(mass, weighted, total as f64, l_opt))
}

/// `E / E_opt`.
pub fn approximation_ratio(e: f64, e_opt: f64) -> Result<f64> {
    if e_opt == 0.0 || !e_opt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "approximation ratio needs a nonzero optimal energy, got {e_opt}"
        )));
    }
    Ok(e / e_opt)
}

/// `0.99338` renders as `99.34%`.
pub fn format_percent(ratio: f64) -> String {
    format!("{:.2}%", 100.0 * ratio)
}

/// `m_feas ~ a * atan(b * (e0 - E)) + c` with `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionFit {
    pub a: f64,
    pub b: f64,
    pub e0: f64,
    pub c: f64,
    pub sse: f64,
}

impl TransitionFit {
    pub fn eval(&self, e: f64) -> f64 {
        self.a * (self.b * (self.e0 - e)).atan() + self.c
    }

    /// `e0 / E_opt`.
    pub fn relative_threshold(&self, e_opt: f64) -> Result<f64> {
        approximation_ratio(self.e0, e_opt)
    }
}

pub const MIN_FIT_RECORDS: usize = 8;

/// Least-squares arctan fit of `(energy, m_feas)` records.
///
/// Energies are standardized, then Nelder-Mead minimizes the squared error
/// from a grid of starts over the slope and transition position; the best
/// fit is mapped back to the original units.
pub fn transition_fit(records: &[(f64, f64)]) -> Result<TransitionFit> {
    if records.len() < MIN_FIT_RECORDS {
        return Err(Error::InvalidArgument(format!(
            "transition fit needs at least {MIN_FIT_RECORDS} records, got {}",
            records.len()
        )));
    }
    if records.iter().any(|(e, m)| !e.is_finite() || !m.is_finite()) {
        return Err(Error::InvalidArgument("non-finite record".into()));
    }
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.0).sum::<f64>() / n;
    let std = (records.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let (mlo, mhi) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.1), hi.max(r.1)));
    if std <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Degenerate("all records have the same energy".into()));
    }
    if mhi - mlo <= 1e-12 {
        return Err(Error::Degenerate("feasibility does not vary across records".into()));
    }
    let data: Vec<(f64, f64)> = records.iter().map(|&(e, m)| ((e - mean) / std, m)).collect();
    let sse = |p: &[f64]| -> f64 {
        data.iter()
            .map(|&(e, m)| (p[0] * (p[1] * (p[2] - e)).atan() + p[3] - m).powi(2))
            .sum()
    };
    let mut sorted: Vec<f64> = data.iter().map(|d| d.0).collect();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    let a0 = (mhi - mlo) / std::f64::consts::PI;
    let c0 = 0.5 * (mhi + mlo);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for b0 in [0.3, 1.0, 3.0, 10.0, 30.0] {
        for q in [0.2, 0.35, 0.5, 0.65, 0.8] {
            let x0 = [a0, b0, quantile(q), c0];
            let mut f = |p: &[f64]| sse(p);
            let r = nelder_mead(
                &mut f,
                &x0,
                &Budget {
                    target_tol: 1e-14,
                    record_time: false,
                    ..Budget::evals(4000)
                },
            );
            if best.as_ref().map_or(true, |b| r.cost < b.1) {
                best = Some((r.x, r.cost));
            }
        }
    }
    let (p, cost) = best.expect("at least one start");
    let (mut a, mut b) = (p[0], p[1]);
    if b < 0.0 {
        a = -a;
        b = -b;
    }
    Ok(TransitionFit {
        a,
        b: b / std,
        e0: p[2] * std + mean,
        c: p[3],
        sse: cost,
    })
}

/// One experiment row; see [`RUN_RECORD_COLUMNS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub algorithm: String,
    pub ansatz: String,
    pub optimizer: String,
    pub seed: u64,
    pub n: usize,
    pub penalty: f64,
    pub scaling: f64,
    pub depth: usize,
    pub energy: f64,
    pub energy_opt: f64,
    pub approx_ratio: f64,
    pub m_feas: f64,
    #[serde(serialize_with = "ser_opt", deserialize_with = "de_opt")]
    pub m_len: Option<f64>,
    pub circuit_evals: usize,
    pub wall_time_ms: f64,
    pub termination: String,
}

pub const RUN_RECORD_COLUMNS: [&str; 17] = [
    "run_id",
    "algorithm",
    "ansatz",
    "optimizer",
    "seed",
    "n",
    "penalty",
    "scaling",
    "depth",
    "energy",
    "energy_opt",
    "approx_ratio",
    "m_feas",
    "m_len",
    "circuit_evals",
    "wall_time_ms",
    "termination",
];

fn ser_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str(UNDEFINED),
    }
}

fn de_opt<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    let s = String::deserialize(d)?;
    if s.trim() == UNDEFINED {
        return Ok(None);
    }
    s.trim().parse().map(Some).map_err(serde::de::Error::custom)
}

pub fn write_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(RUN_RECORD_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records, failing with the name of the first missing or misplaced column.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    for (k, want) in RUN_RECORD_COLUMNS.iter().enumerate() {
        if header.get(k) != Some(*want) {
            return Err(Error::Parse(format!(
                "run record schema: expected column {want:?} at position {k}, found {:?}",
                header.get(k).unwrap_or("<missing>")
            )));
        }
    }
    if header.len() != RUN_RECORD_COLUMNS.len() {
        return Err(Error::Parse(format!(
            "run record schema: unexpected extra column {:?}",
            header.get(RUN_RECORD_COLUMNS.len()).unwrap_or_default()
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
