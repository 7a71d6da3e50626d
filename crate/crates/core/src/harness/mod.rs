//! Experiment orchestration behind the `qvrp` command line.

mod config;
mod landscape;
mod report;
mod run;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    derive_seed, AlgorithmConfig, AnsatzKind, Cell, ExperimentConfig, InitKind, InstanceSource, OptimizerConfig,
    PenaltyKeyword, PenaltySpec, ScalingKeyword, ScalingSpec, SweepConfig, AUTO_PENALTY_FACTOR,
};
pub use landscape::{grid_axis, random_plane, scan, LandscapeScan};
pub use report::{read_all, render_table, summarize, write_summary_csv, SummaryRow, SUMMARY_COLUMNS};
pub use run::{
    initial_params, nearest_neighbour_tour, run_experiment, run_experiment_on, run_seed, run_single, CellProblem,
    Context, ResolvedCell, RunOptions, RunOutput,
};

use crate::encoding::build_tsp_qubo;
use crate::error::{Error, Result};
use crate::instance::TspInstance;
use crate::metrics::{write_records, RunRecord};
use crate::optimize::write_trace_csv;
use crate::oracle::{
    enumerate_spectrum, optimal_tsp, p_min, scaling_from_gap, scaling_from_width, uniform_baseline, MAX_PMIN_CITIES,
};

/// Ground-truth summary of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    #[serde(rename = "L_opt")]
    pub l_opt: f64,
    pub tour: Vec<usize>,
    pub p_min: f64,
    /// Penalty of the QUBO (at `s = 1`) whose spectrum is reported.
    pub penalty: f64,
    pub gap: Option<f64>,
    pub width: f64,
    pub scaling_gap: Option<f64>,
    pub scaling_width: f64,
    /// Length ratio of the uniform superposition.
    pub c: f64,
    /// Feasibility of the uniform superposition.
    pub f: f64,
}

/// `penalty = None` uses `1.2 * P_min`.
pub fn oracle_report(inst: &TspInstance, penalty: Option<f64>) -> Result<OracleReport> {
    if inst.n() > MAX_PMIN_CITIES {
        return Err(Error::BoundExceeded {
            what: "oracle cities",
            actual: inst.n(),
            limit: MAX_PMIN_CITIES,
        });
    }
    let (tour, l_opt) = optimal_tsp(inst)?;
    let pm = p_min(inst)?;
    let penalty = match penalty {
        Some(p) => p,
        None if pm > 0.0 => AUTO_PENALTY_FACTOR * pm,
        None => return Err(Error::Degenerate("P_min is zero; pass an explicit penalty".into())),
    };
    let spec = enumerate_spectrum(&build_tsp_qubo(inst, 1.0, penalty)?)?;
    let base = uniform_baseline(inst)?;
    Ok(OracleReport {
        l_opt,
        tour,
        p_min: pm,
        penalty,
        gap: spec.gap(),
        width: spec.width(),
        scaling_gap: scaling_from_gap(&spec).ok(),
        scaling_width: scaling_from_width(&spec)?,
        c: base.c,
        f: base.f,
    })
}

fn sibling(out: &Path, suffix: &str, ext: Option<&str>) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("runs");
    let name = match ext {
        Some(e) => format!("{stem}{suffix}.{e}"),
        None => format!("{stem}{suffix}"),
    };
    out.with_file_name(name)
}

/// Runs the single cell of `cfg`, writing records to `out` and one optimizer
/// trace per run into the sibling directory `<stem>_traces`.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<Vec<RunRecord>> {
    let cells = cfg.cells().len();
    if cells != 1 {
        return Err(Error::InvalidArgument(format!(
            "solve runs one cell but the config spans {cells}; use sweep"
        )));
    }
    let outputs = run_experiment(cfg, opts)?;
    let records: Vec<RunRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    write_records(out, &records)?;
    let dir = sibling(out, "_traces", None);
    std::fs::create_dir_all(&dir)?;
    for o in &outputs {
        if !o.trace.is_empty() {
            write_trace_csv(dir.join(format!("{}.csv", o.record.run_id)), &o.trace)?;
        }
    }
    Ok(records)
}

/// Runs every cell, writing records to `out` and the per-cell summary to `<stem>_summary.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<Vec<SummaryRow>> {
    let outputs = run_experiment(cfg, opts)?;
    let records: Vec<RunRecord> = outputs.into_iter().map(|o| o.record).collect();
    write_records(out, &records)?;
    let rows = summarize(&records);
    write_summary_csv(sibling(out, "_summary", Some("csv")), &rows)?;
    Ok(rows)
}

/// Energy (Ising units, as in run records) over a random plane through the
/// seeded initial parameters of the first cell.
pub fn cmd_landscape(cfg: &ExperimentConfig, extent: f64, resolution: usize, seed: u64) -> Result<LandscapeScan> {
    cfg.validate()?;
    let ctx = Context::new(cfg.instance.load()?)?;
    let cell = cfg.cells()[0];
    let prob = CellProblem::new(&ctx, cell)?;
    let circuit = prob.circuit(&ctx, cfg.algorithm.ansatz)?;
    let center = initial_params(&circuit, cfg.algorithm.init, seed)?;
    let plane = random_plane(center.len(), derive_seed(seed, 1))?;
    let constant = prob.constant;
    let cost = |x: &[f64]| circuit.cost(x).map_or(f64::NAN, |c| c - constant);
    scan(&cost, &center, plane, extent, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random_tsp;

    #[test]
    fn oracle_n4() {
        let inst = generate_random_tsp(4, 0, 10.0, 50.0).unwrap();
        let r = oracle_report(&inst, None).unwrap();
        assert!(r.p_min > 0.0);
        assert!((r.penalty - 1.2 * r.p_min).abs() < 1e-12);
        assert!((r.f - 6.0 / 512.0).abs() < 1e-15);
        let j = serde_json::to_value(&r).unwrap();
        for k in ["L_opt", "tour", "p_min", "gap", "width", "c", "f", "scaling_gap", "scaling_width"] {
            assert!(j.get(k).is_some(), "{k}");
        }
        let big = generate_random_tsp(12, 0, 10.0, 50.0).unwrap();
        assert!(oracle_report(&big, None).unwrap_err().is_resource_bound());
    }

    #[test]
    fn solve_writes_records_and_traces() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("runs.csv");
        let cfg = ExperimentConfig::parse(
            r#"{"instance": {"random": {"n": 4, "seed": 1}}, "algorithm": {"ansatz": "hevqe"},
                "optimizer": {"name": "spsa", "max_evals": 30, "seeds": [4, 5]}, "sweep": {"penalties": [100]}}"#,
        )
        .unwrap();
        let recs = cmd_solve(&cfg, &out, RunOptions { record_time: false }).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(crate::metrics::read_records(&out).unwrap(), recs);
        let traces: Vec<_> = std::fs::read_dir(dir.path().join("runs_traces")).unwrap().collect();
        assert_eq!(traces.len(), 2);
        // A single-cell sweep writes the same records.
        let out2 = dir.path().join("sweep.csv");
        let rows = cmd_sweep(&cfg, &out2, RunOptions { record_time: false }).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
        assert!(dir.path().join("sweep_summary.csv").exists());
    }

    #[test]
    fn landscape_shapes() {
        let cfg = ExperimentConfig::parse(
            r#"{"instance": {"random": {"n": 4, "seed": 1}}, "algorithm": {"ansatz": "qaoa"},
                "sweep": {"penalties": [100], "depths": [5]}}"#,
        )
        .unwrap();
        let s = cmd_landscape(&cfg, 1.0, 5, 3).unwrap();
        assert_eq!(s.samples.len(), 25);
        assert_eq!(s.center.len(), 10);
        let single = cmd_landscape(&cfg, 0.0, 101, 3).unwrap();
        assert_eq!(single.samples.len(), 1);
    }
}
