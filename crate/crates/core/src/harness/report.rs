use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::metrics::{read_records, RunRecord, UNDEFINED};

/// Mean and sample standard deviation.
fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

fn pm(v: &[f64], prec: usize) -> String {
    match mean_std(v) {
        Some((m, s)) => format!("{m:.prec$} ± {s:.prec$}"),
        None => UNDEFINED.into(),
    }
}

/// Aggregate of the runs sharing algorithm, ansatz, optimizer, size, penalty, scaling and depth.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub ansatz: String,
    pub optimizer: String,
    pub n: usize,
    pub penalty: f64,
    pub scaling: f64,
    pub depth: usize,
    pub runs: usize,
    pub energy: String,
    pub approx_ratio: String,
    pub m_feas: String,
    /// Over runs with a defined `m_len`; `---` when there are none.
    pub m_len: String,
    /// Suffixed with `*` when more than half the runs exhausted the budget.
    pub circuit_evals: String,
    pub budget_exhausted: usize,
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "algorithm",
    "ansatz",
    "optimizer",
    "n",
    "penalty",
    "scaling",
    "depth",
    "runs",
    "energy",
    "approx_ratio",
    "m_feas",
    "m_len",
    "circuit_evals",
];

/// Groups in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let key = |r: &RunRecord| {
        (
            r.algorithm.clone(),
            r.ansatz.clone(),
            r.optimizer.clone(),
            r.n,
            r.penalty.to_bits(),
            r.scaling.to_bits(),
            r.depth,
        )
    };
    let mut groups: Vec<(_, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, rs)| {
            let col = |f: &dyn Fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let lens: Vec<f64> = rs.iter().filter_map(|r| r.m_len).collect();
            let exhausted = rs.iter().filter(|r| r.termination == "budget").count();
            let mut evals = pm(&col(&|r| r.circuit_evals as f64), 0);
            if 2 * exhausted > rs.len() {
                evals.push('*');
            }
            let first = rs[0];
            SummaryRow {
                algorithm: first.algorithm.clone(),
                ansatz: first.ansatz.clone(),
                optimizer: first.optimizer.clone(),
                n: first.n,
                penalty: first.penalty,
                scaling: first.scaling,
                depth: first.depth,
                runs: rs.len(),
                energy: pm(&col(&|r| r.energy), 4),
                approx_ratio: pm(&col(&|r| r.approx_ratio), 4),
                m_feas: pm(&col(&|r| r.m_feas), 4),
                m_len: pm(&lens, 4),
                circuit_evals: evals,
                budget_exhausted: exhausted,
            }
        })
        .collect()
}

fn cells(r: &SummaryRow) -> Vec<String> {
    vec![
        r.algorithm.clone(),
        r.ansatz.clone(),
        r.optimizer.clone(),
        r.n.to_string(),
        format!("{}", r.penalty),
        format!("{:.6}", r.scaling),
        r.depth.to_string(),
        r.runs.to_string(),
        r.energy.clone(),
        r.approx_ratio.clone(),
        r.m_feas.clone(),
        r.m_len.clone(),
        r.circuit_evals.clone(),
    ]
}

pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Column-aligned text table.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut table: Vec<Vec<String>> = vec![SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect()];
    table.extend(rows.iter().map(cells));
    let widths: Vec<usize> = (0..SUMMARY_COLUMNS.len())
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Reads and concatenates run CSVs; any schema mismatch names its column.
pub fn read_all(paths: &[impl AsRef<Path>]) -> Result<Vec<RunRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_records(p)?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(m_feas: f64, m_len: Option<f64>, term: &str, evals: usize) -> RunRecord {
        RunRecord {
            run_id: "x".into(),
            algorithm: "vqe".into(),
            ansatz: "hevqe".into(),
            optimizer: "nft".into(),
            seed: 0,
            n: 4,
            penalty: 100.0,
            scaling: 1.0,
            depth: 1,
            energy: -1.0,
            energy_opt: -1.0,
            approx_ratio: 1.0,
            m_feas,
            m_len,
            circuit_evals: evals,
            wall_time_ms: 0.0,
            termination: term.into(),
        }
    }

    #[test]
    fn aggregation() {
        let rows = summarize(&[
            rec(1.0, Some(1.0), "budget", 100),
            rec(0.5, Some(0.8), "budget", 100),
            rec(0.0, None, "converged", 40),
        ]);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.runs, 3);
        assert_eq!(r.m_feas, "0.5000 ± 0.5000");
        assert_eq!(r.m_len, "0.9000 ± 0.1414");
        assert!(r.circuit_evals.ends_with('*'));
        let none = summarize(&[rec(0.0, None, "converged", 5)]);
        assert_eq!(none[0].m_len, "---");
        assert!(!none[0].circuit_evals.ends_with('*'));
        assert!(render_table(&rows).lines().count() == 2);
    }
}
