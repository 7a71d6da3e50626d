//! Classical optimizers sharing one budget and trace contract.
//!
//! Every optimizer calls the objective through an evaluator that stops it
//! once `max_evals` evaluations have been made, so budgets are never exceeded.
//! Results carry the best evaluated point and a full per-evaluation trace.

mod cg;
mod nelder_mead;
mod nft;
mod powell;
mod spsa;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cg::{cg_fd, DEFAULT_FD_STEP};
pub use nelder_mead::nelder_mead;
pub use nft::nft;
pub use powell::powell;
pub use spsa::{spsa, spsa_with, SpsaGains};

/// Default evaluation budget.
pub const DEFAULT_MAX_EVALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evals: usize,
    /// Method-specific convergence tolerance.
    pub target_tol: f64,
    /// Iterations without a new best cost before stopping.
    pub max_stall: usize,
    /// Record wall-clock times in the trace; zeros otherwise.
    pub record_time: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_evals: DEFAULT_MAX_EVALS,
            target_tol: 1e-8,
            max_stall: usize::MAX,
            record_time: true,
        }
    }
}

impl Budget {
    pub fn evals(max_evals: usize) -> Self {
        Self {
            max_evals,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 || self.max_stall == 0 || !(self.target_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid budget {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Converged,
    Budget,
    Stalled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::Budget => "budget",
            Termination::Stalled => "stalled",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Self::Converged),
            "budget" => Ok(Self::Budget),
            "stalled" => Ok(Self::Stalled),
            _ => Err(Error::Parse(format!("unknown termination {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based evaluation counter.
    pub eval_index: usize,
    pub cost: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    /// Best evaluated parameters.
    pub x: Vec<f64>,
    pub cost: f64,
    /// Final iterate of the method; may differ from `x` and need not have been evaluated.
    pub x_last: Vec<f64>,
    pub evals: usize,
    pub termination: Termination,
    pub trace: Vec<TracePoint>,
}

impl OptResult {
    /// Running minimum of the trace costs.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|t| {
                best = best.min(t.cost);
                best
            })
            .collect()
    }
}

/// Raised inside an optimizer when the budget is used up.
#[derive(Debug)]
pub(crate) struct Exhausted;

pub(crate) type Step<T> = std::result::Result<T, Exhausted>;

pub(crate) struct Evaluator<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    max_evals: usize,
    record_time: bool,
    start: Instant,
    trace: Vec<TracePoint>,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(f: &'a mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: &Budget) -> Self {
        Self {
            f,
            max_evals: budget.max_evals,
            record_time: budget.record_time,
            start: Instant::now(),
            trace: Vec::new(),
            best_x: x0.to_vec(),
            best_f: f64::INFINITY,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Step<f64> {
        if self.trace.len() >= self.max_evals {
            return Err(Exhausted);
        }
        let v = (self.f)(x);
        let wall_time_ms = if self.record_time {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.trace.push(TracePoint {
            eval_index: self.trace.len() + 1,
            cost: v,
            wall_time_ms,
        });
        if v < self.best_f {
            self.best_f = v;
            self.best_x.copy_from_slice(x);
        }
        Ok(v)
    }

    pub fn remaining(&self) -> usize {
        self.max_evals - self.trace.len()
    }

    pub fn best(&self) -> f64 {
        self.best_f
    }

    pub fn finish(self, outcome: Step<Termination>, x_last: Vec<f64>) -> OptResult {
        OptResult {
            x: self.best_x,
            cost: self.best_f,
            x_last,
            evals: self.trace.len(),
            termination: outcome.unwrap_or(Termination::Budget),
            trace: self.trace,
        }
    }
}

/// Counts iterations without a strict improvement of the best cost.
pub(crate) struct StallCounter {
    best: f64,
    idle: usize,
    limit: usize,
}

impl StallCounter {
    pub fn new(limit: usize) -> Self {
        Self {
            best: f64::INFINITY,
            idle: 0,
            limit,
        }
    }

    /// True once `limit` consecutive iterations brought no improvement.
    pub fn stalled(&mut self, best: f64) -> bool {
        if best < self.best {
            self.best = best;
            self.idle = 0;
        } else {
            self.idle += 1;
        }
        self.idle >= self.limit
    }
}

pub const OPTIMIZERS: [&str; 5] = ["nelder-mead", "powell", "spsa", "nft", "cg"];
pub const OUT_OF_SCOPE: [&str; 3] = ["cobyla", "slsqp", "umda"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    NelderMead,
    Powell,
    Spsa,
    Nft,
    Cg,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NelderMead => "nelder-mead",
            Self::Powell => "powell",
            Self::Spsa => "spsa",
            Self::Nft => "nft",
            Self::Cg => "cg",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "nelder-mead" | "neldermead" | "nm" => Self::NelderMead,
            "powell" => Self::Powell,
            "spsa" => Self::Spsa,
            "nft" => Self::Nft,
            "cg" => Self::Cg,
            _ => {
                let hint = if OUT_OF_SCOPE.contains(&key.as_str()) {
                    format!(
                        "not implemented (out of scope: {}); available: {}",
                        OUT_OF_SCOPE.join(", "),
                        OPTIMIZERS.join(", ")
                    )
                } else {
                    format!("available: {}", OPTIMIZERS.join(", "))
                };
                return Err(Error::UnknownOptimizer {
                    name: s.to_string(),
                    hint,
                });
            }
        })
    }
}

/// Dispatches by registry name with default hyperparameters.
pub fn run_optimizer(
    name: &str,
    obj: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    budget: &Budget,
    seed: u64,
) -> Result<OptResult> {
    budget.validate()?;
    let kind: OptimizerKind = name.parse()?;
    Ok(run_kind(kind, obj, x0, budget, seed))
}

pub fn run_kind(
    kind: OptimizerKind,
    obj: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    budget: &Budget,
    seed: u64,
) -> OptResult {
    match kind {
        OptimizerKind::NelderMead => nelder_mead(obj, x0, budget),
        OptimizerKind::Powell => powell(obj, x0, budget),
        OptimizerKind::Spsa => spsa(obj, x0, budget, seed),
        OptimizerKind::Nft => nft(obj, x0, budget),
        OptimizerKind::Cg => cg_fd(obj, x0, budget, DEFAULT_FD_STEP),
    }
}

/// Writes `eval_index,cost,wall_time_ms` rows.
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in trace {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TracePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    for (i, want) in ["eval_index", "cost", "wall_time_ms"].iter().enumerate() {
        if headers.get(i) != Some(want) {
            return Err(Error::Parse(format!(
                "trace column {i} should be {want:?}, found {:?}",
                headers.get(i)
            )));
        }
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
