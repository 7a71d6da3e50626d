use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{derive_seed, AnsatzKind, Cell, ExperimentConfig, InitKind, PenaltySpec, ScalingKeyword, ScalingSpec};
use crate::encoding::{build_tsp_qubo, QuboProblem};
use crate::error::{Error, Result};
use crate::instance::TspInstance;
use crate::metrics::{approximation_ratio, metrics_exact, metrics_shots, MetricPair, RunRecord};
use crate::optimize::{run_kind, Budget, OptimizerKind, Termination, TracePoint};
use crate::oracle::{optimal_tsp, p_min, scaling_ground_state_gap, scaling_spectral_width, MAX_SPECTRUM_DIM};
use crate::statevector::{DiagonalEnergy, MAX_CACHED_QUBITS};
use crate::variational::{
    linear_init, random_init, rqaoa_run, ws_relax, AnsatzSpec, Circuit, CorrelationSource, PreparedState,
    LINEAR_INIT_DT,
};

/// Instance data shared by every cell of an experiment.
pub struct Context {
    pub inst: TspInstance,
    pub tour_opt: Vec<usize>,
    pub l_opt: f64,
    pmin: OnceLock<f64>,
}

impl Context {
    pub fn new(inst: TspInstance) -> Result<Self> {
        let (tour_opt, l_opt) = optimal_tsp(&inst)?;
        if l_opt <= 0.0 {
            return Err(Error::Degenerate("optimal tour has zero length".into()));
        }
        Ok(Self {
            inst,
            tour_opt,
            l_opt,
            pmin: OnceLock::new(),
        })
    }

    /// `P_min`, computed on first use.
    pub fn p_min(&self) -> Result<f64> {
        if let Some(v) = self.pmin.get() {
            return Ok(*v);
        }
        let v = p_min(&self.inst)?;
        Ok(*self.pmin.get_or_init(|| v))
    }

    pub fn penalty(&self, spec: &PenaltySpec) -> Result<f64> {
        match (spec, spec.pmin_factor()) {
            (PenaltySpec::Value(v), _) => Ok(*v),
            (_, Some(f)) => {
                let p = f * self.p_min()?;
                if p > 0.0 {
                    Ok(p)
                } else {
                    Err(Error::Degenerate("P_min is zero; give an explicit penalty".into()))
                }
            }
            _ => unreachable!("every non-value penalty has a factor"),
        }
    }

    /// Scaling factor `s` for penalty `p`.
    pub fn scaling(&self, spec: &ScalingSpec, p: f64) -> Result<f64> {
        match spec {
            ScalingSpec::Fixed(v) => Ok(*v),
            ScalingSpec::Named(ScalingKeyword::None) => Ok(1.0),
            ScalingSpec::Named(k) => {
                let q = build_tsp_qubo(&self.inst, 1.0, p)?;
                match k {
                    ScalingKeyword::Gap => scaling_ground_state_gap(&q),
                    _ => scaling_spectral_width(&q),
                }
            }
        }
    }
}

/// A cell with its penalty and scaling resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedCell {
    pub cell: Cell,
    pub penalty: f64,
    pub scaling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub trace: Vec<TracePoint>,
}

/// Options that do not change results (except wall times).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub record_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_time: true }
    }
}

fn min_energy(qubo: &QuboProblem) -> Result<f64> {
    if qubo.dim() > MAX_SPECTRUM_DIM {
        return Err(Error::BoundExceeded {
            what: "QUBO dimension for enumeration",
            actual: qubo.dim(),
            limit: MAX_SPECTRUM_DIM,
        });
    }
    let mut m = f64::INFINITY;
    qubo.for_each_energy(|_, e| m = m.min(e));
    Ok(m)
}

/// Nearest-neighbour tour from city 0; lowest index on ties.
pub fn nearest_neighbour_tour(inst: &TspInstance) -> Vec<usize> {
    let n = inst.n();
    let mut tour = vec![0];
    let mut left: Vec<usize> = (1..n).collect();
    while !left.is_empty() {
        let last = *tour.last().expect("non-empty");
        let (k, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| inst.dist(last, *a.1).total_cmp(&inst.dist(last, *b.1)))
            .expect("non-empty");
        tour.push(left.remove(k));
    }
    tour
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::Budget => "budget",
        Termination::Stalled => "stalled",
    }
}

/// Problem data of a resolved cell shared by its runs.
pub struct CellProblem {
    pub resolved: ResolvedCell,
    pub qubo: QuboProblem,
    pub energy: DiagonalEnergy,
    /// Ising constant subtracted from reported energies.
    pub constant: f64,
    pub energy_opt: f64,
}

impl CellProblem {
    pub fn new(ctx: &Context, cell: Cell) -> Result<Self> {
        let penalty = ctx.penalty(&cell.penalty)?;
        let scaling = ctx.scaling(&cell.scaling, penalty)?;
        let qubo = build_tsp_qubo(&ctx.inst, scaling, penalty)?;
        let constant = qubo.to_ising().constant();
        let energy_opt = min_energy(&qubo)? - constant;
        let energy = if qubo.dim() <= MAX_CACHED_QUBITS {
            DiagonalEnergy::from_qubo(&qubo)?
        } else {
            DiagonalEnergy::on_the_fly(&qubo)?
        };
        Ok(Self {
            resolved: ResolvedCell { cell, penalty, scaling },
            qubo,
            energy,
            constant,
            energy_opt,
        })
    }

    pub fn circuit(&self, ctx: &Context, ansatz: AnsatzKind) -> Result<Circuit> {
        let depth = self.resolved.cell.depth;
        let spec = match ansatz {
            AnsatzKind::Qaoa => AnsatzSpec::Qaoa { depth },
            AnsatzKind::Hevqe => AnsatzSpec::Hevqe { layers: depth },
            AnsatzKind::WsQaoa => AnsatzSpec::WsQaoa {
                depth,
                relaxed: ws_relax(&self.qubo)?.x,
            },
            AnsatzKind::Aoa => AnsatzSpec::Aoa {
                depth,
                tour: nearest_neighbour_tour(&ctx.inst),
            },
            AnsatzKind::Rqaoa => {
                return Err(Error::InvalidArgument("rQAOA has no single circuit".into()))
            }
        };
        Circuit::new(spec, self.energy.clone())
    }
}

pub fn initial_params(circuit: &Circuit, init: InitKind, seed: u64) -> Result<Vec<f64>> {
    match (init, circuit.spec()) {
        (InitKind::Random, _) => Ok(random_init(circuit.param_count(), seed)),
        (InitKind::Linear, AnsatzSpec::Hevqe { .. }) => Err(Error::InvalidArgument(
            "linear initialization applies to alternating ansaetze only".into(),
        )),
        (InitKind::Linear, spec) => Ok(linear_init(spec.depth(), LINEAR_INIT_DT)),
    }
}

fn metrics_of(state: &PreparedState, ctx: &Context, shots: u64, seed: u64) -> Result<MetricPair> {
    if shots == 0 {
        metrics_exact(state, &ctx.inst, ctx.l_opt)
    } else {
        metrics_shots(&state.sample(shots, seed)?, &ctx.inst, ctx.l_opt)
    }
}

fn run_id(cfg: &ExperimentConfig, cell: &Cell, repeat: usize, seed: u64) -> String {
    format!(
        "{}-{}-P{}-s{}-d{}-r{}-seed{}",
        cfg.algorithm.ansatz.name(),
        cfg.optimizer.name,
        cell.penalty,
        cell.scaling,
        cell.depth,
        repeat,
        seed
    )
}

/// One optimization (or one rQAOA reduction) in a prepared cell.
pub fn run_single(
    ctx: &Context,
    cfg: &ExperimentConfig,
    prob: &CellProblem,
    circuit: Option<&Circuit>,
    repeat: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    let start = Instant::now();
    let kind: OptimizerKind = cfg.optimizer_kind()?;
    let budget = Budget {
        record_time: opts.record_time,
        ..Budget::evals(cfg.optimizer.max_evals)
    };
    let ansatz = cfg.algorithm.ansatz;
    let (energy, metrics, evals, termination, trace) = if ansatz == AnsatzKind::Rqaoa {
        let src = CorrelationSource::Qaoa {
            depth: prob.resolved.cell.depth,
            optimizer: kind,
            budget,
            seed,
        };
        let r = rqaoa_run(&prob.qubo.to_ising(), &src, cfg.algorithm.stop_dim)?;
        let counts = BTreeMap::from([(r.x.clone(), 1u64)]);
        let m = metrics_shots(&counts, &ctx.inst, ctx.l_opt)?;
        let term = if r.flags.is_empty() { "converged" } else { "flagged" };
        (r.energy - prob.constant, m, r.circuit_evals, term, Vec::new())
    } else {
        let circuit = circuit.ok_or_else(|| Error::InvalidArgument("missing circuit".into()))?;
        let x0 = initial_params(circuit, cfg.algorithm.init, seed)?;
        let mut obj = |p: &[f64]| circuit.cost(p).unwrap_or(f64::INFINITY);
        let res = run_kind(kind, &mut obj, &x0, &budget, seed);
        let state = circuit.prepare(&res.x)?;
        let m = metrics_of(&state, ctx, cfg.shots, seed)?;
        (
            res.cost - prob.constant,
            m,
            res.evals,
            termination_name(res.termination),
            res.trace,
        )
    };
    let wall = if opts.record_time {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let cell = &prob.resolved.cell;
    let record = RunRecord {
        run_id: run_id(cfg, cell, repeat, seed),
        algorithm: ansatz.algorithm().into(),
        ansatz: ansatz.name().into(),
        optimizer: cfg.optimizer.name.clone(),
        seed,
        n: ctx.inst.n(),
        penalty: prob.resolved.penalty,
        scaling: prob.resolved.scaling,
        depth: cell.depth,
        energy,
        energy_opt: prob.energy_opt,
        approx_ratio: approximation_ratio(energy, prob.energy_opt).unwrap_or(f64::NAN),
        m_feas: metrics.m_feas,
        m_len: metrics.m_len,
        circuit_evals: evals,
        wall_time_ms: wall,
        termination: termination.into(),
    };
    Ok(RunOutput { record, trace })
}

/// Seed of repeat `r` for configured seed `s`: `s` itself for the first repeat.
pub fn run_seed(seed: u64, repeat: usize) -> u64 {
    if repeat == 0 {
        seed
    } else {
        derive_seed(seed, repeat as u64)
    }
}

/// Runs every cell, seed and repeat in parallel. Output order is cell, then
/// repeat, then seed, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let ctx = Context::new(cfg.instance.load()?)?;
    run_experiment_on(&ctx, cfg, opts)
}

pub fn run_experiment_on(ctx: &Context, cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<RunOutput>> {
    let problems: Vec<(CellProblem, Option<Circuit>)> = cfg
        .cells()
        .into_iter()
        .map(|cell| {
            let prob = CellProblem::new(ctx, cell)?;
            let circuit = match cfg.algorithm.ansatz {
                AnsatzKind::Rqaoa => None,
                a => Some(prob.circuit(ctx, a)?),
            };
            Ok((prob, circuit))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize, u64)> = (0..problems.len())
        .flat_map(|c| {
            (0..cfg.repeats).flat_map(move |r| cfg.optimizer.seeds.iter().map(move |&s| (c, r, s)))
        })
        .collect();
    jobs.par_iter()
        .map(|&(c, r, s)| {
            let (prob, circuit) = &problems[c];
            run_single(ctx, cfg, prob, circuit.as_ref(), r, run_seed(s, r), opts)
        })
        .collect()
}
