use crate::encoding::{BitString, IsingHamiltonian};
use crate::error::{Error, Result};
use crate::optimize::{run_kind, Budget, OptimizerKind};
use crate::oracle::level_tol;
use crate::statevector::{DiagonalEnergy, StateVector, MAX_CACHED_QUBITS};

use super::qaoa::{linear_init, qaoa_prepare, LINEAR_INIT_DT};

/// Largest reduced problem solved by enumeration at the end of a run.
pub const MAX_ENUM_SPINS: usize = 20;

/// `<Z_i Z_j>` for all pairs under the distribution `probs` over `2^q` basis
/// states, row-major `q x q` with ones on the diagonal. Spins follow
/// `z = 2x - 1`; correlations do not depend on that sign choice.
pub fn zz_correlations(probs: &[f64], q: usize) -> Result<Vec<f64>> {
    if probs.len() != 1 << q {
        return Err(Error::LengthMismatch {
            expected: 1 << q,
            actual: probs.len(),
        });
    }
    let mut m = vec![0.0; q * q];
    for (idx, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let z = BitString::from_index(idx as u64, q).spins();
        for i in 0..q {
            for j in i + 1..q {
                m[i * q + j] += p * f64::from(z[i] * z[j]);
            }
        }
    }
    for i in 0..q {
        m[i * q + i] = 1.0;
        for j in i + 1..q {
            m[j * q + i] = m[i * q + j];
        }
    }
    Ok(m)
}

/// Exact `<Z_i Z_j>` matrix of a state.
pub fn rqaoa_correlations(state: &StateVector) -> Result<Vec<f64>> {
    zz_correlations(&state.probabilities(), state.qubits())
}

/// Imposes `z_j = sign * z_i` and removes spin `j`.
///
/// `J_ij` moves into the constant, `h_j` into `h_i` and every `J_jk` into
/// `J_ik`, each multiplied by `sign`. Later spins shift down by one index.
pub fn rqaoa_eliminate(ham: &IsingHamiltonian, i: usize, j: usize, sign: i8) -> Result<IsingHamiltonian> {
    let n = ham.n();
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("cannot eliminate ({i}, {j}) of {n} spins")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +-1, got {sign}")));
    }
    let s = f64::from(sign);
    let mut h = ham.fields().to_vec();
    h[i] += s * h[j];
    let mut couplings = Vec::new();
    for (a, b, w) in ham.couplings() {
        let (a, b, w) = if (a, b) == (i.min(j), i.max(j)) {
            continue;
        } else if a == j {
            (i, b, s * w)
        } else if b == j {
            (a, i, s * w)
        } else {
            (a, b, w)
        };
        couplings.push((a, b, w));
    }
    h.remove(j);
    let shift = |k: usize| if k > j { k - 1 } else { k };
    let couplings: Vec<_> = couplings
        .into_iter()
        .map(|(a, b, w)| (shift(a), shift(b), w))
        .collect();
    IsingHamiltonian::new(h, &couplings, ham.constant() + s * ham.j(i, j))
}

/// Where each reduction step's correlation matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationSource {
    /// Depth-`depth` QAOA from the linear schedule, optimized by `optimizer`.
    Qaoa {
        depth: usize,
        optimizer: OptimizerKind,
        budget: Budget,
        seed: u64,
    },
    /// Uniform mixture over all ground states of the current problem, by enumeration.
    ExactGround,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep {
    /// Indices in the problem at the time of the step; `j` is removed.
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RqaoaResult {
    /// Assignment of the original spins.
    pub x: BitString,
    /// Energy including the constant.
    pub energy: f64,
    pub steps: Vec<ReductionStep>,
    /// Non-fatal problems (a failed inner optimization ends the reduction early).
    pub flags: Vec<String>,
    pub circuit_evals: usize,
}

fn check_enum(n: usize) -> Result<()> {
    if n > MAX_ENUM_SPINS {
        return Err(Error::BoundExceeded {
            what: "spins to enumerate",
            actual: n,
            limit: MAX_ENUM_SPINS,
        });
    }
    Ok(())
}

/// Ground states of `ham` by enumeration (lowest index first) and the minimum.
pub fn ising_ground_states(ham: &IsingHamiltonian) -> Result<(Vec<u64>, f64)> {
    check_enum(ham.n())?;
    let mut best = f64::INFINITY;
    let mut states = Vec::new();
    for idx in 0..1u64 << ham.n() {
        let e = ham.energy_index(idx);
        if best.is_infinite() || e < best - level_tol(best) {
            best = e;
            states.clear();
            states.push(idx);
        } else if (e - best).abs() <= level_tol(best) {
            states.push(idx);
        }
    }
    Ok((states, best + ham.constant()))
}

fn correlations(ham: &IsingHamiltonian, source: &CorrelationSource, step: usize) -> Result<(Vec<f64>, usize)> {
    let n = ham.n();
    match source {
        CorrelationSource::ExactGround => {
            let (states, _) = ising_ground_states(ham)?;
            let mut probs = vec![0.0; 1 << n];
            for &s in &states {
                probs[s as usize] = 1.0 / states.len() as f64;
            }
            Ok((zz_correlations(&probs, n)?, 0))
        }
        CorrelationSource::Qaoa {
            depth,
            optimizer,
            budget,
            seed,
        } => {
            if n > MAX_CACHED_QUBITS {
                return Err(Error::BoundExceeded {
                    what: "rQAOA inner qubits",
                    actual: n,
                    limit: MAX_CACHED_QUBITS,
                });
            }
            let energy = DiagonalEnergy::from_qubo(&ham.to_qubo())?;
            let mut obj = |p: &[f64]| {
                qaoa_prepare(p, &energy)
                    .and_then(|s| s.expectation(&energy))
                    .unwrap_or(f64::INFINITY)
            };
            let x0 = linear_init(*depth, LINEAR_INIT_DT);
            let res = run_kind(*optimizer, &mut obj, &x0, budget, seed.wrapping_add(step as u64));
            if !res.cost.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "inner QAOA at step {step} produced no finite cost"
                )));
            }
            let state = qaoa_prepare(&res.x, &energy)?;
            Ok((rqaoa_correlations(&state)?, res.evals))
        }
    }
}

/// Recursive QAOA.
///
/// While more than `stop_dim` spins remain, the pair with the largest
/// `|<Z_i Z_j>|` (lexicographically first on ties) is fixed by
/// `z_j = sign(<Z_i Z_j>) z_i` and `j` is eliminated. The remainder is solved
/// by enumeration and the fixed spins are recovered in reverse order.
pub fn rqaoa_run(ham: &IsingHamiltonian, source: &CorrelationSource, stop_dim: usize) -> Result<RqaoaResult> {
    let stop_dim = stop_dim.max(1);
    let mut cur = ham.clone();
    // Original index of each current spin.
    let mut alive: Vec<usize> = (0..ham.n()).collect();
    let mut steps = Vec::new();
    let mut flags = Vec::new();
    let mut fixed: Vec<(usize, usize, i8)> = Vec::new();
    let mut evals = 0;
    while cur.n() > stop_dim {
        let (m, used) = match correlations(&cur, source, steps.len()) {
            Ok(v) => v,
            Err(e) if !e.is_resource_bound() => {
                flags.push(format!("step {}: {e}; reduction stopped", steps.len()));
                break;
            }
            Err(e) => return Err(e),
        };
        evals += used;
        let n = cur.n();
        let (mut bi, mut bj, mut bv) = (0, 1, f64::NEG_INFINITY);
        for i in 0..n {
            for j in i + 1..n {
                let v = m[i * n + j];
                if v.abs() > bv.abs() || bv == f64::NEG_INFINITY {
                    (bi, bj, bv) = (i, j, v);
                }
            }
        }
        let sign: i8 = if bv >= 0.0 { 1 } else { -1 };
        cur = rqaoa_eliminate(&cur, bi, bj, sign)?;
        fixed.push((alive[bj], alive[bi], sign));
        alive.remove(bj);
        steps.push(ReductionStep {
            i: bi,
            j: bj,
            sign,
            correlation: bv,
        });
    }
    let (states, _) = ising_ground_states(&cur)?;
    let reduced = BitString::from_index(states[0], cur.n()).spins();
    let mut z = vec![0i8; ham.n()];
    for (k, &orig) in alive.iter().enumerate() {
        z[orig] = reduced[k];
    }
    for &(j, i, sign) in fixed.iter().rev() {
        z[j] = sign * z[i];
    }
    let energy = ham.energy(&z)?;
    Ok(RqaoaResult {
        x: BitString::from_spins(&z),
        energy,
        steps,
        flags,
        circuit_evals: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminate_anti_aligned_pair() {
        let ham = IsingHamiltonian::new(vec![0.0, 0.0], &[(0, 1, 1.0)], 0.0).unwrap();
        let r = rqaoa_eliminate(&ham, 0, 1, -1).unwrap();
        assert_eq!(r.n(), 1);
        assert_eq!(r.constant(), -1.0);
        assert_eq!(r.h(0), 0.0);
    }

    #[test]
    fn elimination_preserves_constrained_energies() {
        let ham = IsingHamiltonian::new(
            vec![0.3, -1.2, 0.7, 0.1],
            &[(0, 1, 0.5), (0, 2, -0.4), (1, 2, 1.1), (1, 3, -0.9), (2, 3, 0.25)],
            2.0,
        )
        .unwrap();
        for (i, j, sign) in [(0, 2, 1i8), (1, 3, -1), (3, 0, -1)] {
            let r = rqaoa_eliminate(&ham, i, j, sign).unwrap();
            for idx in 0..8u64 {
                let zr = BitString::from_index(idx, 3).spins();
                let mut z = zr.clone();
                z.insert(j, 0);
                z[j] = sign * z[i];
                assert!((r.energy(&zr).unwrap() - ham.energy(&z).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlations_of_mixture() {
        let mut p = vec![0.0; 8];
        p[0b101] = 0.5;
        p[0b011] = 0.5;
        let m = zz_correlations(&p, 3).unwrap();
        assert_eq!(m[0 * 3 + 1], -1.0);
        assert_eq!(m[0 * 3 + 2], 0.0);
        assert_eq!(m[1 * 3 + 2], 0.0);
        assert_eq!(m[1 * 3 + 0], -1.0);
    }

    #[test]
    fn plus_state_uncorrelated() {
        let m = rqaoa_correlations(&StateVector::init_plus(4).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m[i * 4 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn already_small_is_enumeration() {
        let ham = IsingHamiltonian::new(vec![1.0, -1.0], &[(0, 1, 0.5)], 0.0).unwrap();
        let r = rqaoa_run(&ham, &CorrelationSource::ExactGround, 2).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.x.spins(), vec![-1, 1]);
        assert_eq!(r.energy, -2.5);
    }

    #[test]
    fn exact_source_finds_ground_state() {
        let ham = IsingHamiltonian::new(
            vec![0.2, -0.3, 0.1, 0.05, -0.15],
            &[(0, 1, 1.0), (1, 2, -0.7), (2, 3, 0.4), (3, 4, 0.9), (0, 4, -0.2)],
            0.0,
        )
        .unwrap();
        let (_, min) = ising_ground_states(&ham).unwrap();
        let r = rqaoa_run(&ham, &CorrelationSource::ExactGround, 1).unwrap();
        assert!((r.energy - min).abs() < 1e-12);
        assert_eq!(r.steps.len(), 4);
    }

    #[test]
    fn qaoa_source_runs() {
        let ham = IsingHamiltonian::new(vec![0.1, 0.0, -0.2], &[(0, 1, 1.0), (1, 2, 1.0)], 0.0).unwrap();
        let src = CorrelationSource::Qaoa {
            depth: 1,
            optimizer: OptimizerKind::NelderMead,
            budget: Budget::evals(200),
            seed: 0,
        };
        let r = rqaoa_run(&ham, &src, 2).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert!(r.circuit_evals > 0 && r.circuit_evals <= 200);
        assert!(r.flags.is_empty());
    }
}
