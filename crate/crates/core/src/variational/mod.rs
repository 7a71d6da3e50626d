//! Parameterized state preparations and recursive QAOA.

mod aoa;
mod hevqe;
mod qaoa;
mod rqaoa;
mod warm_start;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use aoa::{
    aoa_mixer, aoa_pauli_term_count, aoa_prepare, aoa_swaps, FeasibleSubspace,
    AOA_FULL_MAX_QUBITS, AOA_SUBSPACE_MAX_CITIES,
};
pub use hevqe::{hevqe_param_count, hevqe_prepare, hevqe_prepare_reference};
pub use qaoa::{linear_init, qaoa_prepare, random_init, split_params, LINEAR_INIT_DT};
pub use rqaoa::{
    ising_ground_states, rqaoa_correlations, rqaoa_eliminate, rqaoa_run, zz_correlations, CorrelationSource,
    ReductionStep, RqaoaResult, MAX_ENUM_SPINS,
};
pub use warm_start::{ws_initial_state, ws_mixer_gate, ws_prepare, ws_relax, RelaxedSolution};

use crate::encoding::BitString;
use crate::error::{Error, Result};
use crate::statevector::{DiagonalEnergy, SparseHamiltonian, StateVector};

/// Which circuit family to build and its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnsatzSpec {
    Qaoa { depth: usize },
    WsQaoa { depth: usize, relaxed: Vec<f64> },
    Aoa { depth: usize, tour: Vec<usize> },
    Hevqe { layers: usize },
}

impl AnsatzSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Qaoa { .. } => "qaoa",
            Self::WsQaoa { .. } => "ws-qaoa",
            Self::Aoa { .. } => "aoa",
            Self::Hevqe { .. } => "hevqe",
        }
    }

    /// Depth `p` or layer count.
    pub fn depth(&self) -> usize {
        match self {
            Self::Qaoa { depth } | Self::WsQaoa { depth, .. } | Self::Aoa { depth, .. } => *depth,
            Self::Hevqe { layers } => *layers,
        }
    }

    pub fn param_count(&self, q: usize) -> usize {
        match self {
            Self::Hevqe { layers } => hevqe_param_count(q, *layers),
            _ => 2 * self.depth(),
        }
    }
}

enum Backend {
    Plain,
    AoaFull(Arc<SparseHamiltonian>),
    AoaSubspace(Arc<FeasibleSubspace>, Arc<Vec<f64>>),
}

/// An ansatz bound to a diagonal problem Hamiltonian.
pub struct Circuit {
    spec: AnsatzSpec,
    energy: DiagonalEnergy,
    backend: Backend,
}

impl Circuit {
    /// AOA registers above [`AOA_FULL_MAX_QUBITS`] are simulated on the feasible subspace.
    pub fn new(spec: AnsatzSpec, energy: DiagonalEnergy) -> Result<Self> {
        let q = energy.qubits();
        let backend = match &spec {
            AnsatzSpec::Aoa { tour, .. } => {
                let n = tour.len();
                if n < 3 || (n - 1) * (n - 1) != q {
                    return Err(Error::InvalidArgument(format!(
                        "AOA tour of {n} cities does not fit a {q}-qubit register"
                    )));
                }
                if q <= AOA_FULL_MAX_QUBITS {
                    Backend::AoaFull(Arc::new(aoa_mixer(n)?))
                } else {
                    let space = FeasibleSubspace::new(n)?;
                    let en = space.energies(&energy);
                    Backend::AoaSubspace(Arc::new(space), Arc::new(en))
                }
            }
            AnsatzSpec::WsQaoa { relaxed, .. } if relaxed.len() != q => {
                return Err(Error::LengthMismatch {
                    expected: q,
                    actual: relaxed.len(),
                })
            }
            _ => Backend::Plain,
        };
        Ok(Self {
            spec,
            energy,
            backend,
        })
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn energy(&self) -> &DiagonalEnergy {
        &self.energy
    }

    pub fn qubits(&self) -> usize {
        self.energy.qubits()
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count(self.qubits())
    }

    pub fn prepare(&self, params: &[f64]) -> Result<PreparedState> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let e = &self.energy;
        Ok(match (&self.spec, &self.backend) {
            (AnsatzSpec::Qaoa { .. }, _) => PreparedState::Full(qaoa_prepare(params, e)?),
            (AnsatzSpec::WsQaoa { relaxed, .. }, _) => PreparedState::Full(ws_prepare(params, e, relaxed)?),
            (AnsatzSpec::Hevqe { layers }, _) => {
                PreparedState::Full(hevqe_prepare(params, self.qubits(), *layers)?)
            }
            (AnsatzSpec::Aoa { tour, .. }, Backend::AoaFull(h)) => {
                PreparedState::Full(aoa_prepare(params, e, h, tour)?)
            }
            (AnsatzSpec::Aoa { tour, .. }, Backend::AoaSubspace(space, en)) => PreparedState::Feasible {
                amps: space.prepare(params, en, tour)?,
                energies: en.clone(),
                space: space.clone(),
            },
            (AnsatzSpec::Aoa { .. }, Backend::Plain) => unreachable!("AOA always has a mixer"),
        })
    }

    /// `<psi(params)| H_P |psi(params)>`.
    pub fn cost(&self, params: &[f64]) -> Result<f64> {
        self.prepare(params)?.expectation(&self.energy)
    }
}

/// Output of [`Circuit::prepare`].
#[derive(Debug, Clone)]
pub enum PreparedState {
    Full(StateVector),
    /// Amplitudes on the feasible tours only; all other basis states have zero amplitude.
    Feasible {
        space: Arc<FeasibleSubspace>,
        energies: Arc<Vec<f64>>,
        amps: Vec<Complex64>,
    },
}

impl From<StateVector> for PreparedState {
    fn from(s: StateVector) -> Self {
        Self::Full(s)
    }
}

impl PreparedState {
    pub fn qubits(&self) -> usize {
        match self {
            Self::Full(s) => s.qubits(),
            Self::Feasible { space, .. } => (space.n() - 1) * (space.n() - 1),
        }
    }

    /// Probability of basis state `index`.
    pub fn probability(&self, index: u64) -> f64 {
        match self {
            Self::Full(s) => s.amplitudes()[index as usize].norm_sqr(),
            Self::Feasible { space, amps, .. } => {
                space.position(index).map_or(0.0, |k| amps[k].norm_sqr())
            }
        }
    }

    pub fn expectation(&self, energy: &DiagonalEnergy) -> Result<f64> {
        match self {
            Self::Full(s) => s.expectation(energy),
            Self::Feasible { energies, amps, .. } => {
                Ok(amps.iter().zip(energies.iter()).map(|(a, e)| a.norm_sqr() * e).sum())
            }
        }
    }

    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<BitString, u64>> {
        match self {
            Self::Full(s) => s.sample(shots, seed),
            Self::Feasible { space, amps, .. } => {
                if shots == 0 {
                    return Err(Error::InvalidArgument("shots must be >= 1".into()));
                }
                let mut cdf = Vec::with_capacity(amps.len());
                let mut acc = 0.0;
                for a in amps {
                    acc += a.norm_sqr();
                    cdf.push(acc);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let q = self.qubits();
                let mut hits = BTreeMap::new();
                for _ in 0..shots {
                    let u = rng.gen::<f64>() * acc;
                    let k = cdf.partition_point(|&c| c <= u).min(amps.len() - 1);
                    *hits
                        .entry(BitString::from_index(space.indices()[k], q))
                        .or_default() += 1;
                }
                Ok(hits)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_tsp_qubo;
    use crate::instance::generate_random_tsp;

    #[test]
    fn circuit_dispatch() {
        let inst = generate_random_tsp(4, 0, 10.0, 50.0).unwrap();
        let qubo = build_tsp_qubo(&inst, 0.01, 3.0).unwrap();
        let e = DiagonalEnergy::from_qubo(&qubo).unwrap();
        let specs = [
            AnsatzSpec::Qaoa { depth: 2 },
            AnsatzSpec::WsQaoa { depth: 1, relaxed: vec![0.5; 9] },
            AnsatzSpec::Aoa { depth: 2, tour: vec![0, 1, 2, 3] },
            AnsatzSpec::Hevqe { layers: 1 },
        ];
        for spec in specs {
            let c = Circuit::new(spec.clone(), e.clone()).unwrap();
            let p = random_init(c.param_count(), 1);
            let s = c.prepare(&p).unwrap();
            let total: f64 = (0..512).map(|i| s.probability(i)).sum();
            assert!((total - 1.0).abs() < 1e-9, "{}", spec.name());
            assert!(c.cost(&p).unwrap().is_finite());
            assert!(c.prepare(&p[1..]).is_err());
        }
        assert!(Circuit::new(AnsatzSpec::Aoa { depth: 1, tour: vec![0, 1, 2] }, e).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = AnsatzSpec::Aoa { depth: 3, tour: vec![0, 2, 1] };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AnsatzSpec>(&j).unwrap(), s);
    }
}
