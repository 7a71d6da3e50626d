use std::collections::HashMap;

use itertools::Itertools;
use num_complex::Complex64;

use super::qaoa::split_params;
use crate::encoding::{encode_tsp_path, tsp_index};
use crate::error::{Error, Result};
use crate::statevector::{DiagonalEnergy, SparseHamiltonian, StateVector, DEFAULT_EXP_TOL};

/// Largest register simulated with the full `2^q` mixer (`n = 5`).
pub const AOA_FULL_MAX_QUBITS: usize = 16;
/// Largest city count for the feasible-subspace simulation (`8!` states).
pub const AOA_SUBSPACE_MAX_CITIES: usize = 9;

/// Pairs of neighbouring free positions `1..n` (cyclic), each listed once.
pub fn aoa_swaps(n: usize) -> Vec<(usize, usize)> {
    let m = n - 1;
    let mut pairs: Vec<(usize, usize)> = (1..m).map(|i| (i, i + 1)).collect();
    if m >= 3 {
        pairs.push((m, 1));
    }
    pairs
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidInstance(format!("AOA needs n >= 3, got {n}")));
    }
    Ok(())
}

/// Swap mixer on the full reduced register.
///
/// For every neighbouring position pair `(i, i')` and city pair `u < v` it adds
/// `S+_{u,i} S+_{v,i'} S-_{u,i'} S-_{v,i} + h.c.`, which exchanges `u` and `v`
/// between the two positions and preserves the one-hot constraints.
pub fn aoa_mixer(n: usize) -> Result<SparseHamiltonian> {
    check_n(n)?;
    let q = (n - 1) * (n - 1);
    if q > AOA_FULL_MAX_QUBITS {
        return Err(Error::BoundExceeded {
            what: "AOA full-register qubits",
            actual: q,
            limit: AOA_FULL_MAX_QUBITS,
        });
    }
    let mask = |pos: usize, city: usize| 1usize << (q - 1 - tsp_index(n, pos, city));
    let mut terms = Vec::new();
    for (i, k) in aoa_swaps(n) {
        for (u, v) in (1..n).tuple_combinations() {
            // (on, off): the operator maps `on` occupied / `off` empty to the reverse.
            let on = mask(k, u) | mask(i, v);
            let off = mask(i, u) | mask(k, v);
            terms.push((on, off));
        }
    }
    let mut entries = Vec::new();
    for x in 0..1usize << q {
        for &(on, off) in &terms {
            if (x & on == on && x & off == 0) || (x & off == off && x & on == 0) {
                entries.push((x ^ on ^ off, x, 1.0));
            }
        }
    }
    SparseHamiltonian::from_triplets(1 << q, &entries)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Pauli {
    X,
    Y,
}

type PauliString = Vec<(usize, Pauli)>;

/// Number of distinct X/Y Pauli strings in the swap mixer after expanding
/// `S+- = (X -+ iY) / 2` and merging.
///
/// `reduced = true` counts the `(n-1)^2` register used here; `false` counts the
/// full `n^2` one-hot register with all `n` positions cyclic.
pub fn aoa_pauli_term_count(n: usize, reduced: bool) -> Result<usize> {
    check_n(n)?;
    let mut ops: Vec<[usize; 4]> = Vec::new();
    if reduced {
        let idx = |pos, city| tsp_index(n, pos, city);
        for (i, k) in aoa_swaps(n) {
            for (u, v) in (1..n).tuple_combinations() {
                ops.push([idx(i, u), idx(k, v), idx(k, u), idx(i, v)]);
            }
        }
    } else {
        let idx = |pos: usize, city: usize| pos * n + city;
        for i in 0..n {
            let k = (i + 1) % n;
            for (u, v) in (0..n).tuple_combinations() {
                ops.push([idx(i, u), idx(k, v), idx(k, u), idx(i, v)]);
            }
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let i_half = Complex64::new(0.0, 0.5);
    let mut sum: HashMap<PauliString, Complex64> = HashMap::new();
    for qubits in ops {
        // Raising on the first two qubits, lowering on the last two.
        for choice in 0..16u32 {
            let mut coef = Complex64::new(1.0, 0.0);
            let mut string: PauliString = Vec::with_capacity(4);
            for (slot, &qb) in qubits.iter().enumerate() {
                let y = choice >> slot & 1 == 1;
                let raising = slot < 2;
                coef *= match (y, raising) {
                    (false, _) => half,
                    (true, true) => -i_half,
                    (true, false) => i_half,
                };
                string.push((qb, if y { Pauli::Y } else { Pauli::X }));
            }
            string.sort();
            // The Hermitian conjugate contributes the complex conjugate.
            *sum.entry(string).or_default() += coef + coef.conj();
        }
    }
    Ok(sum.values().filter(|c| c.norm() > 1e-12).count())
}

fn check_tour(tour: &[usize], n: usize) -> Result<()> {
    if tour.len() != n || tour[0] != 0 {
        return Err(Error::InvalidArgument(format!(
            "initial tour must list {n} cities starting at 0"
        )));
    }
    Ok(())
}

/// `prod_k exp(i gamma_k H_M) exp(-i beta_k H_P)` on the basis state of `tour`,
/// simulated on the full register. Parameters are `[beta_1..beta_p, gamma_1..gamma_p]`.
pub fn aoa_prepare(
    params: &[f64],
    problem: &DiagonalEnergy,
    mixer: &SparseHamiltonian,
    tour: &[usize],
) -> Result<StateVector> {
    let (betas, gammas) = split_params(params)?;
    check_tour(tour, tour.len())?;
    let mut s = StateVector::init_basis(&encode_tsp_path(tour)?)?;
    if problem.qubits() != s.qubits() {
        return Err(Error::LengthMismatch {
            expected: s.qubits(),
            actual: problem.qubits(),
        });
    }
    for (&b, &g) in betas.iter().zip(gammas) {
        s.apply_phase(problem, b)?;
        s.apply_exp_sparse(mixer, g)?;
    }
    Ok(s)
}

/// The `(n-1)!` feasible basis states with the swap mixer restricted to them.
#[derive(Debug, Clone)]
pub struct FeasibleSubspace {
    n: usize,
    tours: Vec<Vec<usize>>,
    indices: Vec<u64>,
    lookup: HashMap<u64, usize>,
    mixer: SparseHamiltonian,
}

impl FeasibleSubspace {
    pub fn new(n: usize) -> Result<Self> {
        check_n(n)?;
        if n > AOA_SUBSPACE_MAX_CITIES {
            return Err(Error::BoundExceeded {
                what: "AOA subspace cities",
                actual: n,
                limit: AOA_SUBSPACE_MAX_CITIES,
            });
        }
        let mut tours = Vec::new();
        crate::oracle::for_each_tour(n, |t| tours.push(t.to_vec()));
        let indices: Vec<u64> = tours
            .iter()
            .map(|t| encode_tsp_path(t).map(|b| b.index()))
            .collect::<Result<_>>()?;
        let lookup: HashMap<u64, usize> = indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut entries = Vec::new();
        for (k, t) in tours.iter().enumerate() {
            for (i, j) in aoa_swaps(n) {
                let mut s = t.clone();
                s.swap(i, j);
                let idx = encode_tsp_path(&s)?.index();
                entries.push((lookup[&idx], k, 1.0));
            }
        }
        let mixer = SparseHamiltonian::from_triplets(tours.len(), &entries)?;
        Ok(Self {
            n,
            tours,
            indices,
            lookup,
            mixer,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.tours.len()
    }

    pub fn tours(&self) -> &[Vec<usize>] {
        &self.tours
    }

    /// Full-register basis index of each subspace state.
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn position(&self, index: u64) -> Option<usize> {
        self.lookup.get(&index).copied()
    }

    pub fn mixer(&self) -> &SparseHamiltonian {
        &self.mixer
    }

    pub fn energies(&self, problem: &DiagonalEnergy) -> Vec<f64> {
        self.indices.iter().map(|&i| problem.energy(i)).collect()
    }

    /// Subspace amplitudes of the AOA state; `energies` from [`Self::energies`].
    pub fn prepare(&self, params: &[f64], energies: &[f64], tour: &[usize]) -> Result<Vec<Complex64>> {
        let (betas, gammas) = split_params(params)?;
        check_tour(tour, self.n)?;
        let start = encode_tsp_path(tour)?.index();
        let k0 = self
            .position(start)
            .ok_or_else(|| Error::InvalidArgument("initial tour is not a permutation".into()))?;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        amps[k0] = Complex64::new(1.0, 0.0);
        for (&b, &g) in betas.iter().zip(gammas) {
            for (a, &e) in amps.iter_mut().zip(energies) {
                *a *= Complex64::from_polar(1.0, -b * e);
            }
            self.mixer.expm_multiply(&mut amps, g, DEFAULT_EXP_TOL)?;
        }
        Ok(amps)
    }
}
