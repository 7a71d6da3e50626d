//! Dense statevector simulator.
//!
//! Basis index `i` is the bitstring read with qubit 0 as the most significant
//! bit, so qubit `j` owns the mask `1 << (q - 1 - j)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{BitString, QuboProblem};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 26;
/// Diagonal energies are tabulated up to this many qubits.
pub const MAX_CACHED_QUBITS: usize = 20;
pub const DEFAULT_EXP_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_qubits(q: usize) -> Result<()> {
    if q > MAX_QUBITS {
        return Err(Error::BoundExceeded {
            what: "qubits",
            actual: q,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Energy of every computational basis state.
#[derive(Debug, Clone)]
pub enum DiagonalEnergy {
    Cached(Arc<Vec<f64>>),
    OnTheFly(Arc<QuboProblem>),
}

impl DiagonalEnergy {
    /// Tabulates for at most `MAX_CACHED_QUBITS` variables, evaluates lazily above.
    pub fn from_qubo(qubo: &QuboProblem) -> Result<Self> {
        check_qubits(qubo.dim())?;
        Ok(if qubo.dim() <= MAX_CACHED_QUBITS {
            Self::Cached(Arc::new(qubo.energy_table()))
        } else {
            Self::OnTheFly(Arc::new(qubo.clone()))
        })
    }

    pub fn on_the_fly(qubo: &QuboProblem) -> Result<Self> {
        check_qubits(qubo.dim())?;
        Ok(Self::OnTheFly(Arc::new(qubo.clone())))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "{} energies is not a power of two",
                values.len()
            )));
        }
        Ok(Self::Cached(Arc::new(values)))
    }

    pub fn qubits(&self) -> usize {
        match self {
            Self::Cached(v) => v.len().trailing_zeros() as usize,
            Self::OnTheFly(q) => q.dim(),
        }
    }

    #[inline]
    pub fn energy(&self, index: u64) -> f64 {
        match self {
            Self::Cached(v) => v[index as usize],
            Self::OnTheFly(q) => q.energy_index(index),
        }
    }

    /// Same energies, tabulated.
    pub fn to_cached(&self) -> Self {
        match self {
            Self::Cached(_) => self.clone(),
            Self::OnTheFly(q) => Self::Cached(Arc::new(q.energy_table())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// 2x2 unitary `[[a, b], [c, d]]` acting on `(|0>, |1>)`.
pub type Gate = [[Complex64; 2]; 2];

pub fn rotation_gate(axis: Axis, theta: f64) -> Gate {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    q: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|+>^q`.
    pub fn init_plus(q: usize) -> Result<Self> {
        check_qubits(q)?;
        let a = Complex64::new((0.5f64).powf(q as f64 / 2.0), 0.0);
        Ok(Self {
            q,
            amps: vec![a; 1 << q],
        })
    }

    pub fn init_basis(x: &BitString) -> Result<Self> {
        check_qubits(x.len())?;
        let mut amps = vec![ZERO; 1 << x.len()];
        amps[x.index() as usize] = ONE;
        Ok(Self { q: x.len(), amps })
    }

    pub fn init_zero(q: usize) -> Result<Self> {
        Self::init_basis(&BitString::zeros(q))
    }

    /// Takes amplitudes as given; the caller is responsible for the norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let q = amps.len().trailing_zeros() as usize;
        check_qubits(q)?;
        Ok(Self { q, amps })
    }

    /// Product state with qubit `j` in `a_j |0> + b_j |1>`.
    pub fn product(factors: &[[Complex64; 2]]) -> Result<Self> {
        let q = factors.len();
        check_qubits(q)?;
        let mut amps = vec![ONE];
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for &a in &amps {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            amps = next;
        }
        Ok(Self { q, amps })
    }

    pub fn qubits(&self) -> usize {
        self.q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_energy(&self, energy: &DiagonalEnergy) -> Result<()> {
        if energy.qubits() != self.q {
            return Err(Error::LengthMismatch {
                expected: self.q,
                actual: energy.qubits(),
            });
        }
        Ok(())
    }

    fn check_qubit(&self, j: usize) -> Result<usize> {
        if j >= self.q {
            return Err(Error::InvalidArgument(format!(
                "qubit {j} out of range for {} qubits",
                self.q
            )));
        }
        Ok(1 << (self.q - 1 - j))
    }

    /// `amp[x] *= exp(-i gamma E(x))`.
    pub fn apply_phase(&mut self, energy: &DiagonalEnergy, gamma: f64) -> Result<()> {
        self.check_energy(energy)?;
        match energy {
            DiagonalEnergy::Cached(v) => {
                for (a, &e) in self.amps.iter_mut().zip(v.iter()) {
                    *a *= Complex64::from_polar(1.0, -gamma * e);
                }
            }
            DiagonalEnergy::OnTheFly(q) => {
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= Complex64::from_polar(1.0, -gamma * q.energy_index(i as u64));
                }
            }
        }
        Ok(())
    }

    /// Applies `gate` to qubit `j`.
    pub fn apply_gate(&mut self, j: usize, gate: &Gate) -> Result<()> {
        let mask = self.check_qubit(j)?;
        self.apply_gate_mask(mask, gate);
        Ok(())
    }

    fn apply_gate_mask(&mut self, mask: usize, g: &Gate) {
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let (a0, a1) = (self.amps[i0], self.amps[i1]);
                self.amps[i0] = g[0][0] * a0 + g[0][1] * a1;
                self.amps[i1] = g[1][0] * a0 + g[1][1] * a1;
            }
            base += 2 * mask;
        }
    }

    /// `exp(-i beta X)` on every qubit, i.e. `Rx(2 beta)`.
    pub fn apply_mixer_x(&mut self, beta: f64) {
        let g = rotation_gate(Axis::X, 2.0 * beta);
        for j in 0..self.q {
            self.apply_gate_mask(1 << j, &g);
        }
    }

    /// `R_axis(theta) = exp(-i theta sigma_axis / 2)` on qubit `j`.
    pub fn apply_rotation(&mut self, j: usize, axis: Axis, theta: f64) -> Result<()> {
        self.apply_gate(j, &rotation_gate(axis, theta))
    }

    /// `Rx(theta)` on `target` where `control` is 1.
    pub fn apply_controlled_rx(&mut self, control: usize, target: usize, theta: f64) -> Result<()> {
        let cm = self.check_qubit(control)?;
        let tm = self.check_qubit(target)?;
        if cm == tm {
            return Err(Error::InvalidArgument(format!(
                "control and target are both qubit {control}"
            )));
        }
        let g = rotation_gate(Axis::X, theta);
        for i0 in 0..self.amps.len() {
            if i0 & cm == 0 || i0 & tm != 0 {
                continue;
            }
            let i1 = i0 | tm;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = g[0][0] * a0 + g[0][1] * a1;
            self.amps[i1] = g[1][0] * a0 + g[1][1] * a1;
        }
        Ok(())
    }

    /// `exp(i beta H)` applied to the state.
    pub fn apply_exp_sparse(&mut self, h: &SparseHamiltonian, beta: f64) -> Result<()> {
        if h.dim() != self.amps.len() {
            return Err(Error::LengthMismatch {
                expected: self.amps.len(),
                actual: h.dim(),
            });
        }
        h.expm_multiply(&mut self.amps, beta, DEFAULT_EXP_TOL)
    }

    /// `sum_x |amp[x]|^2 E(x)`.
    pub fn expectation(&self, energy: &DiagonalEnergy) -> Result<f64> {
        self.check_energy(energy)?;
        Ok(match energy {
            DiagonalEnergy::Cached(v) => self
                .amps
                .iter()
                .zip(v.iter())
                .map(|(a, &e)| a.norm_sqr() * e)
                .sum(),
            DiagonalEnergy::OnTheFly(q) => self
                .amps
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() != 0.0)
                .map(|(i, a)| a.norm_sqr() * q.energy_index(i as u64))
                .sum(),
        })
    }

    /// `shots` draws from `|amp|^2` by inverse CDF with a `ChaCha8Rng` seeded from `seed`.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<BitString, u64>> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be >= 1".into()));
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
        let last = self.amps.len() - 1;
        for _ in 0..shots {
            let u = rng.gen::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(last);
            *hits.entry(i).or_default() += 1;
        }
        Ok(hits
            .into_iter()
            .map(|(i, c)| (BitString::from_index(i as u64, self.q), c))
            .collect())
    }
}

/// Real symmetric matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    /// Builds from `(row, col, value)` entries; duplicates are summed and the
    /// result must be symmetric.
    pub fn from_triplets(dim: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); dim];
        for &(r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument("non-finite matrix entry".into()));
            }
            *rows[r].entry(c).or_default() += v;
        }
        for (r, row) in rows.iter().enumerate() {
            for (&c, &v) in row {
                let back = rows[c].get(&r).copied().unwrap_or(0.0);
                if (back - v).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({r}, {c})"
                    )));
                }
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// Maximum absolute column sum (equal to the row sum by symmetry).
    pub fn norm1(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (c, v) in self.row(r) {
                acc += x[c] * v;
            }
            *o = acc;
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim * self.dim];
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[r * self.dim + c] = v;
            }
        }
        m
    }

    /// `v <- exp(i beta H) v`.
    ///
    /// The interval is cut into `s = ceil(|beta| ||H||_1)` steps of norm at most
    /// one; each step sums the Taylor series until a term drops below
    /// `tol * ||v||`.
    pub fn expm_multiply(&self, v: &mut [Complex64], beta: f64, tol: f64) -> Result<()> {
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta = {beta} is not finite")));
        }
        if v.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        let norm = self.norm1();
        if norm == 0.0 || beta == 0.0 {
            return Ok(());
        }
        let steps = (beta.abs() * norm).ceil().max(1.0) as usize;
        let h = Complex64::new(0.0, beta / steps as f64);
        let mut term = vec![ZERO; self.dim];
        let mut next = vec![ZERO; self.dim];
        const MAX_TERMS: usize = 60;
        for _ in 0..steps {
            let vnorm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            term.copy_from_slice(v);
            let mut converged = false;
            for k in 1..=MAX_TERMS {
                self.mul_vec(&term, &mut next);
                let f = h / k as f64;
                let mut tnorm = 0.0;
                for (t, nx) in term.iter_mut().zip(&next) {
                    *t = nx * f;
                    tnorm += t.norm_sqr();
                }
                for (a, t) in v.iter_mut().zip(&term) {
                    *a += t;
                }
                if tnorm.sqrt() <= tol * vnorm.max(f64::MIN_POSITIVE) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence(format!(
                    "Taylor series did not reach tolerance {tol} within {MAX_TERMS} terms"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_tsp_qubo;
    use crate::instance::generate_random_tsp;
    use nalgebra::DMatrix;

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    fn random_state(q: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << q)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn plus_and_basis() {
        let s = StateVector::init_plus(9).unwrap();
        assert!(s.probabilities().iter().all(|&p| (p - 1.0 / 512.0).abs() < 1e-15));
        for q in [9, 16] {
            assert!((StateVector::init_plus(q).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
        let x: BitString = "100001010".parse().unwrap();
        let b = StateVector::init_basis(&x).unwrap();
        assert_eq!(b.amplitudes()[0b100001010], ONE);
        assert!(StateVector::init_plus(27).unwrap_err().is_resource_bound());
    }

    #[test]
    fn phase_composes() {
        let inst = generate_random_tsp(4, 2, 10.0, 50.0).unwrap();
        let e = DiagonalEnergy::from_qubo(&build_tsp_qubo(&inst, 0.01, 2.0).unwrap()).unwrap();
        let mut a = StateVector::init_plus(9).unwrap();
        let mut b = a.clone();
        a.apply_phase(&e, 0.3).unwrap();
        a.apply_phase(&e, 0.45).unwrap();
        b.apply_phase(&e, 0.75).unwrap();
        assert!(close(a.amplitudes(), b.amplitudes(), 1e-12));
        let before = b.clone();
        b.apply_phase(&e, 0.0).unwrap();
        assert_eq!(b, before);
    }

    #[test]
    fn mixer_full_flip() {
        let mut s = StateVector::init_zero(5).unwrap();
        s.apply_mixer_x(std::f64::consts::FRAC_PI_2);
        assert!((s.amplitudes()[31].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixer_matches_dense_exponential() {
        let q = 4;
        let d = 1 << q;
        let mut hx = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..q {
            for i in 0..d {
                hx[(i ^ (1 << j), i)] += ONE;
            }
        }
        let beta = 0.37;
        let u = (hx * Complex64::new(0.0, -beta)).exp();
        let s0 = random_state(q, 1);
        let mut s = s0.clone();
        s.apply_mixer_x(beta);
        let v = &u * nalgebra::DVector::from_column_slice(s0.amplitudes());
        assert!(close(s.amplitudes(), v.as_slice(), 1e-10));
    }

    #[test]
    fn gates_are_unitary() {
        let mut s = random_state(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let th = rng.gen::<f64>() * 6.0;
            match rng.gen_range(0..4) {
                0 => s.apply_rotation(rng.gen_range(0..3), Axis::X, th).unwrap(),
                1 => s.apply_rotation(rng.gen_range(0..3), Axis::Y, th).unwrap(),
                2 => s.apply_rotation(rng.gen_range(0..3), Axis::Z, th).unwrap(),
                _ => {
                    let c = rng.gen_range(0..3);
                    let t = (c + rng.gen_range(1..3)) % 3;
                    s.apply_controlled_rx(c, t, th).unwrap()
                }
            }
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.apply_rotation(3, Axis::X, 1.0).is_err());
        assert!(s.apply_controlled_rx(1, 1, 1.0).is_err());
    }

    #[test]
    fn rz_on_basis_is_phase_and_crx_needs_control() {
        let x: BitString = "101".parse().unwrap();
        let mut s = StateVector::init_basis(&x).unwrap();
        s.apply_rotation(1, Axis::Z, 0.8).unwrap();
        assert!((s.amplitudes()[5].norm() - 1.0).abs() < 1e-15);
        let mut t = StateVector::init_basis(&"010".parse().unwrap()).unwrap();
        let before = t.clone();
        t.apply_controlled_rx(0, 2, 1.3).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn expectation_checks() {
        let inst = generate_random_tsp(4, 5, 10.0, 50.0).unwrap();
        let qubo = build_tsp_qubo(&inst, 1.0, 40.0).unwrap();
        let e = DiagonalEnergy::from_qubo(&qubo).unwrap();
        let table = qubo.energy_table();
        let mean = table.iter().sum::<f64>() / 512.0;
        let plus = StateVector::init_plus(9).unwrap();
        assert!((plus.expectation(&e).unwrap() - mean).abs() < 1e-9);
        let x = BitString::from_index(77, 9);
        let b = StateVector::init_basis(&x).unwrap();
        assert!((b.expectation(&e).unwrap() - qubo.energy(&x).unwrap()).abs() < 1e-12);
        let fly = DiagonalEnergy::on_the_fly(&qubo).unwrap();
        for i in 0..512 {
            assert_eq!(fly.energy(i), e.energy(i));
        }
    }

    #[test]
    fn sampling() {
        let x: BitString = "0110".parse().unwrap();
        let counts = StateVector::init_basis(&x).unwrap().sample(1000, 1).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&x], 1000);
        let plus = StateVector::init_plus(1).unwrap();
        let c = plus.sample(1_000_000, 7).unwrap();
        let ones = c[&"1".parse().unwrap()] as f64 / 1e6;
        assert!((ones - 0.5).abs() < 0.01);
        assert_eq!(c, plus.sample(1_000_000, 7).unwrap());
        assert!(plus.sample(0, 1).is_err());
    }

    #[test]
    fn exp_sparse_matches_dense() {
        let d = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut entries = Vec::new();
        for _ in 0..30 {
            let (r, c) = (rng.gen_range(0..d), rng.gen_range(0..d));
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            entries.push((r, c, v));
            if r != c {
                entries.push((c, r, v));
            }
        }
        let h = SparseHamiltonian::from_triplets(d, &entries).unwrap();
        let dense = DMatrix::from_row_slice(d, d, &h.to_dense()).map(|v| Complex64::new(v, 0.0));
        let beta = 1.7;
        let u = (dense * Complex64::new(0.0, beta)).exp();
        let s0 = random_state(4, 8);
        let mut s = s0.clone();
        s.apply_exp_sparse(&h, beta).unwrap();
        let v = &u * nalgebra::DVector::from_column_slice(s0.amplitudes());
        assert!(close(s.amplitudes(), v.as_slice(), 1e-8));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-8);

        let zero = SparseHamiltonian::from_triplets(d, &[]).unwrap();
        let mut z = s0.clone();
        z.apply_exp_sparse(&zero, 3.0).unwrap();
        assert_eq!(z, s0);
        assert!(SparseHamiltonian::from_triplets(2, &[(0, 1, 1.0)]).is_err());
    }
}
