//! QUBO and Ising models for TSP, CVRP and clustering.
//!
//! A [`QuboProblem`] stores a symmetric matrix `q` and a constant `offset`;
//! the model energy of a bitstring is `x^T q x + offset`, including every
//! constant produced by fixing variables or expanding squared penalties.
//!
//! Basis-index convention: variable 0 is the most significant bit, so the
//! bitstring `100001010` has index `0b100001010`.

mod clustering;
mod cvrp;
mod ising;
mod text;
mod tsp;
pub(crate) use tsp::tsp_distance_qubo;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use clustering::{build_clustering_qubo, decode_clustering, Clustering};
pub use cvrp::{build_cvrp_qubo, decode_cvrp, CvrpAssignment};
pub use ising::{qubo_to_ising, IsingHamiltonian};
pub use text::{ising_from_text, ising_to_text, qubo_from_text, qubo_to_text};
pub use tsp::{
    build_tsp_qubo, decode_tsp, distance_term, encode_tsp_path, tsp_index, violation_weight,
    TspDecode,
};

/// Fixed-length bitstring, printed most-significant (variable 0) first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Bitstring of `len` bits whose basis index is `index`.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|k| (index >> (len - 1 - k)) & 1 == 1).collect())
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn set(&mut self, k: usize, v: bool) {
        self.0[k] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Spin values `z = 2x - 1`.
    pub fn spins(&self) -> Vec<i8> {
        self.0.iter().map(|&b| if b { 1 } else { -1 }).collect()
    }

    pub fn from_spins(z: &[i8]) -> Self {
        Self(z.iter().map(|&s| s > 0).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// Semantic meaning of a flat variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    /// TSP: `city` occupies `position` (both in `1..n`; city 0 is pinned to position 0).
    City { position: usize, city: usize },
    /// CVRP: vehicle `vehicle` is at `node` during time step `time` (`1..=T`).
    Visit {
        vehicle: usize,
        node: usize,
        time: usize,
    },
    /// Clustering: `customer` is packed into `cluster`.
    Assign { cluster: usize, customer: usize },
    /// Binary slack bit `bit` (weight `2^bit`) of vehicle/knapsack `group`.
    Slack { group: usize, bit: usize },
    /// Variable without further structure.
    Raw(usize),
}

/// Bijection between semantic variables and flat indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableMap {
    /// Reduced `(n-1)^2` layout, position-major then city.
    Tsp { n: usize },
    /// Vehicle-major `x[k][t][v]` block followed by `K * slack_bits` slack bits.
    Cvrp {
        customers: usize,
        horizon: usize,
        vehicles: usize,
        slack_bits: usize,
    },
    /// Knapsack-major `x[k][v]` block followed by `K * slack_bits` slack bits.
    Clustering {
        customers: usize,
        clusters: usize,
        slack_bits: usize,
    },
    Generic { dim: usize },
}

impl VariableMap {
    pub fn dim(&self) -> usize {
        match *self {
            VariableMap::Tsp { n } => (n - 1) * (n - 1),
            VariableMap::Cvrp {
                customers,
                horizon,
                vehicles,
                slack_bits,
            } => vehicles * horizon * (customers + 1) + vehicles * slack_bits,
            VariableMap::Clustering {
                customers,
                clusters,
                slack_bits,
            } => clusters * customers + clusters * slack_bits,
            VariableMap::Generic { dim } => dim,
        }
    }

    pub fn index(&self, var: Variable) -> Option<usize> {
        match (*self, var) {
            (VariableMap::Tsp { n }, Variable::City { position, city }) => {
                let m = n - 1;
                ((1..=m).contains(&position) && (1..=m).contains(&city))
                    .then(|| (position - 1) * m + (city - 1))
            }
            (
                VariableMap::Cvrp {
                    customers,
                    horizon,
                    vehicles,
                    ..
                },
                Variable::Visit {
                    vehicle,
                    node,
                    time,
                },
            ) => (vehicle < vehicles && node <= customers && (1..=horizon).contains(&time))
                .then(|| vehicle * horizon * (customers + 1) + (time - 1) * (customers + 1) + node),
            (
                VariableMap::Cvrp {
                    customers,
                    horizon,
                    vehicles,
                    slack_bits,
                },
                Variable::Slack { group, bit },
            ) => (group < vehicles && bit < slack_bits)
                .then(|| vehicles * horizon * (customers + 1) + group * slack_bits + bit),
            (
                VariableMap::Clustering {
                    customers,
                    clusters,
                    ..
                },
                Variable::Assign { cluster, customer },
            ) => (cluster < clusters && (1..=customers).contains(&customer))
                .then(|| cluster * customers + customer - 1),
            (
                VariableMap::Clustering {
                    customers,
                    clusters,
                    slack_bits,
                },
                Variable::Slack { group, bit },
            ) => (group < clusters && bit < slack_bits)
                .then(|| clusters * customers + group * slack_bits + bit),
            (VariableMap::Generic { dim }, Variable::Raw(i)) => (i < dim).then_some(i),
            _ => None,
        }
    }

    pub fn variable(&self, index: usize) -> Option<Variable> {
        if index >= self.dim() {
            return None;
        }
        Some(match *self {
            VariableMap::Tsp { n } => {
                let m = n - 1;
                Variable::City {
                    position: index / m + 1,
                    city: index % m + 1,
                }
            }
            VariableMap::Cvrp {
                customers,
                horizon,
                vehicles,
                slack_bits,
            } => {
                let block = horizon * (customers + 1);
                let routes = vehicles * block;
                if index < routes {
                    let vehicle = index / block;
                    let r = index % block;
                    Variable::Visit {
                        vehicle,
                        node: r % (customers + 1),
                        time: r / (customers + 1) + 1,
                    }
                } else {
                    let r = index - routes;
                    Variable::Slack {
                        group: r / slack_bits,
                        bit: r % slack_bits,
                    }
                }
            }
            VariableMap::Clustering {
                customers,
                clusters,
                slack_bits,
            } => {
                let assigns = clusters * customers;
                if index < assigns {
                    Variable::Assign {
                        cluster: index / customers,
                        customer: index % customers + 1,
                    }
                } else {
                    let r = index - assigns;
                    Variable::Slack {
                        group: r / slack_bits,
                        bit: r % slack_bits,
                    }
                }
            }
            VariableMap::Generic { .. } => Variable::Raw(index),
        })
    }
}

/// `ceil(log2(C + 1))`: bits needed to represent slack values `0..=C`.
pub fn slack_bits(capacity: u32) -> usize {
    (u32::BITS - capacity.leading_zeros()) as usize
}

/// Scaling and penalty weights a model was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub scaling: f64,
    /// `[P]` for TSP, `[P1, P2, P3]` for CVRP and clustering.
    pub penalties: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    dim: usize,
    q: Vec<f64>,
    offset: f64,
    varmap: VariableMap,
    weights: Weights,
}

impl QuboProblem {
    /// Builds from a full matrix; the matrix must be symmetric.
    pub fn from_dense(q: Vec<f64>, dim: usize, offset: f64) -> Result<Self> {
        if q.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                actual: q.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if q[i * dim + j] != q[j * dim + i] {
                    return Err(Error::InvalidArgument(format!(
                        "QUBO matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if q.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidArgument("non-finite QUBO coefficient".into()));
        }
        Ok(Self {
            dim,
            q,
            offset,
            varmap: VariableMap::Generic { dim },
            weights: Weights {
                scaling: 1.0,
                penalties: Vec::new(),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn varmap(&self) -> &VariableMap {
        &self.varmap
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Model energy `x^T q x + offset`.
    pub fn energy(&self, x: &BitString) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(self.energy_bits(x.bits()))
    }

    pub(crate) fn energy_bits(&self, x: &[bool]) -> f64 {
        let ones: Vec<usize> = (0..self.dim).filter(|&k| x[k]).collect();
        self.energy_of_ones(&ones)
    }

    fn energy_of_ones(&self, ones: &[usize]) -> f64 {
        let mut e = self.offset;
        for (a, &i) in ones.iter().enumerate() {
            let row = &self.q[i * self.dim..(i + 1) * self.dim];
            let mut acc = row[i];
            for &j in &ones[a + 1..] {
                acc += 2.0 * row[j];
            }
            e += acc;
        }
        e
    }

    /// Model energy of the basis state with index `index`.
    pub fn energy_index(&self, index: u64) -> f64 {
        let mut buf = [0usize; 64];
        let mut c = 0;
        for k in 0..self.dim {
            if (index >> (self.dim - 1 - k)) & 1 == 1 {
                buf[c] = k;
                c += 1;
            }
        }
        self.energy_of_ones(&buf[..c])
    }

    /// Energies of all `2^dim` basis states, indexed by basis index.
    pub fn energy_table(&self) -> Vec<f64> {
        (0..1u64 << self.dim).map(|i| self.energy_index(i)).collect()
    }

    /// Streams `(index, energy)` for every basis state in Gray-code order,
    /// updating energies incrementally in `O(dim)` per state. Energies are
    /// resynchronized exactly every 4096 states to bound round-off drift.
    pub fn for_each_energy<F: FnMut(u64, f64)>(&self, mut f: F) {
        let d = self.dim;
        let mut x = vec![false; d];
        // field[k] = sum_{j != k} q_kj x_j
        let mut field = vec![0.0; d];
        let mut e = self.offset;
        let mut gray = 0u64;
        f(0, e);
        let total = 1u64 << d;
        for step in 1..total {
            let bitpos = step.trailing_zeros() as usize;
            let k = d - 1 - bitpos;
            let row = &self.q[k * d..(k + 1) * d];
            let sign = if x[k] { -1.0 } else { 1.0 };
            e += sign * (row[k] + 2.0 * field[k]);
            x[k] = !x[k];
            for j in 0..d {
                if j != k {
                    field[j] += sign * row[j];
                }
            }
            gray ^= 1 << bitpos;
            if step & 0xfff == 0 {
                e = self.energy_index(gray);
            }
            f(gray, e);
        }
    }

    /// Same model with every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            q: self.q.iter().map(|v| v * c).collect(),
            offset: self.offset * c,
            varmap: self.varmap,
            weights: Weights {
                scaling: self.weights.scaling * c,
                penalties: self.weights.penalties.clone(),
            },
        }
    }

    pub fn to_ising(&self) -> IsingHamiltonian {
        qubo_to_ising(self)
    }
}

/// Accumulates polynomial terms into a symmetric QUBO matrix.
#[derive(Debug, Clone)]
pub(crate) struct QuboBuilder {
    dim: usize,
    q: Vec<f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            q: vec![0.0; dim * dim],
            offset: 0.0,
        }
    }

    pub fn constant(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn linear(&mut self, i: usize, c: f64) {
        self.q[i * self.dim + i] += c;
    }

    /// Adds `c * x_i * x_j`.
    pub fn quadratic(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.linear(i, c);
        } else {
            self.q[i * self.dim + j] += 0.5 * c;
            self.q[j * self.dim + i] += 0.5 * c;
        }
    }

    /// Adds `weight * (constant + sum_k a_k x_k)^2`; indices must be distinct.
    pub fn squared(&mut self, weight: f64, constant: f64, terms: &[(usize, f64)]) {
        self.constant(weight * constant * constant);
        for (a, &(i, ai)) in terms.iter().enumerate() {
            self.linear(i, weight * (2.0 * constant * ai + ai * ai));
            for &(j, aj) in &terms[a + 1..] {
                self.quadratic(i, j, weight * 2.0 * ai * aj);
            }
        }
    }

    pub fn finish(self, varmap: VariableMap, weights: Weights) -> QuboProblem {
        debug_assert_eq!(varmap.dim(), self.dim);
        QuboProblem {
            dim: self.dim,
            q: self.q,
            offset: self.offset,
            varmap,
            weights,
        }
    }
}
