use super::{BitString, QuboProblem};
use crate::error::{Error, Result};

/// Spin model `E(z) = sum_i h_i z_i + sum_{i<j} J_ij z_i z_j + constant`,
/// with `z_i = 2 x_i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingHamiltonian {
    n: usize,
    h: Vec<f64>,
    /// Dense row-major, only `i < j` entries are used.
    j: Vec<f64>,
    constant: f64,
}

impl IsingHamiltonian {
    pub fn new(h: Vec<f64>, couplings: &[(usize, usize, f64)], constant: f64) -> Result<Self> {
        let n = h.len();
        let mut j = vec![0.0; n * n];
        for &(a, b, w) in couplings {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("bad coupling ({a}, {b})")));
            }
            let (a, b) = (a.min(b), a.max(b));
            j[a * n + b] += w;
        }
        Ok(Self { n, h, j, constant })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    /// Coupling between `i` and `j` in either order; zero on the diagonal.
    pub fn j(&self, i: usize, k: usize) -> f64 {
        if i == k {
            0.0
        } else {
            self.j[i.min(k) * self.n + i.max(k)]
        }
    }

    /// Nonzero couplings `(i, j, J_ij)` with `i < j`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                let w = self.j[a * self.n + b];
                if w != 0.0 {
                    out.push((a, b, w));
                }
            }
        }
        out
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn energy(&self, z: &[i8]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: z.len(),
            });
        }
        if z.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("spins must be +1 or -1".into()));
        }
        Ok(self.energy_without_constant(z) + self.constant)
    }

    /// Spin part only; the value reported as "energy" by the solvers.
    pub fn energy_without_constant(&self, z: &[i8]) -> f64 {
        let mut e = 0.0;
        for a in 0..self.n {
            let za = z[a] as f64;
            e += self.h[a] * za;
            let row = &self.j[a * self.n..(a + 1) * self.n];
            for b in a + 1..self.n {
                if row[b] != 0.0 {
                    e += row[b] * za * z[b] as f64;
                }
            }
        }
        e
    }

    /// Energy without constant of basis state `index` (variable 0 = most significant bit).
    pub fn energy_index(&self, index: u64) -> f64 {
        let z: Vec<i8> = BitString::from_index(index, self.n).spins();
        self.energy_without_constant(&z)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    /// QUBO over `x = (1 + z) / 2` with the same energies.
    pub fn to_qubo(&self) -> QuboProblem {
        let n = self.n;
        let mut q = vec![0.0; n * n];
        let mut offset = self.constant;
        for a in 0..n {
            q[a * n + a] += 2.0 * self.h[a];
            offset -= self.h[a];
            for b in a + 1..n {
                let w = self.j[a * n + b];
                // w (2xa - 1)(2xb - 1) = 4w xa xb - 2w xa - 2w xb + w
                q[a * n + b] += 2.0 * w;
                q[b * n + a] += 2.0 * w;
                q[a * n + a] -= 2.0 * w;
                q[b * n + b] -= 2.0 * w;
                offset += w;
            }
        }
        QuboProblem::from_dense(q, n, offset).expect("symmetric by construction")
    }
}

/// Substitutes `x = (1 + z) / 2`; the constant keeps the QUBO offset and the substitution remainder.
pub fn qubo_to_ising(qubo: &QuboProblem) -> IsingHamiltonian {
    let n = qubo.dim();
    let mut h = vec![0.0; n];
    let mut j = vec![0.0; n * n];
    let mut constant = qubo.offset();
    for a in 0..n {
        let qaa = qubo.q(a, a);
        h[a] += qaa / 2.0;
        constant += qaa / 2.0;
        for b in a + 1..n {
            // q_ab x_a x_b + q_ba x_b x_a = 2 q_ab (1 + za)(1 + zb) / 4
            let w = qubo.q(a, b);
            if w != 0.0 {
                j[a * n + b] += w / 2.0;
                h[a] += w / 2.0;
                h[b] += w / 2.0;
                constant += w / 2.0;
            }
        }
    }
    IsingHamiltonian { n, h, j, constant }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_only() {
        let q = QuboProblem::from_dense(vec![0.0; 4], 2, 5.0).unwrap();
        let ham = qubo_to_ising(&q);
        assert_eq!(ham.fields(), &[0.0, 0.0]);
        assert!(ham.couplings().is_empty());
        assert_eq!(ham.constant(), 5.0);
    }

    #[test]
    fn single_variable() {
        let q = QuboProblem::from_dense(vec![3.0], 1, 0.0).unwrap();
        let ham = qubo_to_ising(&q);
        assert_eq!(ham.h(0), 1.5);
        assert_eq!(ham.constant(), 1.5);
    }

    #[test]
    fn dense_round_trip() {
        let q = QuboProblem::from_dense(
            vec![1.0, -2.0, 0.5, -2.0, 3.0, 4.0, 0.5, 4.0, -1.0],
            3,
            0.25,
        )
        .unwrap();
        let ham = qubo_to_ising(&q);
        let back = ham.to_qubo();
        for idx in 0..8u64 {
            let x = BitString::from_index(idx, 3);
            let eq = q.energy(&x).unwrap();
            assert!((eq - ham.energy(&x.spins()).unwrap()).abs() < 1e-12);
            assert!((eq - back.energy(&x).unwrap()).abs() < 1e-12);
        }
    }
}
