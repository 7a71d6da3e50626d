use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::qaoa::split_params;
use crate::encoding::{BitString, QuboProblem};
use crate::error::{Error, Result};
use crate::statevector::{DiagonalEnergy, Gate, StateVector};

/// Added to `-lambda_min` so the shifted matrix is strictly positive definite.
pub const CONVEX_EPS: f64 = 1e-6;
/// Relaxed values this close to 0 or 1 are snapped.
pub const SNAP_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 200_000;
const STEP_TOL: f64 = 1e-13;

/// Minimizer of the convexified continuous relaxation on `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub x: Vec<f64>,
    /// Relaxed objective at `x`; a lower bound on the binary minimum.
    pub objective: f64,
    /// Diagonal shift `lambda` applied to `Q`.
    pub shift: f64,
    pub iterations: usize,
}

impl RelaxedSolution {
    pub fn is_integral(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn to_bitstring(&self) -> Option<BitString> {
        self.is_integral()
            .then(|| BitString::new(self.x.iter().map(|&v| v == 1.0).collect()))
    }
}

/// Minimizes `f(x) = x^T (Q + lambda I) x - lambda sum_i x_i + offset` over the box.
///
/// `f` equals the QUBO energy on binary points and is convex for
/// `lambda = -lambda_min(Q) + eps` (no shift when `Q` is already positive
/// semidefinite). Solved by projected gradient descent with step `1 / L`,
/// `L = 2 lambda_max(Q + lambda I)`, from the box centre.
pub fn ws_relax(qubo: &QuboProblem) -> Result<RelaxedSolution> {
    let n = qubo.dim();
    let q = DMatrix::from_row_slice(n, n, qubo.matrix());
    let eig = SymmetricEigen::new(q.clone());
    let lmin = eig.eigenvalues.min();
    let lmax = eig.eigenvalues.max();
    let shift = if lmin < 0.0 { -lmin + CONVEX_EPS } else { 0.0 };
    let a = &q + DMatrix::identity(n, n) * shift;
    let lip = 2.0 * (lmax + shift);
    let mut x = DVector::from_element(n, 0.5);
    let mut iterations = 0;
    if lip > 0.0 {
        let step = 1.0 / lip;
        while iterations < MAX_ITERS {
            iterations += 1;
            let grad = &a * &x * 2.0 - DVector::from_element(n, shift);
            let next = (&x - grad * step).map(|v| v.clamp(0.0, 1.0));
            let moved = (&next - &x).amax();
            x = next;
            if moved < STEP_TOL {
                break;
            }
        }
    } else {
        // Q = 0: every point is optimal.
        x.fill(0.0);
    }
    let x: Vec<f64> = x
        .iter()
        .map(|&v| {
            if v < SNAP_TOL {
                0.0
            } else if v > 1.0 - SNAP_TOL {
                1.0
            } else {
                v
            }
        })
        .collect();
    let xv = DVector::from_column_slice(&x);
    let objective = xv.dot(&(&a * &xv)) - shift * xv.sum() + qubo.offset();
    Ok(RelaxedSolution {
        x,
        objective,
        shift,
        iterations,
    })
}

fn check_relaxed(x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("relaxed value {v} outside [0, 1]")));
    }
    Ok(())
}

/// `prod_i Ry(2 arcsin sqrt(x_i)) |0>`, so qubit `i` reads 1 with probability `x_i`.
pub fn ws_initial_state(x: &[f64]) -> Result<StateVector> {
    check_relaxed(x)?;
    let factors: Vec<[Complex64; 2]> = x
        .iter()
        .map(|&v| [Complex64::new((1.0 - v).sqrt(), 0.0), Complex64::new(v.sqrt(), 0.0)])
        .collect();
    StateVector::product(&factors)
}

/// `exp(-i beta H_i)` with `H_i = -(cos(theta) Z + sin(theta) X)`, `theta = 2 arcsin sqrt(x_i)`.
/// The warm-start qubit state is the ground state of `H_i`.
pub fn ws_mixer_gate(x: f64, beta: f64) -> Gate {
    let theta = 2.0 * x.sqrt().asin();
    let (c, s) = (beta.cos(), beta.sin());
    let (ct, st) = (theta.cos(), theta.sin());
    // cos(beta) I + i sin(beta) (cos(theta) Z + sin(theta) X)
    [
        [Complex64::new(c, s * ct), Complex64::new(0.0, s * st)],
        [Complex64::new(0.0, s * st), Complex64::new(c, -s * ct)],
    ]
}

/// Warm-started QAOA: the [`ws_initial_state`] followed by `p` layers of the
/// problem phase and the per-qubit [`ws_mixer_gate`]. Parameters are
/// `[gamma_1..gamma_p, beta_1..beta_p]`.
pub fn ws_prepare(params: &[f64], problem: &DiagonalEnergy, x: &[f64]) -> Result<StateVector> {
    let (gammas, betas) = split_params(params)?;
    if x.len() != problem.qubits() {
        return Err(Error::LengthMismatch {
            expected: problem.qubits(),
            actual: x.len(),
        });
    }
    let mut s = ws_initial_state(x)?;
    for (&g, &b) in gammas.iter().zip(betas) {
        s.apply_phase(problem, g)?;
        for (j, &v) in x.iter().enumerate() {
            s.apply_gate(j, &ws_mixer_gate(v, b))?;
        }
    }
    Ok(s)
}
