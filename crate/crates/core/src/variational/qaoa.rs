use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::statevector::{DiagonalEnergy, StateVector};

/// Total evolution time spread over the layers by [`linear_init`].
pub const LINEAR_INIT_DT: f64 = 0.75;

/// Splits `[gamma_1..gamma_p, beta_1..beta_p]`.
pub fn split_params(params: &[f64]) -> Result<(&[f64], &[f64])> {
    if params.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "alternating ansatz needs an even parameter count, got {}",
            params.len()
        )));
    }
    Ok(params.split_at(params.len() / 2))
}

/// `prod_k exp(-i beta_k H_M) exp(-i gamma_k H_P) |+>^q` with the X mixer.
pub fn qaoa_prepare(params: &[f64], problem: &DiagonalEnergy) -> Result<StateVector> {
    let (gammas, betas) = split_params(params)?;
    let mut s = StateVector::init_plus(problem.qubits())?;
    for (&g, &b) in gammas.iter().zip(betas) {
        s.apply_phase(problem, g)?;
        s.apply_mixer_x(b);
    }
    Ok(s)
}

/// Annealing-like start: `gamma` grows and `beta` shrinks linearly over the
/// layers, `gamma_k = (k - 1/2) / p * dt`, `beta_k = (1 - (k - 1/2) / p) * dt`.
pub fn linear_init(depth: usize, dt: f64) -> Vec<f64> {
    let frac = |k: usize| (k as f64 + 0.5) / depth as f64;
    let gammas = (0..depth).map(|k| frac(k) * dt);
    let betas = (0..depth).map(|k| (1.0 - frac(k)) * dt);
    gammas.chain(betas).collect()
}

/// Angles uniform in `[-pi, pi)`.
pub fn random_init(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(-PI..PI)).collect()
}
