use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::{Axis, StateVector};

/// `layers * (3q - 1)`: an Rx and an Rz angle per qubit plus `q - 1` chain CRx angles per layer.
pub fn hevqe_param_count(q: usize, layers: usize) -> usize {
    layers * (3 * q).saturating_sub(1)
}

fn check(params: &[f64], q: usize, layers: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("ansatz needs at least one qubit".into()));
    }
    let want = hevqe_param_count(q, layers);
    if params.len() != want {
        return Err(Error::LengthMismatch {
            expected: want,
            actual: params.len(),
        });
    }
    Ok(())
}

/// Hardware-efficient ansatz on `|0...0>`.
///
/// Each layer applies `Rx(theta)` to every qubit, then `Rz(phi)` to every
/// qubit, then `CRx(lambda)` along the chain `0 -> 1 -> ... -> q-1`. Parameters
/// are layer-major, ordered `[rx_0..rx_{q-1}, rz_0..rz_{q-1}, crx_0..crx_{q-2}]`
/// within a layer. The first layer's rotations act on a product state and are
/// built directly.
pub fn hevqe_prepare(params: &[f64], q: usize, layers: usize) -> Result<StateVector> {
    check(params, q, layers)?;
    if layers == 0 {
        return StateVector::init_zero(q);
    }
    let per = 3 * q - 1;
    let first = &params[..per];
    let factors: Vec<[Complex64; 2]> = (0..q)
        .map(|j| {
            let (t, p) = (first[j], first[q + j]);
            let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
            [
                Complex64::from_polar(c, -p / 2.0),
                Complex64::from_polar(s, p / 2.0) * Complex64::new(0.0, -1.0),
            ]
        })
        .collect();
    let mut s = StateVector::product(&factors)?;
    entangle(&mut s, &first[2 * q..])?;
    for layer in params[per..].chunks(per) {
        apply_layer(&mut s, layer)?;
    }
    Ok(s)
}

/// Gate-by-gate version of [`hevqe_prepare`].
pub fn hevqe_prepare_reference(params: &[f64], q: usize, layers: usize) -> Result<StateVector> {
    check(params, q, layers)?;
    let mut s = StateVector::init_zero(q)?;
    if layers > 0 {
        for layer in params.chunks(3 * q - 1) {
            apply_layer(&mut s, layer)?;
        }
    }
    Ok(s)
}

fn apply_layer(s: &mut StateVector, layer: &[f64]) -> Result<()> {
    let q = s.qubits();
    for j in 0..q {
        s.apply_rotation(j, Axis::X, layer[j])?;
    }
    for j in 0..q {
        s.apply_rotation(j, Axis::Z, layer[q + j])?;
    }
    entangle(s, &layer[2 * q..])
}

fn entangle(s: &mut StateVector, angles: &[f64]) -> Result<()> {
    for (j, &a) in angles.iter().enumerate() {
        s.apply_controlled_rx(j, j + 1, a)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::random_init;

    #[test]
    fn counts() {
        assert_eq!(hevqe_param_count(9, 1), 26);
        assert_eq!(hevqe_param_count(16, 2), 94);
        for q in 1..6 {
            for l in 0..4 {
                let p = vec![0.0; hevqe_param_count(q, l)];
                assert!(hevqe_prepare(&p, q, l).is_ok());
            }
        }
        assert!(hevqe_prepare(&[0.0; 25], 9, 1).is_err());
    }

    #[test]
    fn zero_params_give_zero_state() {
        let s = hevqe_prepare(&[0.0; 26], 9, 1).unwrap();
        assert_eq!(s, StateVector::init_zero(9).unwrap());
    }

    #[test]
    fn fast_path_matches_reference() {
        for (q, layers) in [(3, 1), (5, 2), (9, 1), (4, 3)] {
            let p = random_init(hevqe_param_count(q, layers), q as u64 + 10 * layers as u64);
            let a = hevqe_prepare(&p, q, layers).unwrap();
            let b = hevqe_prepare_reference(&p, q, layers).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
            assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
