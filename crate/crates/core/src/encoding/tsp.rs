use super::{BitString, QuboBuilder, QuboProblem, VariableMap, Weights};
use crate::error::{Error, Result};
use crate::instance::TspInstance;

/// Flat index of "city `city` at position `position`" in the reduced layout
/// (both `1..n`).
#[inline]
pub fn tsp_index(n: usize, position: usize, city: usize) -> usize {
    (position - 1) * (n - 1) + (city - 1)
}

/// One-hot TSP model on `(n-1)^2` variables with city 0 pinned to position 0.
///
/// Energy of a bitstring is `s * (d(x) + P * v(x))` where `d(x)` counts every
/// edge between consecutive positions exactly once (a tour's length for a
/// feasible `x`) and `v(x)` is the row/column one-hot violation.
pub fn build_tsp_qubo(inst: &TspInstance, s: f64, p: f64) -> Result<QuboProblem> {
    let n = inst.n();
    if n < 3 {
        return Err(Error::InvalidInstance(format!("TSP needs n >= 3, got {n}")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("scaling s = {s} must be > 0")));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("penalty P = {p} must be > 0")));
    }
    Ok(assemble(inst, s, p))
}

/// Distance part `d(x)` alone (`s = 1`, `P = 0`); `n >= 3` is the caller's job.
pub(crate) fn tsp_distance_qubo(inst: &TspInstance) -> QuboProblem {
    assemble(inst, 1.0, 0.0)
}

fn assemble(inst: &TspInstance, s: f64, p: f64) -> QuboProblem {
    let n = inst.n();
    let m = n - 1;
    let idx = |pos: usize, city: usize| tsp_index(n, pos, city);
    let mut b = QuboBuilder::new(m * m);

    // Edges touching the pinned depot city become linear terms.
    for city in 1..=m {
        b.linear(idx(1, city), s * inst.dist(0, city));
        b.linear(idx(m, city), s * inst.dist(city, 0));
    }
    for pos in 1..m {
        for a in 1..=m {
            for c in 1..=m {
                if a != c {
                    b.quadratic(idx(pos, a), idx(pos + 1, c), s * inst.dist(a, c));
                }
            }
        }
    }
    for city in 1..=m {
        let terms: Vec<_> = (1..=m).map(|pos| (idx(pos, city), -1.0)).collect();
        b.squared(s * p, 1.0, &terms);
    }
    for pos in 1..=m {
        let terms: Vec<_> = (1..=m).map(|city| (idx(pos, city), -1.0)).collect();
        b.squared(s * p, 1.0, &terms);
    }
    b.finish(
        VariableMap::Tsp { n },
        Weights {
            scaling: s,
            penalties: vec![p],
        },
    )
}

/// Bitstring of a tour starting at city 0.
pub fn encode_tsp_path(path: &[usize]) -> Result<BitString> {
    let n = path.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "path must visit at least 3 cities, got {n}"
        )));
    }
    if path[0] != 0 {
        return Err(Error::InvalidArgument("path must start at city 0".into()));
    }
    let mut seen = vec![false; n];
    for &c in path {
        if c >= n || seen[c] {
            return Err(Error::InvalidArgument(format!(
                "{path:?} is not a permutation of 0..{n}"
            )));
        }
        seen[c] = true;
    }
    let mut x = BitString::zeros((n - 1) * (n - 1));
    for (pos, &city) in path.iter().enumerate().skip(1) {
        x.set(tsp_index(n, pos, city), true);
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TspDecode {
    Tour(Vec<usize>),
    Infeasible { violation: u32 },
}

impl TspDecode {
    pub fn tour(&self) -> Option<&[usize]> {
        match self {
            TspDecode::Tour(t) => Some(t),
            TspDecode::Infeasible { .. } => None,
        }
    }
}

fn line_sums(x: &[bool], n: usize) -> (Vec<u32>, Vec<u32>) {
    let m = n - 1;
    let mut rows = vec![0u32; m];
    let mut cols = vec![0u32; m];
    for pos in 1..=m {
        for city in 1..=m {
            if x[tsp_index(n, pos, city)] {
                rows[pos - 1] += 1;
                cols[city - 1] += 1;
            }
        }
    }
    (rows, cols)
}

fn side_of(len: usize) -> Result<usize> {
    let m = (len as f64).sqrt().round() as usize;
    if m * m != len || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "{len} bits is not a TSP register (n-1)^2 with n >= 3"
        )));
    }
    Ok(m + 1)
}

/// Decodes a TSP bitstring; `n` is the city count.
pub fn decode_tsp(x: &BitString, n: usize) -> Result<TspDecode> {
    if x.len() != (n - 1) * (n - 1) {
        return Err(Error::LengthMismatch {
            expected: (n - 1) * (n - 1),
            actual: x.len(),
        });
    }
    let v = violation_bits(x.bits(), n);
    if v > 0 {
        return Ok(TspDecode::Infeasible { violation: v });
    }
    let mut tour = vec![0usize; n];
    for pos in 1..n {
        tour[pos] = (1..n)
            .find(|&c| x.get(tsp_index(n, pos, c)))
            .expect("one-hot row");
    }
    Ok(TspDecode::Tour(tour))
}

pub(crate) fn violation_bits(x: &[bool], n: usize) -> u32 {
    let (rows, cols) = line_sums(x, n);
    rows.iter()
        .chain(cols.iter())
        .map(|&c| {
            let d = 1 - c as i64;
            (d * d) as u32
        })
        .sum()
}

/// `v(x) = sum_rows (1 - row sum)^2 + sum_cols (1 - col sum)^2`; zero iff feasible.
pub fn violation_weight(x: &BitString, varmap: &VariableMap) -> Result<u32> {
    let VariableMap::Tsp { n } = *varmap else {
        return Err(Error::InvalidArgument("violation weight needs a TSP map".into()));
    };
    if x.len() != varmap.dim() {
        return Err(Error::LengthMismatch {
            expected: varmap.dim(),
            actual: x.len(),
        });
    }
    Ok(violation_bits(x.bits(), n))
}

/// Distance part `d(x)` of the TSP energy (unscaled).
pub fn distance_term(inst: &TspInstance, x: &BitString) -> Result<f64> {
    let n = side_of(x.len())?;
    if n != inst.n() {
        return Err(Error::LengthMismatch {
            expected: (inst.n() - 1) * (inst.n() - 1),
            actual: x.len(),
        });
    }
    let m = n - 1;
    let on = |pos: usize, city: usize| x.get(tsp_index(n, pos, city));
    let mut d = 0.0;
    for city in 1..=m {
        if on(1, city) {
            d += inst.dist(0, city);
        }
        if on(m, city) {
            d += inst.dist(city, 0);
        }
    }
    for pos in 1..m {
        for a in 1..=m {
            if !on(pos, a) {
                continue;
            }
            for c in 1..=m {
                if on(pos + 1, c) {
                    d += inst.dist(a, c);
                }
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random_tsp;

    fn all_paths(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..left.len() {
                let c = left.remove(i);
                prefix.push(c);
                rec(prefix, left, out);
                prefix.pop();
                left.insert(i, c);
            }
        }
        let mut out = Vec::new();
        rec(&mut vec![0], &mut (1..n).collect(), &mut out);
        out
    }

    #[test]
    fn dims_for_published_sizes() {
        for (n, dim) in [(4, 9), (5, 16), (6, 25)] {
            let inst = generate_random_tsp(n, 1, 10.0, 50.0).unwrap();
            assert_eq!(build_tsp_qubo(&inst, 1.0, 100.0).unwrap().dim(), dim);
        }
    }

    #[test]
    fn published_bitstrings() {
        assert_eq!(encode_tsp_path(&[0, 1, 3, 2]).unwrap().to_string(), "100001010");
        assert_eq!(encode_tsp_path(&[0, 2, 3, 1]).unwrap().to_string(), "010001100");
    }

    #[test]
    fn encode_rejects_malformed_paths() {
        assert!(encode_tsp_path(&[1, 0, 2, 3]).is_err());
        assert!(encode_tsp_path(&[0, 1, 1, 2]).is_err());
        assert!(encode_tsp_path(&[0, 1, 4, 2]).is_err());
    }

    #[test]
    fn decode_round_trip_n4() {
        let paths = all_paths(4);
        assert_eq!(paths.len(), 6);
        for p in paths {
            let x = encode_tsp_path(&p).unwrap();
            assert_eq!(decode_tsp(&x, 4).unwrap(), TspDecode::Tour(p));
        }
    }

    #[test]
    fn violation_examples() {
        let map = VariableMap::Tsp { n: 4 };
        assert_eq!(violation_weight(&BitString::zeros(9), &map).unwrap(), 6);
        let x = encode_tsp_path(&[0, 1, 2, 3]).unwrap();
        assert_eq!(violation_weight(&x, &map).unwrap(), 0);
        // city 1 placed at positions 1 and 2, position 3 holds city 3:
        // rows (1,1,1) ok; cols: city1 = 2 -> 1, city2 = 0 -> 1, city3 = 1 -> 0
        let dup: BitString = "100100001".parse().unwrap();
        assert_eq!(violation_weight(&dup, &map).unwrap(), 2);
        assert!(matches!(
            decode_tsp(&dup, 4).unwrap(),
            TspDecode::Infeasible { violation: 2 }
        ));
    }

    #[test]
    fn zero_distance_feasible_states_have_zero_energy() {
        let rows = vec![vec![0.0; 5]; 5];
        let inst = TspInstance::from_rows("zero", &rows).unwrap();
        let q = build_tsp_qubo(&inst, 1.7, 13.0).unwrap();
        for p in all_paths(5) {
            let e = q.energy(&encode_tsp_path(&p).unwrap()).unwrap();
            assert!(e.abs() < 1e-12, "{p:?}: {e}");
        }
    }

    #[test]
    fn energy_decomposes_into_distance_and_violation() {
        let inst = generate_random_tsp(4, 3, 10.0, 50.0).unwrap();
        let (s, p) = (0.3, 41.0);
        let q = build_tsp_qubo(&inst, s, p).unwrap();
        for idx in 0..512u64 {
            let x = BitString::from_index(idx, 9);
            let d = distance_term(&inst, &x).unwrap();
            let v = violation_weight(&x, q.varmap()).unwrap() as f64;
            let e = q.energy(&x).unwrap();
            assert!((e - s * (d + p * v)).abs() < 1e-9, "{x}: {e} vs {}", s * (d + p * v));
        }
    }

    #[test]
    fn empty_assignment_energy_is_pure_violation() {
        let inst = generate_random_tsp(5, 9, 10.0, 50.0).unwrap();
        let (s, p) = (2.0, 7.0);
        let q = build_tsp_qubo(&inst, s, p).unwrap();
        // 2(n-1) empty rows and columns, each contributing (1-0)^2
        let expected = s * p * 2.0 * 4.0;
        assert!((q.energy(&BitString::zeros(16)).unwrap() - expected).abs() < 1e-12);
        assert_eq!(q.offset(), expected);
    }

    #[test]
    fn feasible_energy_is_scaled_tour_length_for_all_tours() {
        for n in 3..=5 {
            let inst = generate_random_tsp(n, 11 + n as u64, 10.0, 50.0).unwrap();
            for &(s, p) in &[(1.0, 100.0), (0.05, 3.0), (3.0, 57.5)] {
                let q = build_tsp_qubo(&inst, s, p).unwrap();
                for path in all_paths(n) {
                    let e = q.energy(&encode_tsp_path(&path).unwrap()).unwrap();
                    let l = inst.tour_length(&path);
                    assert!((e - s * l).abs() < 1e-9 * (1.0 + s * l), "n={n} {path:?}");
                }
            }
        }
    }

    #[test]
    fn scaling_covariance_and_penalty_slope() {
        let inst = generate_random_tsp(4, 5, 10.0, 50.0).unwrap();
        let base = build_tsp_qubo(&inst, 1.0, 20.0).unwrap();
        let tripled = build_tsp_qubo(&inst, 3.0, 20.0).unwrap();
        let more = build_tsp_qubo(&inst, 1.0, 21.0).unwrap();
        for idx in 0..512u64 {
            let x = BitString::from_index(idx, 9);
            let e = base.energy(&x).unwrap();
            assert!((tripled.energy(&x).unwrap() - 3.0 * e).abs() < 1e-9);
            let v = violation_weight(&x, base.varmap()).unwrap() as f64;
            assert!((more.energy(&x).unwrap() - e - v).abs() < 1e-9);
        }
    }

    #[test]
    fn reversed_tours_are_degenerate() {
        let inst = generate_random_tsp(5, 2, 10.0, 50.0).unwrap();
        let q = build_tsp_qubo(&inst, 1.0, 100.0).unwrap();
        for path in all_paths(5) {
            let mut rev = vec![0];
            rev.extend(path[1..].iter().rev());
            let a = q.energy(&encode_tsp_path(&path).unwrap()).unwrap();
            let b = q.energy(&encode_tsp_path(&rev).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_weights_rejected() {
        let inst = generate_random_tsp(4, 5, 10.0, 50.0).unwrap();
        assert!(build_tsp_qubo(&inst, 0.0, 1.0).is_err());
        assert!(build_tsp_qubo(&inst, 1.0, -1.0).is_err());
    }
}
