//! Plain-text exports.
//!
//! QUBO: a `# dim offset` header followed by one `i j value` line per nonzero
//! matrix entry (both triangles). Ising: a `# n constant` header, then an `h`
//! section of `i value` lines and a `J` section of `i j value` lines with `i < j`.

use std::fmt::Write as _;

use super::{IsingHamiltonian, QuboProblem};
use crate::error::{Error, Result};

pub fn qubo_to_text(qubo: &QuboProblem) -> String {
    let d = qubo.dim();
    let mut s = format!("# {} {}\n", d, qubo.offset());
    for i in 0..d {
        for j in 0..d {
            let v = qubo.q(i, j);
            if v != 0.0 {
                writeln!(s, "{i} {j} {v}").unwrap();
            }
        }
    }
    s
}

fn parse_header(line: Option<&str>) -> Result<(usize, f64)> {
    let line = line.ok_or_else(|| Error::Parse("missing header".into()))?;
    let rest = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("header must start with '#': {line:?}")))?;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse(format!("header needs two fields: {line:?}")));
    }
    let dim = fields[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension {:?}", fields[0])))?;
    let c = parse_f64(fields[1])?;
    Ok((dim, c))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

fn parse_index(s: &str, dim: usize) -> Result<usize> {
    let i: usize = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad index {s:?}")))?;
    if i >= dim {
        return Err(Error::Parse(format!("index {i} out of range for dimension {dim}")));
    }
    Ok(i)
}

pub fn qubo_from_text(text: &str) -> Result<QuboProblem> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let (dim, offset) = parse_header(lines.next())?;
    let mut q = vec![0.0; dim * dim];
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("expected 'i j value': {line:?}")));
        }
        let (i, j) = (parse_index(f[0], dim)?, parse_index(f[1], dim)?);
        q[i * dim + j] = parse_f64(f[2])?;
    }
    QuboProblem::from_dense(q, dim, offset)
}

pub fn ising_to_text(ham: &IsingHamiltonian) -> String {
    let mut s = format!("# {} {}\nh\n", ham.n(), ham.constant());
    for (i, &v) in ham.fields().iter().enumerate() {
        if v != 0.0 {
            writeln!(s, "{i} {v}").unwrap();
        }
    }
    s.push_str("J\n");
    for (i, j, v) in ham.couplings() {
        writeln!(s, "{i} {j} {v}").unwrap();
    }
    s
}

pub fn ising_from_text(text: &str) -> Result<IsingHamiltonian> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let (n, constant) = parse_header(lines.next())?;
    let mut h = vec![0.0; n];
    let mut couplings = Vec::new();
    let mut section = None;
    for line in lines {
        match line {
            "h" | "J" => {
                section = Some(line);
                continue;
            }
            _ => {}
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match (section, f.len()) {
            (Some("h"), 2) => h[parse_index(f[0], n)?] = parse_f64(f[1])?,
            (Some("J"), 3) => {
                let (i, j) = (parse_index(f[0], n)?, parse_index(f[1], n)?);
                if i >= j {
                    return Err(Error::Parse(format!("coupling needs i < j: {line:?}")));
                }
                couplings.push((i, j, parse_f64(f[2])?));
            }
            _ => return Err(Error::Parse(format!("unexpected line {line:?}"))),
        }
    }
    IsingHamiltonian::new(h, &couplings, constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_tsp_qubo;
    use crate::instance::fig1_blue;

    #[test]
    fn round_trips() {
        let q = build_tsp_qubo(&fig1_blue(4).unwrap(), 0.01, 3.7).unwrap();
        let back = qubo_from_text(&qubo_to_text(&q)).unwrap();
        assert_eq!(back.matrix(), q.matrix());
        assert_eq!(back.offset(), q.offset());
        let ham = q.to_ising();
        let hb = ising_from_text(&ising_to_text(&ham)).unwrap();
        assert_eq!(hb, ham);
    }

    #[test]
    fn rejects_garbage() {
        assert!(qubo_from_text("").is_err());
        assert!(qubo_from_text("# 2 0\n0 5 1.0\n").is_err());
        assert!(qubo_from_text("# 2 0\n0 1 1.0\n").is_err());
        assert!(ising_from_text("# 2 0\nJ\n1 0 1\n").is_err());
    }
}
