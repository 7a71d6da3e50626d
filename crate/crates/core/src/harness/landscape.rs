use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cost samples on a square grid through `center` spanned by two orthonormal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeScan {
    pub center: Vec<f64>,
    pub directions: [Vec<f64>; 2],
    pub extent: f64,
    pub resolution: usize,
    /// Row-major `(theta1, theta2, cost)`, `theta2` fastest.
    pub samples: Vec<(f64, f64, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = dot(v, v).sqrt();
    if n < 1e-8 {
        return Err(Error::Degenerate("random direction collapsed".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Two Gaussian directions made orthonormal by Gram-Schmidt (applied twice).
pub fn random_plane(dim: usize, seed: u64) -> Result<[Vec<f64>; 2]> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("a plane needs >= 2 parameters, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut u = draw();
    normalize(&mut u)?;
    let mut v = draw();
    for _ in 0..2 {
        let c = dot(&u, &v);
        v.iter_mut().zip(&u).for_each(|(x, y)| *x -= c * y);
        normalize(&mut v)?;
    }
    Ok([u, v])
}

/// Grid offsets `-extent..=extent`; a single `0` when `extent == 0` or `resolution == 1`.
pub fn grid_axis(extent: f64, resolution: usize) -> Vec<f64> {
    if extent == 0.0 || resolution <= 1 {
        return vec![0.0];
    }
    (0..resolution)
        .map(|k| -extent + 2.0 * extent * k as f64 / (resolution - 1) as f64)
        .collect()
}

pub fn scan(
    cost: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    directions: [Vec<f64>; 2],
    extent: f64,
    resolution: usize,
) -> Result<LandscapeScan> {
    if !(extent >= 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!("extent {extent} must be >= 0")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be >= 1".into()));
    }
    let axis = grid_axis(extent, resolution);
    let points: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .collect();
    let [u, v] = &directions;
    let samples = points
        .par_iter()
        .map(|&(a, b)| {
            let x: Vec<f64> = center
                .iter()
                .zip(u.iter().zip(v))
                .map(|(c, (du, dv))| c + a * du + b * dv)
                .collect();
            (a, b, cost(&x))
        })
        .collect();
    Ok(LandscapeScan {
        center: center.to_vec(),
        directions,
        extent,
        resolution: axis.len(),
        samples,
    })
}

impl LandscapeScan {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["theta1", "theta2", "cost"])?;
        for &(a, b, c) in &self.samples {
            w.write_record([a.to_string(), b.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Heatmap with one square per sample, dark for low cost.
    pub fn to_svg(&self, cell_px: usize) -> String {
        let r = self.resolution;
        let size = r * cell_px;
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s.2), h.max(s.2)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        for (k, &(_, _, c)) in self.samples.iter().enumerate() {
            let t = if c.is_finite() { (c - lo) / span } else { 1.0 };
            // Dark blue to yellow.
            let red = (30.0 + 220.0 * t) as u8;
            let green = (20.0 + 210.0 * t) as u8;
            let blue = (90.0 - 60.0 * t) as u8;
            let (i, j) = (k / r, k % r);
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{cell_px}" height="{cell_px}" fill="#{red:02x}{green:02x}{blue:02x}"/>"##,
                i * cell_px,
                (r - 1 - j) * cell_px
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_is_orthonormal() {
        for dim in [2, 10, 27] {
            let [u, v] = random_plane(dim, 9).unwrap();
            assert!((dot(&u, &u) - 1.0).abs() < 1e-12);
            assert!((dot(&v, &v) - 1.0).abs() < 1e-12);
            assert!(dot(&u, &v).abs() < 1e-12);
            assert_eq!(random_plane(dim, 9).unwrap(), [u, v]);
        }
        assert!(random_plane(1, 0).is_err());
    }

    #[test]
    fn grid_shapes() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let dirs = random_plane(3, 1).unwrap();
        let s = scan(&f, &[0.0; 3], dirs.clone(), 1.0, 11).unwrap();
        assert_eq!(s.samples.len(), 121);
        // Orthonormal directions: cost is a^2 + b^2.
        for &(a, b, c) in &s.samples {
            assert!((c - a * a - b * b).abs() < 1e-12);
        }
        let single = scan(&f, &[1.0; 3], dirs, 0.0, 11).unwrap();
        assert_eq!(single.samples, vec![(0.0, 0.0, 3.0)]);
        assert!(s.to_svg(4).matches("<rect").count() == 121);
    }
}
