use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Budget, Evaluator, OptResult, StallCounter, Step, Termination};
use crate::error::{Error, Result};

/// Gain sequences `a_k = a / (k + 1 + A)^alpha` and `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaGains {
    /// `None` calibrates `a` so the first step has length about `target_step`.
    pub a: Option<f64>,
    pub c: f64,
    /// `None` uses 10% of the iteration budget.
    pub stability: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub target_step: f64,
    /// Gradient samples used by the calibration.
    pub calibration_samples: usize,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.1,
            stability: None,
            alpha: 0.602,
            gamma: 0.101,
            target_step: 0.2,
            calibration_samples: 5,
        }
    }
}

impl SpsaGains {
    pub fn new(a: Option<f64>, c: f64, stability: Option<f64>) -> Result<Self> {
        let g = Self {
            a,
            c,
            stability,
            ..Self::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SPSA perturbation c = {} must be > 0",
                self.c
            )));
        }
        if let Some(a) = self.a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("SPSA gain a = {a} must be > 0")));
            }
        }
        if self.stability.is_some_and(|s| !(s >= 0.0)) {
            return Err(Error::InvalidArgument("SPSA stability constant must be >= 0".into()));
        }
        Ok(())
    }
}

/// SPSA with default gains.
pub fn spsa(obj: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: &Budget, seed: u64) -> OptResult {
    spsa_with(obj, x0, budget, seed, &SpsaGains::default()).expect("default gains are valid")
}

/// Simultaneous-perturbation stochastic approximation with Rademacher
/// perturbations drawn from a `ChaCha8Rng` seeded with `seed`; two
/// evaluations per iteration.
pub fn spsa_with(
    obj: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    budget: &Budget,
    seed: u64,
    gains: &SpsaGains,
) -> Result<OptResult> {
    gains.validate()?;
    let mut ev = Evaluator::new(obj, x0, budget);
    let mut x = x0.to_vec();
    let outcome = run(&mut ev, &mut x, budget, seed, gains);
    Ok(ev.finish(outcome, x))
}

fn gradient(
    ev: &mut Evaluator,
    x: &[f64],
    ck: f64,
    rng: &mut ChaCha8Rng,
) -> Step<Vec<f64>> {
    let delta: Vec<f64> = (0..x.len())
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + ck * d).collect();
    let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - ck * d).collect();
    let fp = ev.eval(&plus)?;
    let fm = ev.eval(&minus)?;
    Ok(delta.iter().map(|d| (fp - fm) / (2.0 * ck * d)).collect())
}

fn run(
    ev: &mut Evaluator,
    x: &mut [f64],
    budget: &Budget,
    seed: u64,
    gains: &SpsaGains,
) -> Step<Termination> {
    let n = x.len();
    if n == 0 {
        ev.eval(x)?;
        return Ok(Termination::Converged);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iterations = budget.max_evals / 2;
    let big_a = gains.stability.unwrap_or(0.1 * iterations as f64);
    let a = match gains.a {
        Some(a) => a,
        None => {
            let mut mean = 0.0;
            for _ in 0..gains.calibration_samples {
                let g = gradient(ev, x, gains.c, &mut rng)?;
                mean += g.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            }
            mean /= gains.calibration_samples.max(1) as f64;
            if mean > 0.0 && mean.is_finite() {
                gains.target_step * (1.0 + big_a).powf(gains.alpha) / mean
            } else {
                gains.target_step
            }
        }
    };
    let mut stall = StallCounter::new(budget.max_stall);
    for k in 0.. {
        let ak = a / (k as f64 + 1.0 + big_a).powf(gains.alpha);
        let ck = gains.c / (k as f64 + 1.0).powf(gains.gamma);
        let g = gradient(ev, x, ck, &mut rng)?;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= ak * gi;
        }
        if stall.stalled(ev.best()) {
            return Ok(Termination::Stalled);
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn quadratic_bowl_ten_dims() {
        let x0 = vec![1.0; 10];
        let start = bowl(&x0);
        let mut finals: Vec<f64> = (0..10)
            .map(|seed| {
                let mut f = bowl;
                spsa(&mut f, &x0, &Budget::evals(2000), seed).cost
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        let median = 0.5 * (finals[4] + finals[5]);
        assert!(median < 0.01 * start, "median {median}");
    }

    #[test]
    fn deterministic_and_budgeted() {
        let mut f = bowl;
        let a = spsa(&mut f, &[0.3, -0.2], &Budget { record_time: false, ..Budget::evals(101) }, 4);
        let b = spsa(&mut f, &[0.3, -0.2], &Budget { record_time: false, ..Budget::evals(101) }, 4);
        assert_eq!(a, b);
        assert_eq!(a.evals, 101);
        assert_eq!(a.termination, Termination::Budget);
    }

    #[test]
    fn rejects_nonpositive_c() {
        assert!(SpsaGains::new(None, 0.0, None).is_err());
        assert!(SpsaGains::new(Some(-1.0), 0.1, None).is_err());
    }
}
