use std::f64::consts::{FRAC_PI_2, PI};

use super::{Budget, Evaluator, OptResult, StallCounter, Step, Termination};

/// Sequential single-parameter minimization for rotation-parameterized costs.
///
/// For each parameter in turn the cost is sampled at `theta` and `theta +- pi/2`,
/// fitted exactly by `a + b cos(theta - phi)`, and the parameter jumps to the
/// fitted minimum. Costs that are not a single harmonic in a parameter are
/// fitted approximately; this is not detected. Sweeps repeat until the budget
/// or the stall limit is reached; `target_tol` is not used. A parameter whose
/// three evaluations do not all fit in the budget keeps its value.
pub fn nft(obj: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: &Budget) -> OptResult {
    let mut ev = Evaluator::new(obj, x0, budget);
    let mut theta = x0.to_vec();
    let outcome = run(&mut ev, &mut theta, budget);
    ev.finish(outcome, theta)
}

/// New value of one parameter given `f(theta)`, `f(theta + pi/2)` and `f(theta - pi/2)`.
pub fn nft_update(theta: f64, f0: f64, f_plus: f64, f_minus: f64) -> f64 {
    let a = 0.5 * (f_plus + f_minus);
    let u = (0.5 * (f_minus - f_plus)).atan2(f0 - a);
    let mut t = theta + PI - u;
    // Keep the jump within half a period of the old value.
    while t - theta > PI {
        t -= 2.0 * PI;
    }
    while t - theta <= -PI {
        t += 2.0 * PI;
    }
    t
}

fn run(ev: &mut Evaluator, theta: &mut [f64], budget: &Budget) -> Step<Termination> {
    let n = theta.len();
    if n == 0 {
        ev.eval(theta)?;
        return Ok(Termination::Converged);
    }
    let mut stall = StallCounter::new(budget.max_stall);
    let mut probe = theta.to_vec();
    loop {
        for i in 0..n {
            if ev.remaining() < 3 {
                return Err(super::Exhausted);
            }
            probe.copy_from_slice(theta);
            let f0 = ev.eval(&probe)?;
            probe[i] = theta[i] + FRAC_PI_2;
            let fp = ev.eval(&probe)?;
            probe[i] = theta[i] - FRAC_PI_2;
            let fm = ev.eval(&probe)?;
            theta[i] = nft_update(theta[i], f0, fp, fm);
        }
        if stall.stalled(ev.best()) {
            return Ok(Termination::Stalled);
        }
    }
}
