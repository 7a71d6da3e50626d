use super::{Budget, Evaluator, OptResult, StallCounter, Step, Termination};

pub const DEFAULT_FD_STEP: f64 = 1e-4;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

/// Polak-Ribiere conjugate gradients on central finite-difference gradients
/// (`2 * dim` evaluations each).
///
/// Line searches start from a quadratic model through `f(0)`, the directional
/// derivative and one trial point, then backtrack until the Armijo condition
/// holds. When a conjugate direction yields no decrease the step is retried
/// along the steepest-descent direction; if that fails too the run ends as
/// converged. Also converges when the gradient norm drops below `target_tol`.
pub fn cg_fd(
    obj: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    budget: &Budget,
    fd_step: f64,
) -> OptResult {
    let h = if fd_step > 0.0 && fd_step.is_finite() {
        fd_step
    } else {
        DEFAULT_FD_STEP
    };
    let mut ev = Evaluator::new(obj, x0, budget);
    let mut x = x0.to_vec();
    let outcome = run(&mut ev, &mut x, budget, h);
    ev.finish(outcome, x)
}

/// Central-difference gradient.
pub(crate) fn fd_gradient(ev: &mut Evaluator, x: &[f64], h: f64) -> Step<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = ev.eval(&probe)?;
        probe[i] = x[i] - h;
        let fm = ev.eval(&probe)?;
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns the accepted step and cost, or `None` without a sufficient decrease.
fn line_search(
    ev: &mut Evaluator,
    x: &[f64],
    f0: f64,
    d: &[f64],
    slope: f64,
    alpha0: f64,
) -> Step<Option<(f64, f64)>> {
    let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
    let mut alpha = alpha0;
    let f1 = ev.eval(&at(alpha))?;
    let curv = (f1 - f0 - slope * alpha) / (alpha * alpha);
    let mut best = (alpha, f1);
    if curv > 0.0 {
        let a_star = -slope / (2.0 * curv);
        if a_star.is_finite() && a_star > 0.0 {
            let fs = ev.eval(&at(a_star))?;
            if fs < best.1 {
                best = (a_star, fs);
            }
            alpha = a_star;
        }
    }
    for _ in 0..MAX_BACKTRACKS {
        if best.1 <= f0 + ARMIJO * best.0 * slope {
            return Ok(Some(best));
        }
        alpha *= 0.5;
        let f = ev.eval(&at(alpha))?;
        if f < best.1 {
            best = (alpha, f);
        }
    }
    Ok((best.1 < f0).then_some(best))
}

fn run(ev: &mut Evaluator, x: &mut [f64], budget: &Budget, h: f64) -> Step<Termination> {
    let n = x.len();
    let mut f = ev.eval(x)?;
    if n == 0 {
        return Ok(Termination::Converged);
    }
    let mut g = fd_gradient(ev, x, h)?;
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alpha0 = 1.0;
    let mut stall = StallCounter::new(budget.max_stall);
    loop {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= budget.target_tol {
            return Ok(Termination::Converged);
        }
        if stall.stalled(ev.best()) {
            return Ok(Termination::Stalled);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = line_search(ev, x, f, &d, slope, alpha0)?;
        if step.is_none() {
            // Fall back to steepest descent.
            d = g.iter().map(|v| -v).collect();
            let sd_slope = -gnorm * gnorm;
            step = line_search(ev, x, f, &d, sd_slope, 1.0 / gnorm.max(1.0))?;
        }
        let Some((alpha, f_new)) = step else {
            return Ok(Termination::Converged);
        };
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += alpha * di;
        }
        f = f_new;
        alpha0 = (2.0 * alpha).max(1e-8);
        let g_new = fd_gradient(ev, x, h)?;
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let beta = (dot(&g_new, &y) / dot(&g, &g)).max(0.0);
        for (di, gi) in d.iter_mut().zip(&g_new) {
            *di = -gi + beta * *di;
        }
        g = g_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| (i as f64 + 1.0) * (v - 0.5 * i as f64).powi(2))
            .sum()
    }

    #[test]
    fn convex_quadratic_five_dims() {
        let mut f = quad;
        let r = cg_fd(&mut f, &[1.0, -2.0, 0.0, 3.0, 1.0], &Budget::evals(500), 1e-4);
        let grad: f64 = r
            .x
            .iter()
            .enumerate()
            .map(|(i, v)| (2.0 * (i as f64 + 1.0) * (v - 0.5 * i as f64)).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(grad < 1e-5, "{grad} {r:?}");
        assert!(r.evals <= 500);
    }

    #[test]
    fn fd_gradient_accuracy() {
        let mut f = |x: &[f64]| 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1] * x[1] + x[0].powi(3);
        let x = [0.7, -0.4];
        let budget = Budget::evals(10);
        let mut ev = Evaluator::new(&mut f, &x, &budget);
        let h = 1e-3;
        let g = fd_gradient(&mut ev, &x, h).unwrap();
        let exact = [6.0 * x[0] + x[1] + 3.0 * x[0] * x[0], x[0] - 4.0 * x[1]];
        for (a, b) in g.iter().zip(&exact) {
            // Cubic term contributes h^2 * f''' / 6 = h^2.
            assert!((a - b).abs() <= 1.01 * h * h);
        }
    }
}
