use super::{Budget, Evaluator, OptResult, StallCounter, Step, Termination};

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Downhill simplex with reflection 1, expansion 2, contraction 0.5 and
/// shrink 0.5. The initial simplex adds `0.1 * max(1, |x0_i|)` along each axis.
/// Converges when both the cost spread and the simplex diameter drop below
/// `target_tol`.
pub fn nelder_mead(obj: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: &Budget) -> OptResult {
    let mut ev = Evaluator::new(obj, x0, budget);
    let mut last = x0.to_vec();
    let outcome = run(&mut ev, x0, budget, &mut last);
    ev.finish(outcome, last)
}

fn run(ev: &mut Evaluator, x0: &[f64], budget: &Budget, last: &mut Vec<f64>) -> Step<Termination> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = ev.eval(x0)?;
    simplex.push((x0.to_vec(), f0));
    if n == 0 {
        return Ok(Termination::Converged);
    }
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += 0.1 * x0[i].abs().max(1.0);
        let f = ev.eval(&x)?;
        simplex.push((x, f));
    }
    let mut stall = StallCounter::new(budget.max_stall);
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        last.clone_from(&simplex[0].0);
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= budget.target_tol && diameter <= budget.target_tol {
            return Ok(Termination::Converged);
        }
        if stall.stalled(ev.best()) {
            return Ok(Termination::Stalled);
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst = simplex[n].0.clone();
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        let xr = along(ALPHA, &worst);
        let fr = ev.eval(&xr)?;
        if fr < f_best {
            let xe = along(GAMMA, &worst);
            let fe = ev.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(RHO, &worst);
            let fc = ev.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-RHO, &worst);
            let fc = ev.eval(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&entry.0)
                .map(|(b, v)| b + SIGMA * (v - b))
                .collect();
            let f = ev.eval(&x)?;
            *entry = (x, f);
        }
    }
}
