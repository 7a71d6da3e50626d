use super::{Budget, Evaluator, OptResult, StallCounter, Step, Termination};

const GOLD: f64 = 1.618_034;
const GLIMIT: f64 = 100.0;
const TINY: f64 = 1e-20;
const CGOLD: f64 = 0.381_966_0;
const ZEPS: f64 = 1e-12;
/// Relative abscissa tolerance of the Brent line searches.
const LINE_TOL: f64 = 1e-6;
const BRENT_ITERS: usize = 100;
const BRACKET_ITERS: usize = 60;

/// Powell's conjugate-direction method.
///
/// Starts from the coordinate axes; each cycle minimizes along every direction
/// with a Brent line search, then replaces the direction of largest decrease by
/// the cycle's net displacement when the classic test allows it. Converges when
/// a cycle lowers the cost by less than `target_tol` relative to its size.
pub fn powell(obj: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: &Budget) -> OptResult {
    let mut ev = Evaluator::new(obj, x0, budget);
    let mut p = x0.to_vec();
    let outcome = run(&mut ev, &mut p, budget);
    ev.finish(outcome, p)
}

fn run(ev: &mut Evaluator, p: &mut [f64], budget: &Budget) -> Step<Termination> {
    let n = p.len();
    let mut fret = ev.eval(p)?;
    if n == 0 {
        return Ok(Termination::Converged);
    }
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut pt = p.to_vec();
    let mut stall = StallCounter::new(budget.max_stall);
    loop {
        let fp = fret;
        let mut ibig = 0;
        let mut del = 0.0;
        for (i, d) in dirs.iter_mut().enumerate() {
            let fptt = fret;
            fret = line_min(ev, p, d, fret)?;
            if fptt - fret > del {
                del = fptt - fret;
                ibig = i;
            }
        }
        if 2.0 * (fp - fret) <= budget.target_tol * (fp.abs() + fret.abs()) + 1e-25 {
            return Ok(Termination::Converged);
        }
        if stall.stalled(ev.best()) {
            return Ok(Termination::Stalled);
        }
        let ptt: Vec<f64> = p.iter().zip(&pt).map(|(a, b)| 2.0 * a - b).collect();
        let mut xit: Vec<f64> = p.iter().zip(&pt).map(|(a, b)| a - b).collect();
        pt.copy_from_slice(p);
        let fptt = ev.eval(&ptt)?;
        if fptt < fp {
            let t = 2.0 * (fp - 2.0 * fret + fptt) * (fp - fret - del).powi(2)
                - del * (fp - fptt).powi(2);
            if t < 0.0 {
                fret = line_min(ev, p, &mut xit, fret)?;
                dirs[ibig] = dirs[n - 1].clone();
                dirs[n - 1] = xit;
            }
        }
    }
}

/// Minimizes along `d` from `p` (where the cost is `fp`), moves `p` to the
/// minimizer and rescales `d` to the step taken. Returns the new cost.
fn line_min(ev: &mut Evaluator, p: &mut [f64], d: &mut [f64], fp: f64) -> Step<f64> {
    if d.iter().all(|&v| v == 0.0) {
        return Ok(fp);
    }
    let base = p.to_vec();
    let mut g = |ev: &mut Evaluator, t: f64| -> Step<f64> {
        let x: Vec<f64> = base.iter().zip(d.iter()).map(|(b, v)| b + t * v).collect();
        ev.eval(&x)
    };
    let (ax, bx, cx, fb) = bracket(ev, &mut g, fp)?;
    let (xmin, fmin) = brent(ev, &mut g, ax, bx, cx, fb)?;
    let (xmin, fmin) = if fmin <= fp { (xmin, fmin) } else { (0.0, fp) };
    for (pi, di) in p.iter_mut().zip(d.iter_mut()) {
        *di *= xmin;
        *pi += *di;
    }
    Ok(fmin)
}

type LineFn<'a> = dyn FnMut(&mut Evaluator, f64) -> Step<f64> + 'a;

/// Downhill bracketing from `0` and `1`; returns `(a, b, c, f(b))` with `f(b)` below both ends.
fn bracket(ev: &mut Evaluator, g: &mut LineFn, fa0: f64) -> Step<(f64, f64, f64, f64)> {
    let (mut ax, mut bx) = (0.0, 1.0);
    let (mut fa, mut fb) = (fa0, g(ev, bx)?);
    if fb > fa {
        std::mem::swap(&mut ax, &mut bx);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut cx = bx + GOLD * (bx - ax);
    let mut fc = g(ev, cx)?;
    let mut iters = 0;
    while fb > fc && iters < BRACKET_ITERS {
        iters += 1;
        let r = (bx - ax) * (fb - fc);
        let q = (bx - cx) * (fb - fa);
        let denom = 2.0 * (q - r).abs().max(TINY).copysign(q - r);
        let mut u = bx - ((bx - cx) * q - (bx - ax) * r) / denom;
        let ulim = bx + GLIMIT * (cx - bx);
        let mut fu;
        if (bx - u) * (u - cx) > 0.0 {
            fu = g(ev, u)?;
            if fu < fc {
                return Ok((bx, u, cx, fu));
            } else if fu > fb {
                return Ok((ax, bx, u, fb));
            }
            u = cx + GOLD * (cx - bx);
            fu = g(ev, u)?;
        } else if (cx - u) * (u - ulim) > 0.0 {
            fu = g(ev, u)?;
            if fu < fc {
                bx = cx;
                cx = u;
                u = cx + GOLD * (cx - bx);
                fb = fc;
                fc = fu;
                fu = g(ev, u)?;
            }
        } else if (u - ulim) * (ulim - cx) >= 0.0 {
            u = ulim;
            fu = g(ev, u)?;
        } else {
            u = cx + GOLD * (cx - bx);
            fu = g(ev, u)?;
        }
        ax = bx;
        bx = cx;
        cx = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }
    Ok((ax, bx, cx, fb))
}

fn brent(
    ev: &mut Evaluator,
    g: &mut LineFn,
    ax: f64,
    bx: f64,
    cx: f64,
    fbx: f64,
) -> Step<(f64, f64)> {
    let (mut a, mut b) = (ax.min(cx), ax.max(cx));
    let (mut x, mut w, mut v) = (bx, bx, bx);
    let (mut fx, mut fw, mut fv) = (fbx, fbx, fbx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..BRENT_ITERS {
        let xm = 0.5 * (a + b);
        let tol1 = LINE_TOL * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x) {
                e = if x >= xm { a - x } else { b - x };
                d = CGOLD * e;
            } else {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
            }
        } else {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = g(ev, u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_one_cycle() {
        let mut f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum();
        // Enough budget for a single sweep of three line searches plus the extrapolation probe.
        let r = powell(&mut f, &[5.0, -3.0, 0.5], &Budget::evals(200));
        for (i, v) in r.x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = powell(&mut f, &[-1.2, 1.0], &Budget::evals(3000));
        assert!(r.cost < 1e-6, "{} after {} evals", r.cost, r.evals);
        let best = r.best_so_far();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
    }
}
