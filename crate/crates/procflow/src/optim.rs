//! Unconstrained smooth minimization by the BFGS quasi-Newton method with
//! Armijo backtracking, used for out-of-subset point placement in `mds`.

/// Stopping and line-search parameters.
#[derive(Debug, Clone)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Euclidean gradient norm below which iteration stops.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Step shrink factor per backtracking round.
    pub shrink: f64,
    /// Give up on a line search once the step falls below this.
    pub min_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 200,
            grad_tol: 1e-8,
            c1: 1e-4,
            shrink: 0.5,
            min_step: 1e-20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub n_iter: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `fg`, which evaluates the objective at `x` and writes its
/// gradient into the provided slice. Returns the best point found; `converged`
/// reports whether the gradient tolerance was met.
///
/// The inverse Hessian approximation starts at the identity, is rescaled by
/// the standard s'y / y'y factor before the first update, and skips updates
/// whose curvature s'y is not safely positive. A failed line search along a
/// quasi-Newton direction falls back to steepest descent once before giving
/// up, so a stale approximation cannot stall the iteration.
pub fn minimize<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut fx = fg(&x, &mut g);
    if !fx.is_finite() {
        return BfgsOutcome {
            x,
            value: fx,
            grad_norm: f64::NAN,
            n_iter: 0,
            converged: false,
        };
    }

    // Row-major d x d inverse Hessian approximation.
    let mut h: Vec<f64> = (0..d * d)
        .map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 })
        .collect();
    let mut first_update = true;

    let mut p = vec![0.0; d];
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut n_iter = 0;

    while n_iter < opts.max_iter {
        let gnorm = norm(&g);
        if gnorm < opts.grad_tol {
            return BfgsOutcome {
                x,
                value: fx,
                grad_norm: gnorm,
                n_iter,
                converged: true,
            };
        }
        n_iter += 1;

        // p = -H g
        for i in 0..d {
            p[i] = -dot(&h[i * d..(i + 1) * d], &g);
        }
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            // Not a descent direction; restart from steepest descent.
            for i in 0..d * d {
                h[i] = if i % (d + 1) == 0 { 1.0 } else { 0.0 };
            }
            first_update = true;
            for i in 0..d {
                p[i] = -g[i];
            }
            slope = -gnorm * gnorm;
        }

        let mut alpha = 1.0;
        let mut tried_steepest = false;
        let (fx_next, accepted) = loop {
            for i in 0..d {
                x_new[i] = x[i] + alpha * p[i];
            }
            let f_try = fg(&x_new, &mut g_new);
            if f_try.is_finite() && f_try <= fx + opts.c1 * alpha * slope {
                break (f_try, true);
            }
            alpha *= opts.shrink;
            if alpha < opts.min_step {
                if tried_steepest || slope == -gnorm * gnorm {
                    break (fx, false);
                }
                // Retry the whole search along -g with a fresh H.
                tried_steepest = true;
                for i in 0..d * d {
                    h[i] = if i % (d + 1) == 0 { 1.0 } else { 0.0 };
                }
                first_update = true;
                for i in 0..d {
                    p[i] = -g[i];
                }
                slope = -gnorm * gnorm;
                alpha = 1.0;
            }
        };
        if !accepted {
            return BfgsOutcome {
                x,
                value: fx,
                grad_norm: gnorm,
                n_iter,
                converged: false,
            };
        }

        // s = x_new - x, y = g_new - g
        let s: Vec<f64> = (0..d).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..d).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if first_update {
                let yy = dot(&y, &y);
                if yy > 0.0 {
                    let scale = sy / yy;
                    for (i, v) in h.iter_mut().enumerate() {
                        *v = if i % (d + 1) == 0 { scale } else { 0.0 };
                    }
                }
                first_update = false;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; d];
            for i in 0..d {
                hy[i] = dot(&h[i * d..(i + 1) * d], &y);
            }
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = fx_next;
    }

    let gnorm = norm(&g);
    BfgsOutcome {
        x,
        value: fx,
        grad_norm: gnorm,
        n_iter,
        converged: gnorm < opts.grad_tol,
    }
}
