//! Logistic regression via iteratively reweighted least squares, for
//! feature-to-outcome pipelines.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_ITER: usize = 50;
/// L2 penalty keeping the Newton system solvable under separation.
const RIDGE: f64 = 1e-8;
const STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LogisticFit {
    /// Intercept first, then one weight per feature column.
    pub coefficients: Vec<f64>,
    /// Fraction of test items whose linear predictor sign matches the label.
    pub accuracy: f64,
    pub n_iter: usize,
    pub converged: bool,
}

/// Fit on the training rows of a row-major n x k feature matrix and report
/// accuracy on the test rows, thresholding the linear predictor at 0. Runs
/// Newton/IRLS with a small ridge; hitting the iteration cap (typically
/// separation) logs a warning instead of failing.
pub fn fit_logistic(
    n: usize,
    k: usize,
    x: &[f64],
    y: &[f64],
    train: &[usize],
    test: &[usize],
) -> Result<LogisticFit> {
    if x.len() != n * k {
        return Err(Error::DimensionMismatch(format!(
            "{} feature values for {n} rows x {k} columns",
            x.len()
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} rows",
            y.len()
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(
            "training and test index sets must be nonempty".into(),
        ));
    }
    for &i in train.iter().chain(test) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }

    let d = k + 1;
    let mut beta = vec![0.0; d];
    let row = |i: usize| &x[i * k..(i + 1) * k];
    let eta = |beta: &[f64], i: usize| {
        beta[0]
            + row(i)
                .iter()
                .zip(&beta[1..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
    };

    let mut n_iter = 0;
    let mut converged = false;
    while n_iter < MAX_ITER {
        n_iter += 1;
        let mut h = DMatrix::<f64>::zeros(d, d);
        let mut g = DVector::<f64>::zeros(d);
        for &i in train {
            let e = eta(&beta, i);
            let p = 1.0 / (1.0 + (-e).exp());
            let w = p * (1.0 - p);
            let r = y[i] - p;
            // augmented row (1, x_i)
            let xi = row(i);
            g[0] += r;
            h[(0, 0)] += w;
            for a in 0..k {
                g[a + 1] += r * xi[a];
                h[(0, a + 1)] += w * xi[a];
                h[(a + 1, 0)] += w * xi[a];
                for b in 0..k {
                    h[(a + 1, b + 1)] += w * xi[a] * xi[b];
                }
            }
        }
        for j in 0..d {
            h[(j, j)] += RIDGE;
        }
        let chol = Cholesky::new(h)
            .ok_or_else(|| Error::NonFinite("singular Newton system".into()))?;
        let delta = chol.solve(&g);
        for (b, dl) in beta.iter_mut().zip(delta.iter()) {
            *b += dl;
        }
        if delta.iter().all(|v| v.abs() < STEP_TOL) {
            converged = true;
            break;
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic coefficients".into()));
        }
    }
    if !converged {
        log::warn!(
            "logistic fit stopped at the {MAX_ITER}-iteration cap (likely separation); \
             coefficients are ridge-stabilized"
        );
    }

    let hits = test
        .iter()
        .filter(|&&i| (eta(&beta, i) > 0.0) == (y[i] == 1.0))
        .count();
    Ok(LogisticFit {
        coefficients: beta,
        accuracy: hits as f64 / test.len() as f64,
        n_iter,
        converged,
    })
}
