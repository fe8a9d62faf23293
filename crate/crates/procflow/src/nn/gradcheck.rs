//! Central finite-difference verification of analytic gradients.

use crate::error::Result;
use crate::nn::params::NetParams;
use crate::nn::train::Model;

/// Largest robust relative error between analytic and central
/// finite-difference gradients over every parameter entry, on the batch
/// loss at `params`. The ratio uses an additive floor so entries whose true
/// gradient is zero tolerate finite-difference noise up to the floor times
/// the threshold.
pub fn max_relative_grad_error(
    model: &impl Model,
    params: &NetParams,
    batch: &[usize],
    h: f64,
) -> Result<f64> {
    let mut analytic = params.zeros_like();
    model.batch_loss_grad(params, batch, Some(&mut analytic))?;
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let mut worst = 0.0f64;
    let mut work = params.clone();
    for name in &names {
        let (rows, cols) = params.get(name).shape();
        for r in 0..rows {
            for c in 0..cols {
                let orig = params.get(name).get(r, c);
                work.get_mut(name).set(r, c, orig + h);
                let f_plus = model.batch_loss_grad(&work, batch, None)?;
                work.get_mut(name).set(r, c, orig - h);
                let f_minus = model.batch_loss_grad(&work, batch, None)?;
                work.get_mut(name).set(r, c, orig);
                let fd = (f_plus - f_minus) / (2.0 * h);
                let a = analytic.get(name).get(r, c);
                let rel = (a - fd).abs() / (a.abs() + fd.abs() + 1e-3);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}
