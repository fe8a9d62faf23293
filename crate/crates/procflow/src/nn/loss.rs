//! Reconstruction and prediction losses.

use crate::error::{Error, Result};

/// Which discrepancy a model trains against; `Both` mixes the action and
/// time discrepancies with nonnegative weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    Action,
    Time,
    Both { w_a: f64, w_t: f64 },
    BinaryCe,
    Squared,
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Both { w_a, w_t } = *self {
            if w_a < 0.0 || w_t < 0.0 || w_a + w_t <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "loss weights ({w_a}, {w_t}) must be nonnegative with a positive sum"
                )));
            }
        }
        Ok(())
    }
}

/// Floor for log arguments, so perfect predictions don't produce -inf.
pub const LOG_FLOOR: f64 = 1e-12;

/// Mean negative log-likelihood of the true actions under per-step
/// distributions: -(1/L) sum_l log p_l[s_l]. Each distribution must sum to
/// 1 within 1e-6.
pub fn loss_action(actions: &[u32], probs: &[Vec<f64>]) -> Result<f64> {
    if actions.len() != probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} actions vs {} predicted steps",
            actions.len(),
            probs.len()
        )));
    }
    if actions.is_empty() {
        return Err(Error::InvalidArgument("empty sequence in action loss".into()));
    }
    let mut total = 0.0;
    for (l, (a, p)) in actions.iter().zip(probs).enumerate() {
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || p.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step {l} prediction is not a probability distribution (sum {sum})"
            )));
        }
        let q = p.get(*a as usize).copied().ok_or_else(|| {
            Error::DimensionMismatch(format!("action {} outside distribution of {}", a, p.len()))
        })?;
        total -= q.max(LOG_FLOOR).ln();
    }
    Ok(total / actions.len() as f64)
}

/// Unnormalized sum of squared timestamp errors: sum_l (t_l - that_l)^2.
/// Deliberately not divided by L, unlike the action loss.
pub fn loss_time(t: &[f64], that: &[f64]) -> Result<f64> {
    if t.len() != that.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} times vs {} predictions",
            t.len(),
            that.len()
        )));
    }
    Ok(t.iter().zip(that).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_way_guess_costs_log_two() {
        let loss = loss_action(&[0], &[vec![0.5, 0.5]]).unwrap();
        assert!((loss - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn perfect_one_hot_costs_nothing() {
        let loss = loss_action(&[1, 0], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn zero_probability_is_floored_not_infinite() {
        let loss = loss_action(&[0], &[vec![0.0, 1.0]]).unwrap();
        assert!((loss + LOG_FLOOR.ln()).abs() < 1e-9);
        assert!(loss.is_finite());
    }

    #[test]
    fn action_loss_matches_direct_sum() {
        let probs = vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]];
        let want = -(0.3f64.ln() + 0.6f64.ln()) / 2.0;
        let got = loss_action(&[1, 0], &probs).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn action_loss_rejects_non_distributions() {
        assert!(loss_action(&[0], &[vec![0.9, 0.3]]).is_err());
        assert!(loss_action(&[0], &[vec![1.2, -0.2]]).is_err());
        assert!(loss_action(&[0, 1], &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn time_loss_is_plain_sum_of_squares() {
        assert_eq!(loss_time(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_time(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
        // no 1/L normalization: doubling the sequence doubles the loss
        let single = loss_time(&[2.0], &[0.0]).unwrap();
        let double = loss_time(&[2.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(double, 2.0 * single);
        assert!(loss_time(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn both_weights_validated() {
        assert!(LossSpec::Both { w_a: 1.0, w_t: 0.0 }.validate().is_ok());
        assert!(LossSpec::Both { w_a: 0.0, w_t: 0.0 }.validate().is_err());
        assert!(LossSpec::Both { w_a: -1.0, w_t: 2.0 }.validate().is_err());
    }
}
