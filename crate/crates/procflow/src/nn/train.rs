//! Minibatch training loop with per-epoch evaluation and best-validation
//! parameter selection.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::optimizer::{Optimizer, OptimizerKind};
use crate::nn::params::NetParams;
use crate::rng;

/// A differentiable objective over an indexed data set. `batch_loss_grad`
/// returns the SUM of per-item losses over `batch`; when `grads` is given it
/// must accumulate the exact gradients of that sum.
pub trait Model {
    fn n_items(&self) -> usize;
    fn batch_loss_grad(
        &self,
        params: &NetParams,
        batch: &[usize],
        grads: Option<&mut NetParams>,
    ) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub step_size: f64,
    pub n_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub train_idx: Vec<usize>,
    pub valid_idx: Vec<usize>,
}

impl TrainConfig {
    pub fn new(optimizer: OptimizerKind, n_epoch: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer,
            step_size: optimizer.default_step_size(),
            n_epoch,
            batch_size: 16,
            seed,
            train_idx: Vec::new(),
            valid_idx: Vec::new(),
        }
    }

    /// Fill empty index sets with a seeded split: `valid_frac` of all items
    /// (at least 1) drawn for validation, the rest for training.
    pub fn set_default_split(&mut self, n: usize, valid_frac: f64) {
        if !self.train_idx.is_empty() || !self.valid_idx.is_empty() {
            return;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(self.seed, SPLIT_STREAM));
        let n_valid = ((n as f64 * valid_frac).round() as usize).clamp(1, n.saturating_sub(1));
        self.valid_idx = order[..n_valid].to_vec();
        self.train_idx = order[n_valid..].to_vec();
        self.valid_idx.sort_unstable();
        self.train_idx.sort_unstable();
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.step_size <= 0.0 {
            return Err(Error::InvalidArgument("step size must be positive".into()));
        }
        if self.n_epoch == 0 {
            return Err(Error::InvalidArgument("n_epoch must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.train_idx.is_empty() || self.valid_idx.is_empty() {
            return Err(Error::InvalidArgument(
                "training and validation sets must be nonempty".into(),
            ));
        }
        let mut seen = vec![0u8; n];
        for &i in &self.train_idx {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            seen[i] |= 1;
        }
        for &i in &self.valid_idx {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if seen[i] & 1 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "index {i} appears in both training and validation sets"
                )));
            }
        }
        Ok(())
    }
}

/// RNG stream offsets under the training seed: 0 is left to the caller for
/// parameter initialization, EPOCH_STREAM_BASE + epoch shuffles that epoch,
/// SPLIT_STREAM draws the default validation split.
pub const EPOCH_STREAM_BASE: u64 = 1;
pub const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: NetParams,
    /// Per-epoch (train, validation) mean loss per item.
    pub history: Vec<[f64; 2]>,
    /// 1-based epoch the returned parameters come from.
    pub best_epoch: usize,
    /// Epoch at which a non-finite loss stopped training early, if any.
    pub diverged_at: Option<usize>,
}

/// Mean per-item loss over `idx`.
pub fn evaluate(model: &impl Model, params: &NetParams, idx: &[usize]) -> Result<f64> {
    let total = model.batch_loss_grad(params, idx, None)?;
    Ok(total / idx.len() as f64)
}

/// Run minibatch training: seeded shuffle each epoch, gradient averaged over
/// each batch, one optimizer step per batch, then train/validation
/// evaluation. Returns the parameters of the best validation epoch and the
/// full history. A non-finite loss stops training; if no finite epoch
/// completed, that is a hard error.
pub fn train(model: &impl Model, params0: NetParams, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate(model.n_items())?;
    params0.validate_finite()?;
    let mut params = params0;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.step_size, &params);
    let mut history: Vec<[f64; 2]> = Vec::with_capacity(cfg.n_epoch);
    let mut best_epoch = 0usize;
    let mut best_valid = f64::INFINITY;
    let mut best_params = params.clone();
    let mut order = cfg.train_idx.clone();
    let mut diverged_at = None;

    'epochs: for epoch in 1..=cfg.n_epoch {
        order.shuffle(&mut rng::stream(cfg.seed, EPOCH_STREAM_BASE + epoch as u64));
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = params.zeros_like();
            let loss = model.batch_loss_grad(&params, batch, Some(&mut grads))?;
            if !loss.is_finite() {
                diverged_at = Some(epoch);
                break 'epochs;
            }
            grads.scale(1.0 / batch.len() as f64);
            opt.step(&mut params, &grads);
        }
        let train_loss = evaluate(model, &params, &cfg.train_idx)?;
        let valid_loss = evaluate(model, &params, &cfg.valid_idx)?;
        if !train_loss.is_finite() || !valid_loss.is_finite() {
            diverged_at = Some(epoch);
            break 'epochs;
        }
        history.push([train_loss, valid_loss]);
        if valid_loss < best_valid {
            best_valid = valid_loss;
            best_epoch = epoch;
            best_params = params.clone();
        }
    }

    if let Some(epoch) = diverged_at {
        if history.is_empty() {
            return Err(Error::Diverged { epoch });
        }
        log::warn!("training loss became non-finite at epoch {epoch}; keeping the last finite state");
    }
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch,
        diverged_at,
    })
}
