//! Supervised sequence model: embeddings, an RNN over the (optionally
//! time-augmented) sequence, optional covariates, a stack of tanh layers,
//! and a sigmoid (binary) or identity (numeric) head.
//!
//! The embedding table carries one extra reserved row; actions unseen at
//! fit time map to it during prediction.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::ProcessSet;
use crate::nn::dense::{self, DenseSpec};
use crate::nn::{self, CellKind, Model, NetParams, RnnSpec, TrainConfig};
use crate::rng;
use crate::seqae::time_track;

/// Validation fraction when the caller supplies no explicit split.
const VALID_FRAC: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseType {
    Binary,
    Scale,
}

impl ResponseType {
    pub fn tag(&self) -> &'static str {
        match self {
            ResponseType::Binary => "binary",
            ResponseType::Scale => "scale",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(ResponseType::Binary),
            "scale" => Ok(ResponseType::Scale),
            other => Err(Error::InvalidArgument(format!(
                "unknown response type {other:?} (expected binary or scale)"
            ))),
        }
    }
}

/// Network shape. `k_hidden` lists the widths of the intermediate tanh
/// layers (empty = head applied directly); `max_len` truncates longer
/// sequences, keeping their first events.
#[derive(Debug, Clone)]
pub struct SeqmArchitecture {
    pub response_type: ResponseType,
    pub k_emb: usize,
    pub k_rnn: usize,
    pub rnn_type: CellKind,
    pub include_time: bool,
    /// Track uses inter-arrival gaps instead of raw timestamps.
    pub time_interval: bool,
    pub log_time: bool,
    pub k_hidden: Vec<usize>,
    pub n_covariates: usize,
    pub max_len: usize,
}

impl SeqmArchitecture {
    pub fn new(response_type: ResponseType, k_emb: usize, k_rnn: usize, rnn_type: CellKind) -> Self {
        SeqmArchitecture {
            response_type,
            k_emb,
            k_rnn,
            rnn_type,
            include_time: false,
            time_interval: true,
            log_time: true,
            k_hidden: Vec::new(),
            n_covariates: 0,
            max_len: usize::MAX,
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.k_hidden.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_emb == 0 || self.k_rnn == 0 {
            return Err(Error::InvalidArgument(
                "embedding and recurrent dimensions must be at least 1".into(),
            ));
        }
        if self.k_hidden.iter().any(|&k| k == 0) {
            return Err(Error::InvalidArgument(
                "hidden layer dimensions must be at least 1".into(),
            ));
        }
        if self.max_len == 0 {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        Ok(())
    }

    fn input_dim(&self) -> usize {
        self.k_emb + usize::from(self.include_time)
    }

    fn rnn(&self) -> RnnSpec {
        RnnSpec::new(self.rnn_type, self.input_dim(), self.k_rnn, "rnn")
    }

    /// Dense stack dimensions: RNN output plus covariates, the hidden
    /// layers, then a scalar head.
    fn dense_stack(&self) -> Vec<DenseSpec> {
        let mut dims = vec![self.k_rnn + self.n_covariates];
        dims.extend_from_slice(&self.k_hidden);
        let mut stack: Vec<DenseSpec> = dims
            .windows(2)
            .enumerate()
            .map(|(j, w)| DenseSpec::new(w[0], w[1], &format!("fc{j}")))
            .collect();
        stack.push(DenseSpec::new(*dims.last().unwrap(), 1, "out"));
        stack
    }

    /// One-line human-readable description.
    pub fn structure(&self) -> String {
        let time = if self.include_time {
            let base = if self.time_interval { "gaps" } else { "timestamps" };
            if self.log_time {
                format!("+log {base}")
            } else {
                format!("+{base}")
            }
        } else {
            String::new()
        };
        let hidden = if self.k_hidden.is_empty() {
            String::new()
        } else {
            format!(
                " -> tanh {}",
                self.k_hidden
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        };
        let cov = if self.n_covariates > 0 {
            format!(" +{} covariates", self.n_covariates)
        } else {
            String::new()
        };
        let head = match self.response_type {
            ResponseType::Binary => "sigmoid",
            ResponseType::Scale => "identity",
        };
        format!(
            "embed {}{} -> {} {}{}{} -> {}",
            self.k_emb,
            time,
            self.rnn_type.tag(),
            self.k_rnn,
            cov,
            hidden,
            head
        )
    }
}

/// Fresh parameters: embedding over `n_actions` + 1 reserved row, the RNN,
/// and the dense stack.
pub fn init_seqm_params(
    arch: &SeqmArchitecture,
    n_actions: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> NetParams {
    let mut params = NetParams::new();
    params.insert("embed", nn::init::embedding(n_actions + 1, arch.k_emb, rng));
    arch.rnn().init_params(&mut params, rng);
    for spec in arch.dense_stack() {
        spec.init_params(&mut params, rng);
    }
    params
}

/// One prepared sequence: vocabulary-mapped actions (possibly truncated),
/// the aligned time track, and the covariate row.
#[derive(Debug, Clone)]
struct Instance {
    acts: Vec<u32>,
    track: Option<Vec<f64>>,
    cov: Vec<f64>,
}

/// Map a process set onto a fixed vocabulary; index `vocab.len()` is the
/// reserved row for unseen actions. Returns instances plus the counts of
/// truncated sequences and unseen events.
fn prepare(
    p: &ProcessSet,
    arch: &SeqmArchitecture,
    vocab: &[String],
    covariates: Option<&[f64]>,
) -> Result<(Vec<Instance>, usize, usize)> {
    let n = p.n();
    if let Some(cov) = covariates {
        if arch.n_covariates == 0 || cov.len() != n * arch.n_covariates {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate values for {} processes x {} columns",
                cov.len(),
                n,
                arch.n_covariates
            )));
        }
    } else if arch.n_covariates > 0 {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} covariates, none given",
            arch.n_covariates
        )));
    }
    if arch.include_time && !p.has_times() {
        return Err(Error::TimesAbsent);
    }
    let index: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i as u32))
        .collect();
    let unk = vocab.len() as u32;
    let mut n_truncated = 0usize;
    let mut n_unseen = 0usize;
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let labels = p.labels_of(i);
        let keep = labels.len().min(arch.max_len);
        if keep < labels.len() {
            n_truncated += 1;
        }
        let acts: Vec<u32> = labels[..keep]
            .iter()
            .map(|&l| {
                index.get(l).copied().unwrap_or_else(|| {
                    n_unseen += 1;
                    unk
                })
            })
            .collect();
        let track = if arch.include_time {
            let t = p.times(i).unwrap();
            Some(time_track(&t[..keep], !arch.time_interval, arch.log_time))
        } else {
            None
        };
        let cov = covariates
            .map(|c| c[i * arch.n_covariates..(i + 1) * arch.n_covariates].to_vec())
            .unwrap_or_default();
        items.push(Instance { acts, track, cov });
    }
    Ok((items, n_truncated, n_unseen))
}

/// Training/prediction task over prepared instances.
pub struct SeqmTask {
    arch: SeqmArchitecture,
    items: Vec<Instance>,
    /// Empty for prediction-only tasks.
    responses: Vec<f64>,
}

impl SeqmTask {
    /// Raw head output z for one instance; caches intermediate activations
    /// for the backward pass when requested.
    fn forward(
        &self,
        params: &NetParams,
        item: &Instance,
        caches: Option<&mut ForwardCache>,
    ) -> f64 {
        let arch = &self.arch;
        let len = item.acts.len();
        let mut xs = Vec::with_capacity(len);
        for l in 0..len {
            let mut x = dense::embed_forward(params.get("embed"), item.acts[l] as usize);
            if let Some(track) = &item.track {
                x.push(track[l]);
            }
            xs.push(x);
        }
        let rnn = arch.rnn();
        let cache = rnn.forward(params, &xs);
        let mut v: Vec<f64> = cache.hs.last().unwrap().clone();
        v.extend_from_slice(&item.cov);
        let stack = arch.dense_stack();
        let mut layer_inputs = vec![v];
        for (j, spec) in stack.iter().enumerate() {
            let raw = spec.forward(params, layer_inputs.last().unwrap());
            let next = if j + 1 < stack.len() {
                dense::tanh_vec(&raw)
            } else {
                raw
            };
            layer_inputs.push(next);
        }
        let z = layer_inputs.last().unwrap()[0];
        if let Some(c) = caches {
            c.xs = xs;
            c.rnn = cache;
            c.layer_inputs = layer_inputs;
        }
        z
    }

    fn backward(
        &self,
        params: &NetParams,
        item: &Instance,
        cache: ForwardCache,
        dz: f64,
        grads: &mut NetParams,
    ) {
        let arch = &self.arch;
        let stack = arch.dense_stack();
        let mut d_v = vec![dz];
        for (j, spec) in stack.iter().enumerate().rev() {
            // layer_inputs[j] feeds layer j; outputs above the head were
            // tanh-activated
            if j + 1 < stack.len() {
                d_v = dense::tanh_backward_from_output(&cache.layer_inputs[j + 1], &d_v);
            }
            d_v = spec.backward(params, &cache.layer_inputs[j], &d_v, grads);
        }
        let mut d_hs = vec![vec![0.0; arch.k_rnn]; item.acts.len()];
        d_hs.last_mut().unwrap().copy_from_slice(&d_v[..arch.k_rnn]);
        let d_xs = arch
            .rnn()
            .backward(params, &cache.xs, &cache.rnn, &d_hs, grads);
        let gtable = grads.get_mut("embed");
        for (l, dx) in d_xs.iter().enumerate() {
            dense::embed_backward(gtable, item.acts[l] as usize, &dx[..arch.k_emb]);
        }
    }
}

#[derive(Default)]
struct ForwardCache {
    xs: Vec<Vec<f64>>,
    rnn: nn::RnnCache,
    layer_inputs: Vec<Vec<f64>>,
}

/// Numerically stable binary cross entropy from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Model for SeqmTask {
    fn n_items(&self) -> usize {
        self.items.len()
    }

    fn batch_loss_grad(
        &self,
        params: &NetParams,
        batch: &[usize],
        mut grads: Option<&mut NetParams>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for &b in batch {
            let item = &self.items[b];
            let y = self.responses[b];
            let mut cache = ForwardCache::default();
            let z = self.forward(params, item, Some(&mut cache));
            let (loss, dz) = match self.arch.response_type {
                ResponseType::Binary => (bce_from_logit(z, y), dense::sigmoid(z) - y),
                ResponseType::Scale => ((z - y) * (z - y), 2.0 * (z - y)),
            };
            total += loss;
            if let Some(g) = grads.as_deref_mut() {
                self.backward(params, item, cache, dz, g);
            }
        }
        Ok(total)
    }
}

/// Build a training task directly (vocabulary = the set's own). Exposed for
/// gradient verification.
pub fn seqm_task(
    p: &ProcessSet,
    response: &[f64],
    covariates: Option<&[f64]>,
    arch: &SeqmArchitecture,
) -> Result<SeqmTask> {
    arch.validate()?;
    if p.is_empty() {
        return Err(Error::EmptySet);
    }
    if response.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} processes",
            response.len(),
            p.n()
        )));
    }
    if matches!(arch.response_type, ResponseType::Binary)
        && response.iter().any(|&y| y != 0.0 && y != 1.0)
    {
        return Err(Error::InvalidArgument(
            "binary responses must be 0 or 1".into(),
        ));
    }
    if response.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("response vector".into()));
    }
    let (items, n_truncated, _) = prepare(p, arch, p.vocab(), covariates)?;
    if n_truncated > 0 {
        log::warn!(
            "{n_truncated} sequences longer than max_len {} truncated to their first events",
            arch.max_len
        );
    }
    Ok(SeqmTask {
        arch: arch.clone(),
        items,
        responses: response.to_vec(),
    })
}

/// Fitted sequence model.
#[derive(Debug, Clone)]
pub struct SeqmModel {
    pub arch: SeqmArchitecture,
    /// Fit-time vocabulary; the embedding's extra row serves anything else.
    pub vocab: Vec<String>,
    pub structure: String,
    pub coefficients: NetParams,
    /// Per-epoch (train, validation) mean loss.
    pub history: Vec<[f64; 2]>,
    pub best_epoch: usize,
    pub diverged_at: Option<usize>,
}

/// Fit on `p` with responses and optional covariates (row-major n x C).
/// Without an explicit split in `cfg`, a seeded 10% validation split is
/// drawn.
pub fn seqm_fit(
    p: &ProcessSet,
    response: &[f64],
    covariates: Option<&[f64]>,
    arch: &SeqmArchitecture,
    cfg: &TrainConfig,
) -> Result<SeqmModel> {
    let task = seqm_task(p, response, covariates, arch)?;
    let mut cfg = cfg.clone();
    cfg.set_default_split(p.n(), VALID_FRAC);
    let params0 = init_seqm_params(arch, p.n_actions(), &mut rng::stream(cfg.seed, 0));
    let out = nn::train(&task, params0, &cfg)?;
    Ok(SeqmModel {
        arch: arch.clone(),
        vocab: p.vocab().to_vec(),
        structure: arch.structure(),
        coefficients: out.params,
        history: out.history,
        best_epoch: out.best_epoch,
        diverged_at: out.diverged_at,
    })
}

/// Predicted response for each process: P(y = 1) for binary models, the
/// expected value for numeric ones. Unseen actions use the reserved
/// embedding row; over-length sequences keep their first `max_len` events.
pub fn seqm_predict(
    model: &SeqmModel,
    p: &ProcessSet,
    covariates: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::EmptySet);
    }
    let (items, n_truncated, n_unseen) = prepare(p, &model.arch, &model.vocab, covariates)?;
    if n_truncated > 0 {
        log::warn!(
            "{n_truncated} sequences longer than max_len {} truncated to their first events",
            model.arch.max_len
        );
    }
    if n_unseen > 0 {
        log::warn!("{n_unseen} events with actions unseen at fit time mapped to the reserved row");
    }
    let task = SeqmTask {
        arch: model.arch.clone(),
        items,
        responses: Vec::new(),
    };
    Ok(task
        .items
        .iter()
        .map(|item| {
            let z = task.forward(&model.coefficients, item, None);
            match model.arch.response_type {
                ResponseType::Binary => dense::sigmoid(z),
                ResponseType::Scale => z,
            }
        })
        .collect())
}
