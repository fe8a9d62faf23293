//! Sequence autoencoders for unsupervised feature extraction.
//!
//! An encoder RNN compresses a process into a K-vector (the feature); a
//! decoder RNN rebuilds the process from the feature repeated once per
//! step. Action sequences enter through K-dim embeddings, time sequences
//! through a scalar track appended to the input (action-time) or used alone
//! (time). Reconstruction heads are a softmax over the action vocabulary
//! and a ReLU scalar for the time track.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mds::FeatureMatrix;
use crate::model::ProcessSet;
use crate::nn::dense::{self, DenseSpec};
use crate::nn::loss::{self, LossSpec};
use crate::nn::{self, CellKind, Model, NetParams, RnnSpec, TrainConfig};
use crate::rng;

/// Offset inside the log transform so zero inter-arrival gaps stay finite.
pub const LOG_OFFSET: f64 = 1e-3;

/// Validation fraction split off the training items when the caller gives
/// no explicit split, and off each cross-validation training fold.
const INNER_VALID_FRAC: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeType {
    Action,
    Time,
    Both,
}

impl AeType {
    pub fn tag(&self) -> &'static str {
        match self {
            AeType::Action => "action",
            AeType::Time => "time",
            AeType::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "action" => Ok(AeType::Action),
            "time" => Ok(AeType::Time),
            "both" => Ok(AeType::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown autoencoder type {other:?} (expected action, time, or both)"
            ))),
        }
    }

    pub fn uses_actions(&self) -> bool {
        !matches!(self, AeType::Time)
    }

    pub fn uses_times(&self) -> bool {
        !matches!(self, AeType::Action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMethod {
    Last,
    Avg,
}

impl FeatureMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            FeatureMethod::Last => "last",
            FeatureMethod::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "last" => Ok(FeatureMethod::Last),
            "avg" => Ok(FeatureMethod::Avg),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature method {other:?} (expected last or avg)"
            ))),
        }
    }
}

/// Autoencoder shape: input kind, feature width, cell, feature reduction,
/// the time-track transform, and the action/time loss weights.
#[derive(Debug, Clone)]
pub struct SeqAEArchitecture {
    pub ae_type: AeType,
    pub k: usize,
    pub rnn_type: CellKind,
    pub method: FeatureMethod,
    /// Use raw timestamps for the track; otherwise inter-arrival gaps.
    pub cumulative: bool,
    /// Log-transform the track.
    pub log: bool,
    /// (w_a, w_t); only read for `AeType::Both`.
    pub weights: (f64, f64),
    /// Rotate features to principal components.
    pub pca: bool,
}

impl SeqAEArchitecture {
    pub fn new(ae_type: AeType, k: usize, rnn_type: CellKind) -> Self {
        SeqAEArchitecture {
            ae_type,
            k,
            rnn_type,
            method: FeatureMethod::Last,
            cumulative: false,
            log: true,
            weights: (1.0, 0.5),
            pca: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument(
                "feature dimension must be at least 1".into(),
            ));
        }
        self.loss_spec().validate()
    }

    pub fn loss_spec(&self) -> LossSpec {
        match self.ae_type {
            AeType::Action => LossSpec::Action,
            AeType::Time => LossSpec::Time,
            AeType::Both => LossSpec::Both {
                w_a: self.weights.0,
                w_t: self.weights.1,
            },
        }
    }

    /// Encoder RNN input width: embeddings, a scalar track, or both.
    fn input_dim(&self) -> usize {
        match self.ae_type {
            AeType::Action => self.k,
            AeType::Time => 1,
            AeType::Both => self.k + 1,
        }
    }

    fn encoder(&self) -> RnnSpec {
        RnnSpec::new(self.rnn_type, self.input_dim(), self.k, "enc")
    }

    fn decoder(&self) -> RnnSpec {
        RnnSpec::new(self.rnn_type, self.k, self.k, "dec")
    }

    fn action_head(&self, n_actions: usize) -> DenseSpec {
        DenseSpec::new(self.k, n_actions, "act")
    }

    fn time_head(&self) -> DenseSpec {
        DenseSpec::new(self.k, 1, "time")
    }
}

/// Transform a timestamp sequence into the model's time track: the
/// timestamps themselves when `cumulative`, else first differences with
/// gap_1 = t_1; then ln(x + 1e-3) when `log`.
pub fn time_track(t: &[f64], cumulative: bool, log: bool) -> Vec<f64> {
    let mut track: Vec<f64> = if cumulative {
        t.to_vec()
    } else {
        t.iter()
            .enumerate()
            .map(|(l, &v)| if l == 0 { v } else { v - t[l - 1] })
            .collect()
    };
    if log {
        for v in &mut track {
            *v = (*v + LOG_OFFSET).ln();
        }
    }
    track
}

/// Fresh parameters for an autoencoder over `n_actions` vocabulary entries.
pub fn init_ae_params(
    arch: &SeqAEArchitecture,
    n_actions: usize,
    rng: &mut ChaCha8Rng,
) -> NetParams {
    let mut params = NetParams::new();
    if arch.ae_type.uses_actions() {
        params.insert("embed", nn::init::embedding(n_actions, arch.k, rng));
    }
    arch.encoder().init_params(&mut params, rng);
    arch.decoder().init_params(&mut params, rng);
    if arch.ae_type.uses_actions() {
        arch.action_head(n_actions).init_params(&mut params, rng);
    }
    if arch.ae_type.uses_times() {
        arch.time_head().init_params(&mut params, rng);
    }
    params
}

/// Per-step reconstruction: action distributions and/or nonnegative times.
#[derive(Debug, Clone)]
pub struct DecoderOutput {
    pub probs: Option<Vec<Vec<f64>>>,
    pub times: Option<Vec<f64>>,
}

/// Autoencoder over a subset of a process set; item index b refers to
/// process `items[b]`.
pub struct AeModel<'a> {
    p: &'a ProcessSet,
    arch: &'a SeqAEArchitecture,
    /// Time tracks for every process in `p`, indexed globally.
    tracks: Option<Vec<Vec<f64>>>,
    items: Vec<usize>,
}

impl<'a> AeModel<'a> {
    pub fn new(p: &'a ProcessSet, arch: &'a SeqAEArchitecture, items: Vec<usize>) -> Result<Self> {
        arch.validate()?;
        if p.is_empty() {
            return Err(Error::EmptySet);
        }
        for &i in &items {
            if i >= p.n() {
                return Err(Error::IndexOutOfRange { index: i, n: p.n() });
            }
        }
        let tracks = if arch.ae_type.uses_times() {
            let ts = p.time_seqs().ok_or(Error::TimesAbsent)?;
            Some(
                ts.iter()
                    .map(|t| time_track(t, arch.cumulative, arch.log))
                    .collect(),
            )
        } else {
            None
        };
        Ok(AeModel {
            p,
            arch,
            tracks,
            items,
        })
    }

    pub fn over_all(p: &'a ProcessSet, arch: &'a SeqAEArchitecture) -> Result<Self> {
        AeModel::new(p, arch, (0..p.n()).collect())
    }

    /// Encoder RNN inputs for process `i` (global index).
    fn inputs(&self, params: &NetParams, i: usize) -> Vec<Vec<f64>> {
        let len = self.p.len_of(i);
        let mut xs = Vec::with_capacity(len);
        for l in 0..len {
            let mut x = if self.arch.ae_type.uses_actions() {
                dense::embed_forward(params.get("embed"), self.p.actions(i)[l] as usize)
            } else {
                Vec::with_capacity(1)
            };
            if let Some(tracks) = &self.tracks {
                x.push(tracks[i][l]);
            }
            xs.push(x);
        }
        xs
    }

    fn reduce_feature(&self, hs: &[Vec<f64>]) -> Vec<f64> {
        match self.arch.method {
            FeatureMethod::Last => hs.last().unwrap().clone(),
            FeatureMethod::Avg => {
                let mut f = vec![0.0; self.arch.k];
                for h in hs {
                    for (fk, hk) in f.iter_mut().zip(h) {
                        *fk += hk;
                    }
                }
                let inv = 1.0 / hs.len() as f64;
                for fk in &mut f {
                    *fk *= inv;
                }
                f
            }
        }
    }

    /// Encoder feature of process `i` (global index).
    pub fn feature(&self, params: &NetParams, i: usize) -> Vec<f64> {
        let xs = self.inputs(params, i);
        let cache = self.arch.encoder().forward(params, &xs);
        self.reduce_feature(&cache.hs)
    }

    /// Full encode-decode pass for process `i` (global index).
    pub fn reconstruct(&self, params: &NetParams, i: usize) -> DecoderOutput {
        let len = self.p.len_of(i);
        let feature = self.feature(params, i);
        let dec_xs = vec![feature; len];
        let cache = self.arch.decoder().forward(params, &dec_xs);
        let mut probs = None;
        let mut times = None;
        if self.arch.ae_type.uses_actions() {
            let head = self.arch.action_head(self.p.n_actions());
            probs = Some(
                cache
                    .hs
                    .iter()
                    .map(|h| dense::softmax(&head.forward(params, h)))
                    .collect(),
            );
        }
        if self.arch.ae_type.uses_times() {
            let head = self.arch.time_head();
            times = Some(
                cache
                    .hs
                    .iter()
                    .map(|h| dense::relu(&head.forward(params, h))[0])
                    .collect(),
            );
        }
        DecoderOutput { probs, times }
    }

    /// Loss of one process, with gradients accumulated when requested.
    fn item_loss_grad(
        &self,
        params: &NetParams,
        i: usize,
        mut grads: Option<&mut NetParams>,
    ) -> Result<f64> {
        let arch = self.arch;
        let len = self.p.len_of(i);
        let k = arch.k;
        let (w_a, w_t) = match arch.loss_spec() {
            LossSpec::Action => (1.0, 0.0),
            LossSpec::Time => (0.0, 1.0),
            LossSpec::Both { w_a, w_t } => (w_a, w_t),
            _ => unreachable!(),
        };

        let xs = self.inputs(params, i);
        let enc = arch.encoder();
        let enc_cache = enc.forward(params, &xs);
        let feature = self.reduce_feature(&enc_cache.hs);
        let dec_xs = vec![feature; len];
        let dec = arch.decoder();
        let dec_cache = dec.forward(params, &dec_xs);

        let act_head = arch.action_head(self.p.n_actions());
        let time_head = arch.time_head();
        let mut probs: Vec<Vec<f64>> = Vec::new();
        let mut time_pre: Vec<f64> = Vec::new();
        for h in &dec_cache.hs {
            if arch.ae_type.uses_actions() {
                probs.push(dense::softmax(&act_head.forward(params, h)));
            }
            if arch.ae_type.uses_times() {
                time_pre.push(time_head.forward(params, h)[0]);
            }
        }

        let mut total = 0.0;
        if arch.ae_type.uses_actions() {
            total += w_a * loss::loss_action(self.p.actions(i), &probs)?;
        }
        if arch.ae_type.uses_times() {
            let track = &self.tracks.as_ref().unwrap()[i];
            let that: Vec<f64> = time_pre.iter().map(|&v| v.max(0.0)).collect();
            total += w_t * loss::loss_time(track, &that)?;
        }

        let Some(grads) = grads.as_deref_mut() else {
            return Ok(total);
        };

        let mut d_dec_hs = vec![vec![0.0; k]; len];
        for l in 0..len {
            if arch.ae_type.uses_actions() {
                let target = self.p.actions(i)[l] as usize;
                // Softmax cross entropy fused; the log floor makes the loss
                // locally constant once the target probability falls below
                // it, so the gradient there is zero.
                if probs[l][target] > loss::LOG_FLOOR {
                    let scale = w_a / len as f64;
                    let mut d_logits = probs[l].clone();
                    d_logits[target] -= 1.0;
                    for d in &mut d_logits {
                        *d *= scale;
                    }
                    let dx = act_head.backward(params, &dec_cache.hs[l], &d_logits, grads);
                    for (a, b) in d_dec_hs[l].iter_mut().zip(&dx) {
                        *a += b;
                    }
                }
            }
            if arch.ae_type.uses_times() {
                let track = &self.tracks.as_ref().unwrap()[i];
                let that = time_pre[l].max(0.0);
                let d_that = w_t * 2.0 * (that - track[l]);
                let d_pre = dense::relu_backward(&[time_pre[l]], &[d_that]);
                let dx = time_head.backward(params, &dec_cache.hs[l], &d_pre, grads);
                for (a, b) in d_dec_hs[l].iter_mut().zip(&dx) {
                    *a += b;
                }
            }
        }

        let d_dec_xs = dec.backward(params, &dec_xs, &dec_cache, &d_dec_hs, grads);
        let mut d_feature = vec![0.0; k];
        for dx in &d_dec_xs {
            for (a, b) in d_feature.iter_mut().zip(dx) {
                *a += b;
            }
        }

        let mut d_enc_hs = vec![vec![0.0; k]; len];
        match arch.method {
            FeatureMethod::Last => d_enc_hs[len - 1] = d_feature,
            FeatureMethod::Avg => {
                let inv = 1.0 / len as f64;
                for dh in &mut d_enc_hs {
                    for (a, b) in dh.iter_mut().zip(&d_feature) {
                        *a += b * inv;
                    }
                }
            }
        }
        let d_xs = enc.backward(params, &xs, &enc_cache, &d_enc_hs, grads);
        if arch.ae_type.uses_actions() {
            let gtable = grads.get_mut("embed");
            for (l, dx) in d_xs.iter().enumerate() {
                dense::embed_backward(gtable, self.p.actions(i)[l] as usize, &dx[..k]);
            }
        }
        Ok(total)
    }
}

impl Model for AeModel<'_> {
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
            total += self.item_loss_grad(params, self.items[b], grads.as_deref_mut())?;
        }
        Ok(total)
    }
}

/// Trained autoencoder: features of every process under the best-epoch
/// parameters, per-epoch mean losses, and the parameters themselves.
#[derive(Debug)]
pub struct SeqAEFit {
    pub theta: FeatureMatrix,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub params: NetParams,
    pub best_epoch: usize,
    pub diverged_at: Option<usize>,
}

/// Fit an autoencoder on `p` and return the extracted features. With no
/// explicit split in `cfg`, a seeded 10% validation split is drawn. The
/// feature matrix is rotated to principal components unless `arch.pca` is
/// off.
pub fn seq2feature_seq2seq(
    p: &ProcessSet,
    arch: &SeqAEArchitecture,
    cfg: &TrainConfig,
) -> Result<SeqAEFit> {
    let model = AeModel::over_all(p, arch)?;
    let mut cfg = cfg.clone();
    cfg.set_default_split(p.n(), INNER_VALID_FRAC);
    let params0 = init_ae_params(arch, p.n_actions(), &mut rng::stream(cfg.seed, 0));
    let out = nn::train(&model, params0, &cfg)?;
    let mut flat = Vec::with_capacity(p.n() * arch.k);
    for i in 0..p.n() {
        flat.extend_from_slice(&model.feature(&out.params, i));
    }
    let mut theta = FeatureMatrix::from_raw(p.n(), arch.k, flat);
    if arch.pca {
        theta = theta.pca_rotate();
    }
    Ok(SeqAEFit {
        theta,
        train_loss: out.history.iter().map(|r| r[0]).collect(),
        valid_loss: out.history.iter().map(|r| r[1]).collect(),
        params: out.params,
        best_epoch: out.best_epoch,
        diverged_at: out.diverged_at,
    })
}

/// Cross-validation outcome over candidate feature dimensions.
#[derive(Debug, Clone)]
pub struct KChoice {
    pub k: usize,
    pub k_cand: Vec<usize>,
    pub cv_loss: Vec<f64>,
}

/// Choose K by n-fold cross-validation. Folds come from a seeded
/// permutation; each fold is scored, per candidate K, with the parameters
/// trained on the remaining folds (best epoch picked on a 10% split of
/// that training set). The reported loss is the mean held-out loss per
/// sequence; ties go to the smaller K.
pub fn choose_k_seq2seq(
    p: &ProcessSet,
    template: &SeqAEArchitecture,
    k_cand: &[usize],
    n_fold: usize,
    cfg: &TrainConfig,
) -> Result<KChoice> {
    if k_cand.is_empty() {
        return Err(Error::InvalidArgument("no candidate dimensions".into()));
    }
    let n = p.n();
    if n_fold < 2 || n_fold > n {
        return Err(Error::InvalidArgument(format!(
            "n_fold {n_fold} outside 2..={n}"
        )));
    }
    for &k in k_cand {
        let mut arch = template.clone();
        arch.k = k;
        arch.validate()?;
    }

    let mut setup = rng::stream(cfg.seed, 0);
    let mut perm: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    perm.shuffle(&mut setup);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); n_fold];
    for (pos, &i) in perm.iter().enumerate() {
        folds[pos % n_fold].push(i);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    let sub_seeds: Vec<u64> = (0..n_fold * k_cand.len()).map(|_| setup.gen()).collect();

    let jobs: Vec<(usize, usize)> = (0..n_fold)
        .flat_map(|f| (0..k_cand.len()).map(move |ki| (f, ki)))
        .collect();
    let sums: Vec<Result<(usize, f64)>> = jobs
        .par_iter()
        .map(|&(f, ki)| {
            let mut arch = template.clone();
            arch.k = k_cand[ki];
            let test = &folds[f];
            let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
            let m = train.len();
            let model_train = AeModel::new(p, &arch, train)?;
            let mut sub_cfg = cfg.clone();
            sub_cfg.seed = sub_seeds[f * k_cand.len() + ki];
            sub_cfg.train_idx.clear();
            sub_cfg.valid_idx.clear();
            sub_cfg.set_default_split(m, INNER_VALID_FRAC);
            let params0 = init_ae_params(&arch, p.n_actions(), &mut rng::stream(sub_cfg.seed, 0));
            let out = nn::train(&model_train, params0, &sub_cfg)?;
            let model_test = AeModel::new(p, &arch, test.clone())?;
            let all: Vec<usize> = (0..test.len()).collect();
            let sum = model_test.batch_loss_grad(&out.params, &all, None)?;
            Ok((ki, sum))
        })
        .collect();

    let mut cv_loss = vec![0.0; k_cand.len()];
    for r in sums {
        let (ki, sum) = r?;
        cv_loss[ki] += sum / n as f64;
    }
    let mut best = 0;
    for ki in 1..k_cand.len() {
        let better = cv_loss[ki] < cv_loss[best]
            || (cv_loss[ki] == cv_loss[best] && k_cand[ki] < k_cand[best]);
        if better {
            best = ki;
        }
    }
    Ok(KChoice {
        k: k_cand[best],
        k_cand: k_cand.to_vec(),
        cv_loss,
    })
}
