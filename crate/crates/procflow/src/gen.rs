//! Synthetic process generators: a simulated multi-option item, a Markov
//! chain over an explicit transition matrix, and a recurrent-network
//! sampler.
//!
//! Every generator draws process i from its own RNG stream, so parallel and
//! sequential generation agree and a fixed seed reproduces output exactly.
//! Timestamps start at 0 and advance by i.i.d. positive inter-arrival gaps.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::error::{Error, Result};
use crate::model::ProcessSet;
use crate::nn::{dense, CellKind, NetParams, RnnSpec};
use crate::rng;

/// Length cap for the stochastic generators; chains that reach it are kept
/// at this length and counted.
pub const MAX_LEN: usize = 1000;

/// RNG stream used to draw random network parameters in [`seq_gen3`];
/// distinct from the per-process streams 0..n.
const PARAM_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDist {
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Constant { value: f64 },
}

/// Inter-arrival time model; gaps are drawn i.i.d. when `include_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeModel {
    pub dist: TimeDist,
    pub include_time: bool,
}

impl TimeModel {
    /// Exponential(1) gaps.
    pub fn standard() -> Self {
        TimeModel {
            dist: TimeDist::Exponential { rate: 1.0 },
            include_time: true,
        }
    }

    /// No timestamps.
    pub fn none() -> Self {
        TimeModel {
            dist: TimeDist::Exponential { rate: 1.0 },
            include_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.dist {
            TimeDist::Exponential { rate } => rate > 0.0,
            TimeDist::LogNormal { mu, sigma } => mu > 0.0 && sigma > 0.0,
            TimeDist::Constant { value } => value > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "time model parameters must be strictly positive: {:?}",
                self.dist
            )))
        }
    }

    fn sample_gap(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.dist {
            TimeDist::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            TimeDist::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).unwrap().sample(rng),
            TimeDist::Constant { value } => value,
        }
    }

    /// Timestamps for a length-`len` process: t_1 = 0, then cumulative gaps.
    fn sample_times(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut t = Vec::with_capacity(len);
        let mut cur = 0.0;
        t.push(cur);
        for _ in 1..len {
            cur += self.sample_gap(rng);
            t.push(cur);
        }
        t
    }
}

/// Markov chain specification: row-stochastic transition matrix over an
/// action vocabulary, with designated start and absorbing-terminal actions.
#[derive(Debug, Clone)]
pub struct MarkovSpec {
    vocab: Vec<String>,
    /// Row-major N x N transition probabilities.
    p: Vec<f64>,
    start: usize,
    terminal: usize,
}

impl MarkovSpec {
    pub fn new(vocab: Vec<String>, p: Vec<f64>, start: usize, terminal: usize) -> Result<Self> {
        let n = vocab.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty Markov vocabulary".into()));
        }
        {
            let mut sorted = vocab.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                return Err(Error::InvalidArgument(
                    "duplicate labels in Markov vocabulary".into(),
                ));
            }
        }
        if p.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} transition entries for {} actions",
                p.len(),
                n
            )));
        }
        if start >= n || terminal >= n {
            return Err(Error::IndexOutOfRange {
                index: start.max(terminal),
                n,
            });
        }
        for i in 0..n {
            let row = &p[i * n..(i + 1) * n];
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidArgument(format!(
                    "transition row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "transition row {i} sums to {sum}"
                )));
            }
        }
        let spec = MarkovSpec {
            vocab,
            p,
            start,
            terminal,
        };
        if !spec.terminal_reachable() {
            return Err(Error::UnreachableTerminal);
        }
        Ok(spec)
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    /// Breadth-first search over positive-probability edges.
    fn terminal_reachable(&self) -> bool {
        let n = self.vocab.len();
        if self.start == self.terminal {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = vec![self.start];
        seen[self.start] = true;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if self.p[i * n + j] > 0.0 && !seen[j] {
                    if j == self.terminal {
                        return true;
                    }
                    seen[j] = true;
                    queue.push(j);
                }
            }
        }
        false
    }

    fn step(&self, from: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = self.vocab.len();
        let row = &self.p[from * n..(from + 1) * n];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = from;
        for (j, &pj) in row.iter().enumerate() {
            if pj > 0.0 {
                last_positive = j;
            }
            acc += pj;
            if u < acc {
                return j;
            }
        }
        last_positive
    }
}

/// A generated set plus the number of processes that hit the length cap.
#[derive(Debug)]
pub struct GenSample {
    pub set: ProcessSet,
    pub n_capped: usize,
}

fn assemble(
    label_seqs: Vec<Vec<String>>,
    times: Option<Vec<Vec<f64>>>,
) -> Result<ProcessSet> {
    let ids = (1..=label_seqs.len()).map(|i| i.to_string()).collect();
    ProcessSet::from_labels(ids, label_seqs, times)
}

/// Simulated multi-option item. Each process is Start; G rounds of
/// (OPT1_i, OPT2_j, RUN) with G geometric (continue probability
/// `p_continue`) and i, j uniform; with probability 1/2 one CHECK_X with X
/// uniform in {A, B, C, D}; then End.
pub fn seq_gen(
    n: usize,
    c1: usize,
    c2: usize,
    p_continue: f64,
    time: TimeModel,
    seed: u64,
) -> Result<ProcessSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if c1 == 0 || c2 == 0 {
        return Err(Error::InvalidArgument(
            "option counts must be at least 1".into(),
        ));
    }
    if !(p_continue > 0.0 && p_continue < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "continue probability {p_continue} outside (0, 1)"
        )));
    }
    time.validate()?;
    let mut seqs = Vec::with_capacity(n);
    let mut times = time.include_time.then(Vec::new);
    for i in 0..n {
        let mut r = rng::stream(seed, i as u64);
        let mut labels = vec!["Start".to_string()];
        let mut rounds = 0usize;
        while rounds < MAX_LEN && r.gen::<f64>() < p_continue {
            rounds += 1;
        }
        for _ in 0..rounds {
            labels.push(format!("OPT1_{}", r.gen_range(1..=c1)));
            labels.push(format!("OPT2_{}", r.gen_range(1..=c2)));
            labels.push("RUN".to_string());
        }
        if r.gen::<f64>() < 0.5 {
            let x = ["A", "B", "C", "D"][r.gen_range(0..4)];
            labels.push(format!("CHECK_{x}"));
        }
        labels.push("End".to_string());
        if let Some(ts) = times.as_mut() {
            ts.push(time.sample_times(labels.len(), &mut r));
        }
        seqs.push(labels);
    }
    assemble(seqs, times)
}

/// Markov-chain generator: start at the spec's start action, step by its
/// transition matrix, stop on the first terminal emission (inclusive) or at
/// the length cap.
pub fn seq_gen2(n: usize, spec: &MarkovSpec, time: TimeModel, seed: u64) -> Result<GenSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    time.validate()?;
    let mut seqs = Vec::with_capacity(n);
    let mut times = time.include_time.then(Vec::new);
    let mut n_capped = 0usize;
    for i in 0..n {
        let mut r = rng::stream(seed, i as u64);
        let mut idx = vec![spec.start];
        while *idx.last().unwrap() != spec.terminal && idx.len() < MAX_LEN {
            let next = spec.step(*idx.last().unwrap(), &mut r);
            idx.push(next);
        }
        if *idx.last().unwrap() != spec.terminal {
            n_capped += 1;
        }
        let labels: Vec<String> = idx.iter().map(|&a| spec.vocab[a].clone()).collect();
        if let Some(ts) = times.as_mut() {
            ts.push(time.sample_times(labels.len(), &mut r));
        }
        seqs.push(labels);
    }
    if n_capped > 0 {
        log::warn!("{n_capped} of {n} chains hit the length cap of {MAX_LEN}");
    }
    Ok(GenSample {
        set: assemble(seqs, times)?,
        n_capped,
    })
}

/// Network shape for [`seq_gen3`]: vocabulary, embedding/state width, and
/// the action that terminates a sequence.
#[derive(Debug, Clone)]
pub struct RnnGenSpec {
    pub vocab: Vec<String>,
    pub hidden_dim: usize,
    pub terminal: usize,
}

impl RnnGenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.vocab.is_empty() || self.hidden_dim == 0 {
            return Err(Error::InvalidArgument(
                "network generator needs a vocabulary and a positive width".into(),
            ));
        }
        let mut sorted = self.vocab.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.vocab.len() {
            return Err(Error::InvalidArgument(
                "duplicate labels in generator vocabulary".into(),
            ));
        }
        if self.terminal >= self.vocab.len() {
            return Err(Error::IndexOutOfRange {
                index: self.terminal,
                n: self.vocab.len(),
            });
        }
        Ok(())
    }

    fn rnn(&self) -> RnnSpec {
        RnnSpec::new(CellKind::Gru, self.hidden_dim, self.hidden_dim, "rnn")
    }

    /// Freshly initialized sampler parameters (embedding, GRU, softmax head).
    pub fn init_params(&self, rng: &mut ChaCha8Rng) -> NetParams {
        let n = self.vocab.len();
        let mut params = NetParams::new();
        params.insert(
            "embed",
            crate::nn::init::embedding(n, self.hidden_dim, rng),
        );
        self.rnn().init_params(&mut params, rng);
        dense::DenseSpec::new(self.hidden_dim, n, "head").init_params(&mut params, rng);
        params
    }

    fn check_params(&self, params: &NetParams) -> Result<()> {
        let n = self.vocab.len();
        let k = self.hidden_dim;
        let expect: [(&str, (usize, usize)); 2] = [("embed", (n, k)), ("head.w", (n, k))];
        for (name, shape) in expect {
            let t = params
                .try_get(name)
                .ok_or_else(|| Error::DimensionMismatch(format!("missing tensor {name}")))?;
            if t.shape() != shape {
                return Err(Error::DimensionMismatch(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    name,
                    t.shape(),
                    shape
                )));
            }
        }
        for gate in ["z", "r", "h"] {
            for (kind, shape) in [('w', (k, k)), ('u', (k, k)), ('b', (1, k))] {
                let name = format!("rnn.{kind}_{gate}");
                let t = params
                    .try_get(&name)
                    .ok_or_else(|| Error::DimensionMismatch(format!("missing tensor {name}")))?;
                if t.shape() != shape {
                    return Err(Error::DimensionMismatch(format!(
                        "tensor {} has shape {:?}, expected {:?}",
                        name,
                        t.shape(),
                        shape
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Recurrent-network generator. The next-action distribution is a softmax
/// head over a GRU fed with embeddings of the history (the first step sees a
/// zero vector); sampling stops at the terminal action or the length cap.
/// With `params = None`, parameters are drawn from the seed's own stream.
pub fn seq_gen3(
    n: usize,
    spec: &RnnGenSpec,
    params: Option<&NetParams>,
    time: TimeModel,
    seed: u64,
) -> Result<GenSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    spec.validate()?;
    time.validate()?;
    let owned;
    let params = match params {
        Some(p) => p,
        None => {
            owned = spec.init_params(&mut rng::stream(seed, PARAM_STREAM));
            &owned
        }
    };
    spec.check_params(params)?;
    params.validate_finite()?;
    let rnn = spec.rnn();
    let head = dense::DenseSpec::new(spec.hidden_dim, spec.vocab.len(), "head");
    let mut seqs = Vec::with_capacity(n);
    let mut times = time.include_time.then(Vec::new);
    let mut n_capped = 0usize;
    for i in 0..n {
        let mut r = rng::stream(seed, i as u64);
        let mut idx: Vec<usize> = Vec::new();
        let mut xs: Vec<Vec<f64>> = vec![vec![0.0; spec.hidden_dim]];
        loop {
            // Rerunning the cell from the start each step is O(L^2) but
            // keeps one forward implementation; generated sequences are
            // capped, and sampling is not a hot path.
            let cache = rnn.forward(params, &xs);
            let h = cache.hs.last().unwrap();
            let probs = dense::softmax(&head.forward(params, h));
            let u: f64 = r.gen();
            let mut acc = 0.0;
            let mut a = probs.len() - 1;
            for (j, &pj) in probs.iter().enumerate() {
                acc += pj;
                if u < acc {
                    a = j;
                    break;
                }
            }
            idx.push(a);
            if a == spec.terminal || idx.len() >= MAX_LEN {
                break;
            }
            xs.push(dense::embed_forward(params.get("embed"), a));
        }
        if *idx.last().unwrap() != spec.terminal {
            n_capped += 1;
        }
        let labels: Vec<String> = idx.iter().map(|&a| spec.vocab[a].clone()).collect();
        if let Some(ts) = times.as_mut() {
            ts.push(time.sample_times(labels.len(), &mut r));
        }
        seqs.push(labels);
    }
    if n_capped > 0 {
        log::warn!("{n_capped} of {n} sampled sequences hit the length cap of {MAX_LEN}");
    }
    Ok(GenSample {
        set: assemble(seqs, times)?,
        n_capped,
    })
}
