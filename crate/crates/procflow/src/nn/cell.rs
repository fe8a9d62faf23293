//! GRU and LSTM recurrent cells: forward pass with step caches and exact
//! reverse-mode backpropagation through time.
//!
//! GRU (reset applied before the candidate's recurrent term):
//!   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//!   r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//!   c_t = tanh(W_h x_t + U_h (r_t . h_{t-1}) + b_h)
//!   h_t = (1 - z_t) . h_{t-1} + z_t . c_t,  h_0 = 0
//!
//! LSTM (standard gates, tanh activations):
//!   i_t = sigmoid(W_i x_t + U_i h_{t-1} + b_i)      f_t, o_t analogous
//!   g_t = tanh(W_c x_t + U_c h_{t-1} + b_c)
//!   cc_t = f_t . cc_{t-1} + i_t . g_t
//!   h_t = o_t . tanh(cc_t),  h_0 = cc_0 = 0

use rand_chacha::ChaCha8Rng;

use crate::nn::init;
use crate::nn::params::NetParams;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn tag(&self) -> &'static str {
        match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Option<CellKind> {
        match s {
            "gru" => Some(CellKind::Gru),
            "lstm" => Some(CellKind::Lstm),
            _ => None,
        }
    }
}

/// One recurrent layer: cell kind, input width, state width, and the
/// parameter-name prefix its tensors live under.
#[derive(Debug, Clone)]
pub struct RnnSpec {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub prefix: String,
}

const GRU_GATES: [&str; 3] = ["z", "r", "h"];
const LSTM_GATES: [&str; 4] = ["i", "f", "o", "c"];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl RnnSpec {
    pub fn new(cell: CellKind, input_dim: usize, hidden_dim: usize, prefix: &str) -> Self {
        RnnSpec {
            cell,
            input_dim,
            hidden_dim,
            prefix: prefix.to_string(),
        }
    }

    fn gates(&self) -> &'static [&'static str] {
        match self.cell {
            CellKind::Gru => &GRU_GATES,
            CellKind::Lstm => &LSTM_GATES,
        }
    }

    /// Register this layer's tensors: per gate, W (hidden x input) Glorot,
    /// U (hidden x hidden) orthogonal, b zero (LSTM forget bias +1).
    pub fn init_params(&self, params: &mut NetParams, rng: &mut ChaCha8Rng) {
        for gate in self.gates() {
            params.insert(
                format!("{}.w_{}", self.prefix, gate),
                init::glorot(self.hidden_dim, self.input_dim, rng),
            );
            params.insert(
                format!("{}.u_{}", self.prefix, gate),
                init::orthogonal(self.hidden_dim, rng),
            );
            let mut b = Tensor::zeros(1, self.hidden_dim);
            if self.cell == CellKind::Lstm && *gate == "f" {
                b.fill(1.0);
            }
            params.insert(format!("{}.b_{}", self.prefix, gate), b);
        }
    }

    /// Register zero-valued tensors of this layer's shapes (for callers
    /// assembling parameters by hand).
    pub fn init_zero_params(&self, params: &mut NetParams) {
        for gate in self.gates() {
            params.insert(
                format!("{}.w_{}", self.prefix, gate),
                Tensor::zeros(self.hidden_dim, self.input_dim),
            );
            params.insert(
                format!("{}.u_{}", self.prefix, gate),
                Tensor::zeros(self.hidden_dim, self.hidden_dim),
            );
            params.insert(
                format!("{}.b_{}", self.prefix, gate),
                Tensor::zeros(1, self.hidden_dim),
            );
        }
    }

    fn name(&self, kind: char, gate: &str) -> String {
        format!("{}.{}_{}", self.prefix, kind, gate)
    }

    /// Gate pre-activation a = W x + U h + b.
    fn preact(&self, params: &NetParams, gate: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = params.get(&self.name('b', gate)).row(0).to_vec();
        params.get(&self.name('w', gate)).matvec_acc(x, &mut a);
        params.get(&self.name('u', gate)).matvec_acc(h, &mut a);
        a
    }

    /// Run the cell over `xs`, producing hidden states h_1..h_L and the step
    /// caches backward needs.
    pub fn forward(&self, params: &NetParams, xs: &[Vec<f64>]) -> RnnCache {
        let hd = self.hidden_dim;
        let mut hs: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        let mut h = vec![0.0; hd];
        let mut cc = vec![0.0; hd];
        for x in xs {
            debug_assert_eq!(x.len(), self.input_dim, "rnn input width");
            match self.cell {
                CellKind::Gru => {
                    let z: Vec<f64> = self
                        .preact(params, "z", x, &h)
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    let r: Vec<f64> = self
                        .preact(params, "r", x, &h)
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
                    let c: Vec<f64> = {
                        let mut a = params.get(&self.name('b', "h")).row(0).to_vec();
                        params.get(&self.name('w', "h")).matvec_acc(x, &mut a);
                        params.get(&self.name('u', "h")).matvec_acc(&rh, &mut a);
                        a.into_iter().map(f64::tanh).collect()
                    };
                    let h_new: Vec<f64> = (0..hd)
                        .map(|k| (1.0 - z[k]) * h[k] + z[k] * c[k])
                        .collect();
                    steps.push(StepCache::Gru {
                        h_prev: h.clone(),
                        z,
                        r,
                        rh,
                        c,
                    });
                    h = h_new;
                }
                CellKind::Lstm => {
                    let i: Vec<f64> = self
                        .preact(params, "i", x, &h)
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    let f: Vec<f64> = self
                        .preact(params, "f", x, &h)
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    let o: Vec<f64> = self
                        .preact(params, "o", x, &h)
                        .into_iter()
                        .map(sigmoid)
                        .collect();
                    let g: Vec<f64> = self
                        .preact(params, "c", x, &h)
                        .into_iter()
                        .map(f64::tanh)
                        .collect();
                    let cc_new: Vec<f64> = (0..hd).map(|k| f[k] * cc[k] + i[k] * g[k]).collect();
                    let tc: Vec<f64> = cc_new.iter().map(|v| v.tanh()).collect();
                    let h_new: Vec<f64> = (0..hd).map(|k| o[k] * tc[k]).collect();
                    steps.push(StepCache::Lstm {
                        h_prev: h.clone(),
                        cc_prev: cc.clone(),
                        i,
                        f,
                        o,
                        g,
                        tc,
                    });
                    h = h_new;
                    cc = cc_new;
                }
            }
            hs.push(h.clone());
        }
        RnnCache { hs, steps }
    }

    /// Backpropagate through time. `d_hs[t]` is the gradient arriving at
    /// h_{t+1} from the consumer; parameter gradients accumulate into
    /// `grads`; the return value is the gradient w.r.t. each input x_t.
    pub fn backward(
        &self,
        params: &NetParams,
        xs: &[Vec<f64>],
        cache: &RnnCache,
        d_hs: &[Vec<f64>],
        grads: &mut NetParams,
    ) -> Vec<Vec<f64>> {
        let hd = self.hidden_dim;
        let l = xs.len();
        debug_assert_eq!(d_hs.len(), l);
        let mut dxs = vec![vec![0.0; self.input_dim]; l];
        let mut dh = vec![0.0; hd];
        let mut dcc = vec![0.0; hd];
        for t in (0..l).rev() {
            for k in 0..hd {
                dh[k] += d_hs[t][k];
            }
            match &cache.steps[t] {
                StepCache::Gru { h_prev, z, r, rh, c } => {
                    let mut dh_prev = vec![0.0; hd];
                    // h = (1-z).h_prev + z.c
                    let dz: Vec<f64> = (0..hd).map(|k| dh[k] * (c[k] - h_prev[k])).collect();
                    let dc: Vec<f64> = (0..hd).map(|k| dh[k] * z[k]).collect();
                    for k in 0..hd {
                        dh_prev[k] += dh[k] * (1.0 - z[k]);
                    }
                    // candidate pre-activation
                    let da_c: Vec<f64> = (0..hd).map(|k| dc[k] * (1.0 - c[k] * c[k])).collect();
                    grads
                        .get_mut(&self.name('w', "h"))
                        .outer_acc(&da_c, &xs[t]);
                    grads.get_mut(&self.name('u', "h")).outer_acc(&da_c, rh);
                    let bh = grads.get_mut(&self.name('b', "h")).row_mut(0);
                    for k in 0..hd {
                        bh[k] += da_c[k];
                    }
                    let mut drh = vec![0.0; hd];
                    params.get(&self.name('u', "h")).matvec_t_acc(&da_c, &mut drh);
                    let dr: Vec<f64> = (0..hd).map(|k| drh[k] * h_prev[k]).collect();
                    for k in 0..hd {
                        dh_prev[k] += drh[k] * r[k];
                    }
                    // gate pre-activations
                    let da_z: Vec<f64> = (0..hd).map(|k| dz[k] * z[k] * (1.0 - z[k])).collect();
                    let da_r: Vec<f64> = (0..hd).map(|k| dr[k] * r[k] * (1.0 - r[k])).collect();
                    for (gate, da) in [("z", &da_z), ("r", &da_r)] {
                        grads.get_mut(&self.name('w', gate)).outer_acc(da, &xs[t]);
                        grads.get_mut(&self.name('u', gate)).outer_acc(da, h_prev);
                        let b = grads.get_mut(&self.name('b', gate)).row_mut(0);
                        for k in 0..hd {
                            b[k] += da[k];
                        }
                        params
                            .get(&self.name('u', gate))
                            .matvec_t_acc(da, &mut dh_prev);
                        params
                            .get(&self.name('w', gate))
                            .matvec_t_acc(da, &mut dxs[t]);
                    }
                    params
                        .get(&self.name('w', "h"))
                        .matvec_t_acc(&da_c, &mut dxs[t]);
                    dh = dh_prev;
                }
                StepCache::Lstm {
                    h_prev,
                    cc_prev,
                    i,
                    f,
                    o,
                    g,
                    tc,
                } => {
                    let mut dh_prev = vec![0.0; hd];
                    // h = o.tanh(cc)
                    let dofull: Vec<f64> = (0..hd).map(|k| dh[k] * tc[k]).collect();
                    for k in 0..hd {
                        dcc[k] += dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
                    }
                    // cc = f.cc_prev + i.g
                    let di: Vec<f64> = (0..hd).map(|k| dcc[k] * g[k]).collect();
                    let dg: Vec<f64> = (0..hd).map(|k| dcc[k] * i[k]).collect();
                    let df: Vec<f64> = (0..hd).map(|k| dcc[k] * cc_prev[k]).collect();
                    let dcc_prev: Vec<f64> = (0..hd).map(|k| dcc[k] * f[k]).collect();
                    let da_i: Vec<f64> = (0..hd).map(|k| di[k] * i[k] * (1.0 - i[k])).collect();
                    let da_f: Vec<f64> = (0..hd).map(|k| df[k] * f[k] * (1.0 - f[k])).collect();
                    let da_o: Vec<f64> =
                        (0..hd).map(|k| dofull[k] * o[k] * (1.0 - o[k])).collect();
                    let da_g: Vec<f64> = (0..hd).map(|k| dg[k] * (1.0 - g[k] * g[k])).collect();
                    for (gate, da) in [("i", &da_i), ("f", &da_f), ("o", &da_o), ("c", &da_g)] {
                        grads.get_mut(&self.name('w', gate)).outer_acc(da, &xs[t]);
                        grads.get_mut(&self.name('u', gate)).outer_acc(da, h_prev);
                        let b = grads.get_mut(&self.name('b', gate)).row_mut(0);
                        for k in 0..hd {
                            b[k] += da[k];
                        }
                        params
                            .get(&self.name('u', gate))
                            .matvec_t_acc(da, &mut dh_prev);
                        params
                            .get(&self.name('w', gate))
                            .matvec_t_acc(da, &mut dxs[t]);
                    }
                    dh = dh_prev;
                    dcc = dcc_prev;
                }
            }
        }
        dxs
    }
}

/// Per-step intermediate values captured by the forward pass.
#[derive(Debug, Clone)]
pub enum StepCache {
    Gru {
        h_prev: Vec<f64>,
        z: Vec<f64>,
        r: Vec<f64>,
        rh: Vec<f64>,
        c: Vec<f64>,
    },
    Lstm {
        h_prev: Vec<f64>,
        cc_prev: Vec<f64>,
        i: Vec<f64>,
        f: Vec<f64>,
        o: Vec<f64>,
        g: Vec<f64>,
        tc: Vec<f64>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RnnCache {
    /// Hidden states h_1..h_L.
    pub hs: Vec<Vec<f64>>,
    pub steps: Vec<StepCache>,
}
