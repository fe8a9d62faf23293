//! Stochastic first-order optimizers over a NetParams store.

use crate::nn::params::NetParams;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Adadelta,
    Rmsprop,
}

impl OptimizerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adadelta => "adadelta",
            OptimizerKind::Rmsprop => "rmsprop",
        }
    }

    pub fn parse(s: &str) -> Option<OptimizerKind> {
        match s {
            "sgd" => Some(OptimizerKind::Sgd),
            "adam" => Some(OptimizerKind::Adam),
            "adadelta" => Some(OptimizerKind::Adadelta),
            "rmsprop" => Some(OptimizerKind::Rmsprop),
            _ => None,
        }
    }

    /// Baseline step size when the caller does not override it.
    pub fn default_step_size(&self) -> f64 {
        match self {
            OptimizerKind::Sgd => 0.1,
            OptimizerKind::Adam | OptimizerKind::Rmsprop => 0.001,
            OptimizerKind::Adadelta => 1.0,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const ADADELTA_RHO: f64 = 0.95;
const ADADELTA_EPS: f64 = 1e-6;
const RMSPROP_RHO: f64 = 0.9;
const RMSPROP_EPS: f64 = 1e-8;

/// Optimizer state: moment buffers aligned with the parameter layout.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    step_size: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, step_size: f64, params: &NetParams) -> Self {
        let buffers: Vec<Tensor> = params
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows(), t.cols()))
            .collect();
        Optimizer {
            kind,
            step_size,
            t: 0,
            m: buffers.clone(),
            v: buffers,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Apply one update from `grads` (same layout as `params`).
    pub fn step(&mut self, params: &mut NetParams, grads: &NetParams) {
        self.t += 1;
        let alpha = self.step_size;
        for (slot, (pt, gt)) in params
            .iter_mut()
            .map(|(_, t)| t)
            .zip(grads.iter().map(|(_, t)| t))
            .enumerate()
        {
            let p = pt.data_mut();
            let g = gt.data();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (pk, gk) in p.iter_mut().zip(g) {
                        *pk -= alpha * gk;
                    }
                }
                OptimizerKind::Adam => {
                    let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
                    let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
                    let m = self.m[slot].data_mut();
                    let v = self.v[slot].data_mut();
                    for k in 0..p.len() {
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g[k];
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
                        let mhat = m[k] / bc1;
                        let vhat = v[k] / bc2;
                        p[k] -= alpha * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
                OptimizerKind::Adadelta => {
                    // m accumulates squared gradients, v squared updates;
                    // step_size acts as a multiplier on the adaptive step.
                    let m = self.m[slot].data_mut();
                    let v = self.v[slot].data_mut();
                    for k in 0..p.len() {
                        m[k] = ADADELTA_RHO * m[k] + (1.0 - ADADELTA_RHO) * g[k] * g[k];
                        let delta = -((v[k] + ADADELTA_EPS).sqrt()
                            / (m[k] + ADADELTA_EPS).sqrt())
                            * g[k];
                        p[k] += alpha * delta;
                        v[k] = ADADELTA_RHO * v[k] + (1.0 - ADADELTA_RHO) * delta * delta;
                    }
                }
                OptimizerKind::Rmsprop => {
                    let m = self.m[slot].data_mut();
                    for k in 0..p.len() {
                        m[k] = RMSPROP_RHO * m[k] + (1.0 - RMSPROP_RHO) * g[k] * g[k];
                        p[k] -= alpha * g[k] / (m[k].sqrt() + RMSPROP_EPS);
                    }
                }
            }
        }
    }
}
