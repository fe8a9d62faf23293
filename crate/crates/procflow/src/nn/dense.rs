//! Dense layers, activations, and embedding lookups.

use rand_chacha::ChaCha8Rng;

use crate::nn::init;
use crate::nn::params::NetParams;
use crate::nn::tensor::Tensor;

/// Fully connected map y = W x + b with W of shape out x in, registered
/// under `{prefix}.w` and `{prefix}.b`.
#[derive(Debug, Clone)]
pub struct DenseSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub prefix: String,
}

impl DenseSpec {
    pub fn new(in_dim: usize, out_dim: usize, prefix: &str) -> Self {
        DenseSpec {
            in_dim,
            out_dim,
            prefix: prefix.to_string(),
        }
    }

    pub fn init_params(&self, params: &mut NetParams, rng: &mut ChaCha8Rng) {
        params.insert(
            format!("{}.w", self.prefix),
            init::glorot(self.out_dim, self.in_dim, rng),
        );
        params.insert(
            format!("{}.b", self.prefix),
            Tensor::zeros(1, self.out_dim),
        );
    }

    pub fn forward(&self, params: &NetParams, x: &[f64]) -> Vec<f64> {
        let mut y = params.get(&format!("{}.b", self.prefix)).row(0).to_vec();
        params.get(&format!("{}.w", self.prefix)).matvec_acc(x, &mut y);
        y
    }

    /// Accumulate parameter gradients for upstream gradient `dy` at input
    /// `x`; returns the gradient w.r.t. x.
    pub fn backward(
        &self,
        params: &NetParams,
        x: &[f64],
        dy: &[f64],
        grads: &mut NetParams,
    ) -> Vec<f64> {
        grads.get_mut(&format!("{}.w", self.prefix)).outer_acc(dy, x);
        let b = grads.get_mut(&format!("{}.b", self.prefix)).row_mut(0);
        for (bk, d) in b.iter_mut().zip(dy) {
            *bk += d;
        }
        let mut dx = vec![0.0; self.in_dim];
        params
            .get(&format!("{}.w", self.prefix))
            .matvec_t_acc(dy, &mut dx);
        dx
    }
}

/// Numerically shifted softmax; the result sums to 1.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Elementwise max(0, x); the derivative at exactly 0 is taken as 0.
pub fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

pub fn relu_backward(z: &[f64], dy: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(dy)
        .map(|(&v, &d)| if v > 0.0 { d } else { 0.0 })
        .collect()
}

pub fn tanh_vec(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v.tanh()).collect()
}

/// Backward through tanh given the activated output y = tanh(z).
pub fn tanh_backward_from_output(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(&v, &d)| d * (1.0 - v * v)).collect()
}

/// Copy of embedding row `idx`.
pub fn embed_forward(table: &Tensor, idx: usize) -> Vec<f64> {
    table.row(idx).to_vec()
}

/// Accumulate gradient `d` into embedding row `idx`.
pub fn embed_backward(gtable: &mut Tensor, idx: usize, d: &[f64]) {
    let row = gtable.row_mut(idx);
    for (r, v) in row.iter_mut().zip(d) {
        *r += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn softmax_sums_to_one_and_orders_inputs() {
        let p = softmax(&[1.0, 3.0, -2.0, 700.0]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p[3] > 0.999);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&[-1.0, 0.0, 2.5]), vec![0.0, 0.0, 2.5]);
        assert_eq!(
            relu_backward(&[-1.0, 0.0, 2.5], &[1.0, 1.0, 1.0]),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn dense_forward_matches_hand_result() {
        let spec = DenseSpec::new(2, 2, "d");
        let mut params = NetParams::new();
        spec.init_params(&mut params, &mut rng::root(1));
        let w = params.get_mut("d.w");
        w.set(0, 0, 1.0);
        w.set(0, 1, -1.0);
        w.set(1, 0, 0.5);
        w.set(1, 1, 2.0);
        params.get_mut("d.b").set(0, 1, 0.25);
        let y = spec.forward(&params, &[2.0, 3.0]);
        assert_eq!(y, vec![-1.0, 7.25]);
    }

    #[test]
    fn embedding_gradient_lands_on_looked_up_row() {
        let mut g = Tensor::zeros(3, 2);
        embed_backward(&mut g, 1, &[0.5, -0.5]);
        embed_backward(&mut g, 1, &[0.5, 0.0]);
        assert_eq!(g.row(0), &[0.0, 0.0]);
        assert_eq!(g.row(1), &[1.0, -0.5]);
    }
}
