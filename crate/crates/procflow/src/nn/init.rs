//! Seeded parameter initialization: uniform embeddings, Glorot-uniform dense
//! weights, orthogonalized-Gaussian recurrent matrices, zero biases.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::nn::tensor::Tensor;

/// Entries uniform in (-limit, limit).
pub fn uniform(rows: usize, cols: usize, limit: f64, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-limit..limit))
}

/// Embedding-table initialization, uniform in (-0.05, 0.05).
pub fn embedding(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    uniform(rows, cols, 0.05, rng)
}

/// Glorot (fan-average) uniform for a dense map of shape out x in.
pub fn glorot(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
    uniform(out_dim, in_dim, limit, rng)
}

/// Square orthogonal matrix: QR of a standard Gaussian draw, with each Q
/// column's sign fixed so the corresponding R diagonal entry is positive
/// (makes the factorization, hence the draw, unique).
pub fn orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let gauss = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Tensor::from_fn(dim, dim, |i, j| q[(i, j)])
}
