//! Self-contained neural engine: tensors, named parameter stores, GRU/LSTM
//! cells with exact backpropagation through time, dense heads, losses,
//! seeded initialization, four stochastic optimizers, and a deterministic
//! training loop.
//!
//! Batches are processed one sequence at a time at each sequence's own
//! length, which is equivalent to padding with fully masked steps: a masked
//! step contributes no loss and no gradient by construction.

pub mod cell;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod optimizer;
pub mod params;
pub mod tensor;
pub mod train;

pub use cell::{CellKind, RnnCache, RnnSpec};
pub use dense::DenseSpec;
pub use loss::{loss_action, loss_time, LossSpec};
pub use optimizer::{Optimizer, OptimizerKind};
pub use params::NetParams;
pub use tensor::Tensor;
pub use train::{evaluate, train, Model, TrainConfig, TrainOutcome};
