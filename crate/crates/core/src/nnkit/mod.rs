//! A minimal CNN engine: NCHW tensors, stride-1 same convolutions, 3x3/2 max
//! pooling, ReLU, dense layers, softmax cross-entropy, Xavier init and Adam,
//! all with hand-written backward passes.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod network;
pub mod pool;
mod real;
pub mod spec;
mod tensor;

pub use activation::{relu_backward, relu_forward};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use gradcheck::{grad_check, GradCheckReport};
pub use init::{xavier_bound, xavier_init};
pub use loss::{predict, softmax_xent};
pub use network::{Network, StepStats};
pub use pool::{maxpool_backward, maxpool_forward, PoolCache};
pub use real::Real;
pub use spec::{LayerShape, LayerSpec, NetworkSpec};
pub use tensor::Tensor4;
