//! Deterministic neural primitives with exact forward semantics and
//! finite-difference-verified backward passes: convolution, transpose
//! convolution, instance norm, blur pooling, dense layers, activations,
//! Adam, and a versioned parameter checkpoint format.

pub mod activ;
pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod norm;
pub mod params;
pub mod pool;
pub mod tconv;
pub mod tensor;

pub use activ::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar, softplus};
pub use adam::{AdamConfig, AdamState};
pub use conv::{Conv2d, Conv2dGrads};
pub use dense::{FullyConnected, FullyConnectedGrads};
pub use norm::{InstanceNorm, InstanceNormGrads};
pub use params::GradStore;
pub use pool::{blurpool2x2, blurpool2x2_backward};
pub use tconv::{TConv2x2, TConv2x2Grads};
pub use tensor::Tensor;
