//! Layer-wise reverse-mode differentiation for the matcher networks.
//!
//! Each operation has a forward function and a matching backward function
//! that takes the upstream gradient, accumulates parameter gradients into
//! the parameters' `grad` buffers and returns the gradient with respect to
//! its input. There is no general graph: the matcher calls the backward
//! functions in reverse order itself.

mod adam;
mod ops;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use ops::{
    adaptive_max_pool1, adaptive_max_pool1_backward, affine, affine_backward, conv1d,
    conv1d_backward, embed, embed_backward, relu, relu_backward, transpose, Conv1dSpec,
};
pub use tensor::Tensor;
