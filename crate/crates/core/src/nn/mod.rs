//! Dense-tensor numeric core.
//!
//! Every differentiable operation comes as a forward function and an explicit
//! backward function; there is no tape or dynamic graph. Layers resolve their
//! tensors by name in a [`ParamSet`] and write gradients into a
//! [`Gradients`] store, which the training loop folds into the parameter
//! accumulators before an [`Adam`] step.

mod gradcheck;
mod gru;
mod layers;
pub(crate) mod linalg;
pub mod ops;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use gru::{gru_backward, gru_forward, GruCache, GruGrads, GruOutput, GruWeights};
pub use layers::{initial_value, Dense, Embedding, Gru, EMBEDDING_INIT_LIMIT};
pub use ops::{
    batched_dot, batched_dot_backward, concatenate_lastaxis, cross_entropy, dense, embedding,
    flatten, relu, softmax_rows, split_lastaxis, time_distributed_dense,
};
pub use optim::{Adam, AdamConfig};
pub use params::{Gradients, Param, ParamSet};
pub use tensor::{Real, Tensor, MAX_RANK};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
}
