//! Minimal reverse-mode autodiff over `ndarray` matrices.
//!
//! All tensors are `Array2<f64>`; scalars are 1x1 matrices. A [`Tape`]
//! records the forward computation, [`Tape::backward`] walks it in reverse
//! and returns a gradient per recorded node. Model parameters live in a
//! [`ParamStore`] and are bound onto a tape per training step through a
//! [`Binder`], which maps gradients back to parameter names for the
//! optimizer.

mod gradcheck;
mod layers;
mod params;
mod tape;

pub use gradcheck::{central_difference_grad, relative_error};
pub use layers::{
    argmax_rows, cosine, cross_entropy_sum, embedding_lookup, layer_norm, layer_norm_init, linear, linear_init, linear_init_zeros,
    mse, xavier_init, zeros_init,
};
pub use params::{
    read_matrix_file, write_matrix_file, xavier, Adam, Binder, ParamError, ParamStore,
};
pub use tape::{hstack, logsumexp, vstack, Gradients, Tape, Var};
