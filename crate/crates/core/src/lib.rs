//! Latent position joint mixture model (LPJMM) for attributed single- and
//! multi-layer binary networks.
//!
//! Each actor carries a latent position `z_i` drawn from a finite Gaussian
//! mixture. Edges in layer `l` are probit Bernoulli draws driven by
//! `a_l + b_l |x_i - x_j| - theta_l ||z_i - z_j||`, and the nodal attribute
//! vector `x` is a Gaussian process over the latent space with an exponential
//! kernel. Cluster labels of the mixture give a model-based community
//! partition shared by every layer.
//!
//! The crate is split into:
//!
//! * [`model`]: domain types and every density term of the posterior,
//!   generic over the scalar type.
//! * [`sampler`]: a Metropolis-within-Gibbs engine with probit data
//!   augmentation, missing-edge imputation, adaptation and checkpointing.
//! * [`postprocess`]: Procrustes alignment, clustering point estimates,
//!   adjusted Rand index, WAIC and posterior summaries.
//! * [`network`]: network statistics, scenario simulation, missingness
//!   injection and posterior-predictive goodness of fit.
//! * [`io`]: dataset ingestion, configuration, PCA preprocessing and output
//!   files.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read more plainly in the numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod model;
pub mod network;
pub mod postprocess;
pub mod real;
pub mod sampler;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{AttributeVector, Cell, Hyperparameters, ModelState, MultiLayerNetwork};
pub use real::Real;

/// Model state in double precision, the type the sampler works with.
pub type State = ModelState<f64>;
/// Hyperparameters in double precision.
pub type Hyper = Hyperparameters<f64>;
/// Attributes in double precision.
pub type Attributes = AttributeVector<f64>;
/// Single-precision model state, useful for cheap density sweeps.
pub type State32 = ModelState<f32>;
/// Single-precision hyperparameters.
pub type Hyper32 = Hyperparameters<f32>;
