//! Domain types and density terms of the latent position joint mixture model.

mod attributes;
mod density;
pub mod linalg;
mod network;
mod normal;
mod state;

pub use attributes::AttributeVector;
pub use density::{
    attr_logdensity, edge_linear_predictor, edge_loglik, gp_covariance, log_posterior,
    log_posterior_terms, log_prior, mixture_logprior, PosteriorTerms,
};
pub use network::{pair_count, pair_index, Cell, MultiLayerNetwork};
pub use normal::{ln_phi, ln_phi_c, log_normal_cdf, log_normal_sf, normal_cdf};
pub use state::{Hyperparameters, ModelState};
