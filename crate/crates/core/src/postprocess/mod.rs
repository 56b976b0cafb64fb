//! Post-processing of stored draws: alignment of latent positions,
//! clustering point estimates, agreement indices, WAIC and summaries.

mod partition;
mod procrustes;
mod summary;
mod waic;

pub use partition::{
    adjusted_rand_index, average_linkage_cuts, binder_loss, candidates, enumerate_partitions, expected_vi, pear,
    point_estimate_partition, posterior_similarity, EstimatorOptions, Partition, PartitionMethod,
    PosteriorSimilarityMatrix,
};
pub use procrustes::{posterior_mean_positions, procrustes_align, procrustes_objective};
pub use summary::{quantile, summarize, summarize_chain, ChainSummary, SummaryRow};
pub use waic::{waic, Waic};

/// Zero-based labels of every draw.
pub fn label_draws(draws: &[crate::State]) -> Vec<Vec<usize>> {
    draws.iter().map(|d| d.g.clone()).collect()
}
