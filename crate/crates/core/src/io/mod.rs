//! Dataset ingestion, run configuration, attribute preprocessing and
//! result files.

mod config;
mod data;
mod output;
mod pca;

pub use config::{DataConfig, ModelConfig, PostprocessConfig, PriorConfig, ReferenceChoice, RunConfig, ScalarOrVec};
pub use data::{
    adjacency_csv, attributes_csv, dataset_fingerprint, load_dataset, read_adjacency, read_attributes, read_columns,
    read_edge_list, read_truth, truth_csv, write_dataset, DatasetBundle, GroundTruth,
};
pub use output::{
    chain_csv, gof_csv, loglik_csv, partition_csv, pointwise_csv, positions_csv, read_chain_csv, read_chain_dir,
    read_json, read_partition_csv, read_pointwise_csv, read_positions_csv, to_json, write_outputs, ChainTable,
    FitOutputs, Manifest, ManifestEntry,
};
pub use pca::pca_first_component;
