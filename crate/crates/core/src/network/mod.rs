//! Network statistics, synthetic scenarios, missingness injection and
//! posterior-predictive goodness of fit.

mod gof;
mod simulate;
mod stats;

pub use gof::{gof_replicates, GofOptions, GofReport, Replicate, StatisticMeans};
pub use simulate::{
    apply_missingness, simulate_attributes, simulate_dataset, simulate_network, LayerSpec, ScenarioSpec,
    SimulatedDataset,
};
pub use stats::{
    categorical_assortativity, density, network_statistics, numeric_assortativity, observed_density, transitivity,
    Graph, LayerStatistics, NetworkStatistics,
};
