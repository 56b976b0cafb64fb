use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod pipeline;

/// Fit latent position joint mixture models to attributed multi-layer
/// networks.
#[derive(Debug, Parser)]
#[command(name = "lpjmm", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset and a ready-to-run config.
    Simulate(SimulateArgs),
    /// Run the sampler and write chain, summaries, partitions and a manifest.
    Fit(FitArgs),
    /// Partition point estimates from a finished run.
    Cluster(ClusterArgs),
    /// Posterior-predictive goodness of fit from a finished run.
    Gof(GofArgs),
    /// Summary statistics of the observed network.
    Stats(StatsArgs),
    /// Refit over a range of mixture sizes H and tabulate the results.
    SweepH(SweepArgs),
    /// WAIC of a run fitted with `store_pointwise = true`.
    Waic(WaicArgs),
    /// Reduce several attribute columns to their first principal component.
    Pca(PcaArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Built-in scenario: `single`, `two` or `separated`.
    #[arg(long, default_value = "single")]
    scenario: String,
    /// JSON scenario file; overrides --scenario.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fraction of pairs per layer to mask as missing.
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
    /// Seed of the missingness mask (defaults to seed + 1000).
    #[arg(long)]
    missing_seed: Option<u64>,
    /// Mixture size H written into the generated config.
    #[arg(long, default_value_t = 5)]
    h: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Independent chains run in parallel, each in `chain_<c>/` with seed
    /// `seed + c - 1`.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Override `chain.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `data.output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Output directory of a fit.
    #[arg(long)]
    run: PathBuf,
    /// Estimators: maxpear, minbinder, greedyepl.
    #[arg(long, value_delimiter = ',', default_value = "maxpear,minbinder,greedyepl")]
    methods: Vec<String>,
    /// Truth file (`actor,group[,z..]`) for ARI reporting.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    max_groups: Option<usize>,
    /// Directory for partition CSVs; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GofArgs {
    /// Run configuration of the fit (for the attributes).
    #[arg(long)]
    config: PathBuf,
    /// Output directory of the fit.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Partition CSV for group assortativity; defaults to the truth file
    /// of the config when present.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory for gof.csv and gof.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Run configuration naming the dataset.
    #[arg(long)]
    config: PathBuf,
    /// Partition CSV for group assortativity; defaults to the truth file.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Values of H to fit.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7")]
    h: Vec<usize>,
    /// Directory for `sweep_h.csv` and one subdirectory per H.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WaicArgs {
    /// Output directory of a fit.
    #[arg(long)]
    run: PathBuf,
}

#[derive(Debug, Args)]
struct PcaArgs {
    /// Headed CSV with two or more numeric columns.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the one-column attribute file.
    #[arg(long)]
    out: PathBuf,
    /// Header of the written column.
    #[arg(long, default_value = "pc1")]
    name: String,
}

/// 3 for numerical failures, 2 for everything else (bad input, bad
/// configuration, unreadable or unwritable files).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<lpjmm::Error>()) {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Gof(a) => commands::gof(a),
        Command::Stats(a) => commands::stats(a),
        Command::SweepH(a) => commands::sweep_h(a),
        Command::Waic(a) => commands::waic(a),
        Command::Pca(a) => commands::pca(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
