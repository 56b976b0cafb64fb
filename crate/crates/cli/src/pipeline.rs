use std::path::Path;

use anyhow::{Context, Result};
use lpjmm::io::{write_outputs, DatasetBundle, FitOutputs, Manifest, ReferenceChoice, RunConfig};
use lpjmm::network::{gof_replicates, GofOptions, GofReport};
use lpjmm::postprocess::{
    adjusted_rand_index, label_draws, point_estimate_partition, posterior_mean_positions, posterior_similarity,
    summarize_chain, Partition, PartitionMethod,
};
use lpjmm::sampler::{run_chain, ChainConfig, PosteriorChain};
use lpjmm::Hyper;
use serde::Serialize;

/// Headline numbers of one fit, also written as `fit.json`.
#[derive(Debug, Serialize)]
pub struct FitReport {
    pub seed: u64,
    pub draws: usize,
    pub groups: Vec<(PartitionMethod, usize)>,
    /// ARI of each estimate against the truth file, when one is given.
    pub truth_ari: Vec<(PartitionMethod, f64)>,
    pub waic: Option<f64>,
}

pub fn estimate_partitions(
    chain: &PosteriorChain,
    methods: &[PartitionMethod],
    opts: &lpjmm::postprocess::EstimatorOptions,
) -> Result<Vec<(PartitionMethod, Partition)>> {
    let draws = label_draws(&chain.draws);
    let psm = posterior_similarity(&draws)?;
    methods
        .iter()
        .map(|&m| {
            log::info!("computing {m} estimate");
            Ok((m, point_estimate_partition(&draws, &psm, m, opts)?))
        })
        .collect()
}

pub fn gof_for(chain: &PosteriorChain, bundle: &DatasetBundle, cfg: &RunConfig, labels: Option<&[usize]>) -> Result<GofReport> {
    let opts = GofOptions {
        stride: cfg.postprocess.gof_stride,
        seed: cfg.postprocess.gof_seed,
        regenerate_x: cfg.postprocess.gof_regenerate_x,
    };
    Ok(gof_replicates(&chain.draws, &bundle.attributes, labels, &opts)?)
}

/// Runs one chain and writes every result file into `out`.
pub fn fit_one(cfg: &RunConfig, hyper: &Hyper, bundle: &DatasetBundle, chain_cfg: &ChainConfig, out: &Path) -> Result<FitReport> {
    log::info!(
        "fitting N = {}, L = {}, K = {}, H = {} for {} sweeps (seed {})",
        bundle.network.n_actors(),
        bundle.network.n_layers(),
        hyper.k,
        hyper.h,
        chain_cfg.total_sweeps(),
        chain_cfg.seed
    );
    let chain = run_chain(&bundle.network, &bundle.attributes, hyper, chain_cfg, None)?;
    if chain.is_empty() {
        anyhow::bail!("the run stored no draws; raise chain.n_keep or lower chain.thin");
    }
    let pp = &cfg.postprocess;
    let partitions = estimate_partitions(&chain, &pp.methods, &pp.estimator_options())?;
    let summary = summarize_chain(&chain.draws, pp.level)?;

    let truth_g = bundle.truth.as_ref().map(|t| t.g.as_slice());
    let gof_labels = truth_g.or_else(|| partitions.first().map(|(_, p)| p.labels()));
    let gof = gof_for(&chain, bundle, cfg, gof_labels)?;

    let reference = match pp.reference {
        ReferenceChoice::Last => None,
        ReferenceChoice::Truth => Some(
            bundle
                .truth
                .as_ref()
                .and_then(|t| t.z.as_ref())
                .context("reference = \"truth\" needs latent positions in the truth file")?,
        ),
    };
    let positions = posterior_mean_positions(&chain.draws, reference)?;

    let mut truth_ari = Vec::new();
    if let Some(g) = truth_g {
        let truth = Partition::new(g);
        for (m, p) in &partitions {
            truth_ari.push((*m, adjusted_rand_index(p, &truth)?));
        }
    }
    let waic = match &chain.pointwise {
        Some(pw) => Some(lpjmm::postprocess::waic(pw)?.waic),
        None => None,
    };
    let report = FitReport {
        seed: chain_cfg.seed,
        draws: chain.len(),
        groups: partitions.iter().map(|(m, p)| (*m, p.n_groups())).collect(),
        truth_ari,
        waic,
    };
    let mut resolved = cfg.with_absolute_paths();
    resolved.chain = chain_cfg.clone();
    let manifest: Manifest = write_outputs(
        out,
        &FitOutputs {
            chain: &chain,
            summary: Some(&summary),
            partitions: &partitions,
            gof: Some(&gof),
            positions: Some(&positions),
            config_hash: resolved.hash(),
            data_fingerprint: bundle.fingerprint.clone(),
            extra: vec![
                ("config.toml".into(), resolved.to_toml()?),
                ("fit.json".into(), lpjmm::io::to_json(&report)),
            ],
        },
    )?;
    log::info!("wrote {} files to {}", manifest.files.len() + 1, out.display());
    Ok(report)
}
