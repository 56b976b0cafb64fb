use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lpjmm::io::{
    load_dataset, pca_first_component, read_chain_dir, read_columns, read_partition_csv, read_pointwise_csv,
    read_truth, to_json, write_dataset, DatasetBundle, GroundTruth, ModelConfig, PostprocessConfig, RunConfig,
};
use lpjmm::network::{apply_missingness, network_statistics, simulate_dataset, ScenarioSpec};
use lpjmm::postprocess::{adjusted_rand_index, waic as compute_waic, EstimatorOptions, Partition, PartitionMethod};
use lpjmm::sampler::{ChainMeta, PosteriorChain};
use lpjmm::Attributes;
use rayon::prelude::*;

use crate::pipeline::{estimate_partitions, fit_one, gof_for};
use crate::{ClusterArgs, FitArgs, GofArgs, PcaArgs, SimulateArgs, StatsArgs, SweepArgs, WaicArgs};

const H_REMINDER: &str = "H is an upper bound on the number of groups: choose it as the largest number of \
groups you are willing to accept, and check sensitivity with `lpjmm sweep-h`.";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load(config: &Path) -> Result<(RunConfig, DatasetBundle)> {
    let cfg = RunConfig::load(config)?;
    let bundle = load_dataset(&cfg.data, &cfg.base_dir)?;
    Ok((cfg, bundle))
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut s: ScenarioSpec = serde_json::from_str(&text)
                .map_err(|e| lpjmm::Error::Parse { path: p.display().to_string(), message: e.to_string() })?;
            s.seed = a.seed;
            s
        }
        None => match a.scenario.as_str() {
            "single" => ScenarioSpec::single_layer(a.seed),
            "two" => ScenarioSpec::two_layer(a.seed),
            "separated" => ScenarioSpec::separated(a.seed),
            other => return Err(lpjmm::Error::Config(format!("unknown scenario `{other}`")).into()),
        },
    };
    let sim = simulate_dataset(&spec)?;
    let (network, _) = apply_missingness(&sim.network, a.missing, a.missing_seed.unwrap_or(a.seed + 1000))?;
    let truth = GroundTruth { g: sim.g.clone(), z: Some(sim.z.clone()) };
    let mut data = write_dataset(&a.out, &network, &sim.attributes, Some(&truth))?;
    data.standardize = true;
    write(&a.out.join("scenario.json"), &to_json(&spec))?;
    let cfg = RunConfig {
        data,
        model: ModelConfig { k: spec.latent_dim(), h: a.h },
        priors: Default::default(),
        chain: Default::default(),
        postprocess: PostprocessConfig::default(),
        base_dir: PathBuf::new(),
    };
    write(&a.out.join("run.toml"), &cfg.to_toml()?)?;
    let stats = network_statistics(&network, Some(&sim.g), Some(sim.attributes.values()))?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    log::info!("dataset and run.toml written to {}", a.out.display());
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let (mut cfg, bundle) = load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.chain.seed = s;
    }
    if let Some(o) = a.out {
        cfg.data.output = std::env::current_dir()?.join(o);
    }
    if a.chains == 0 {
        bail!("--chains must be at least 1");
    }
    let hyper = cfg.hyperparameters()?;
    eprintln!("note: {H_REMINDER}");
    let out = cfg.output_dir();
    let reports = if a.chains == 1 {
        vec![fit_one(&cfg, &hyper, &bundle, &cfg.chain, &out)?]
    } else {
        (0..a.chains)
            .into_par_iter()
            .map(|c| {
                let mut chain_cfg = cfg.chain.clone();
                chain_cfg.seed = cfg.chain.seed + c as u64;
                fit_one(&cfg, &hyper, &bundle, &chain_cfg, &out.join(format!("chain_{}", c + 1)))
            })
            .collect::<Result<Vec<_>>>()?
    };
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(())
}

/// A stored run as a chain object (without pointwise values).
fn load_run(dir: &Path) -> Result<PosteriorChain> {
    let (table, meta): (_, ChainMeta) = read_chain_dir(dir)?;
    if table.draws.is_empty() {
        bail!("{} holds no draws", dir.display());
    }
    Ok(PosteriorChain { draws: table.draws, loglik: table.loglik, pointwise: None, meta })
}

pub fn cluster(a: ClusterArgs) -> Result<()> {
    let chain = load_run(&a.run)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<PartitionMethod>())
        .collect::<lpjmm::Result<Vec<_>>>()?;
    let opts = EstimatorOptions { max_groups: a.max_groups, ..EstimatorOptions::default() };
    let partitions = estimate_partitions(&chain, &methods, &opts)?;
    let truth = a.truth.as_deref().map(read_truth).transpose()?;
    let mut rows = Vec::new();
    for (m, p) in &partitions {
        let ari = match &truth {
            Some(t) => Some(adjusted_rand_index(p, &Partition::new(&t.g))?),
            None => None,
        };
        rows.push(serde_json::json!({ "method": m, "groups": p.n_groups(), "sizes": p.sizes(), "truth_ari": ari }));
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join(format!("partition_{m}.csv")), &lpjmm::io::partition_csv(p))?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(())
}

fn labels_from(path: Option<&Path>, bundle: &DatasetBundle) -> Result<Option<Vec<usize>>> {
    Ok(match path {
        Some(p) => Some(read_partition_csv(p)?.labels().to_vec()),
        None => bundle.truth.as_ref().map(|t| t.g.clone()),
    })
}

pub fn gof(a: GofArgs) -> Result<()> {
    let (mut cfg, bundle) = load(&a.config)?;
    cfg.postprocess.gof_stride = a.stride;
    cfg.postprocess.gof_seed = a.seed;
    let chain = load_run(&a.run)?;
    let labels = labels_from(a.labels.as_deref(), &bundle)?;
    let report = gof_for(&chain, &bundle, &cfg, labels.as_deref())?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("gof.csv"), &lpjmm::io::gof_csv(&report))?;
        write(&dir.join("gof.json"), &to_json(&report))?;
    }
    let observed = network_statistics(&bundle.network, labels.as_deref(), Some(bundle.attributes.values()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "replicates": report.replicates.len(),
            "means": report.means,
            "observed": observed.layers,
        }))?
    );
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let (_, bundle) = load(&a.config)?;
    let labels = labels_from(a.labels.as_deref(), &bundle)?;
    let stats = network_statistics(&bundle.network, labels.as_deref(), Some(bundle.raw_attributes.values()))?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

pub fn sweep_h(a: SweepArgs) -> Result<()> {
    let (mut cfg, bundle) = load(&a.config)?;
    if a.h.is_empty() || a.h.contains(&0) {
        bail!("--h needs positive values");
    }
    cfg.chain.store_pointwise = true;
    eprintln!("note: {H_REMINDER}");
    let mut table = String::from("h,waic");
    for m in &cfg.postprocess.methods {
        let _ = write!(table, ",groups_{m}");
        if bundle.truth.is_some() {
            let _ = write!(table, ",ari_{m}");
        }
    }
    table.push('\n');
    for &h in &a.h {
        let mut c = cfg.clone();
        c.model.h = h;
        c.priors.alpha = None;
        let hyper = c.hyperparameters()?;
        let report = fit_one(&c, &hyper, &bundle, &c.chain, &a.out.join(format!("h_{h}")))?;
        let _ = write!(table, "{h},{}", report.waic.map_or("NA".into(), |w| w.to_string()));
        for (i, (_, g)) in report.groups.iter().enumerate() {
            let _ = write!(table, ",{g}");
            if let Some((_, ari)) = report.truth_ari.get(i) {
                let _ = write!(table, ",{ari}");
            }
        }
        table.push('\n');
    }
    write(&a.out.join("sweep_h.csv"), &table)?;
    print!("{table}");
    Ok(())
}

pub fn waic(a: WaicArgs) -> Result<()> {
    let path = a.run.join("pointwise.csv");
    if !path.exists() {
        return Err(lpjmm::Error::Config(format!(
            "{} not found; refit with chain.store_pointwise = true",
            path.display()
        ))
        .into());
    }
    let w = compute_waic(&read_pointwise_csv(&path)?)?;
    println!("{}", serde_json::to_string_pretty(&w)?);
    Ok(())
}

pub fn pca(a: PcaArgs) -> Result<()> {
    let (headers, m) = read_columns(&a.input)?;
    let (scores, ve) = pca_first_component(&m)?;
    let x = Attributes::new(scores)?;
    write(&a.out, &lpjmm::io::attributes_csv(&x, &a.name))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({ "columns": headers, "variance_explained": ve }))?
    );
    Ok(())
}
