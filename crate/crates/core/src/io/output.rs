//! Result files of a fit. Numbers are written in shortest round-trip
//! decimal form, so reading a file and writing it again reproduces it byte
//! for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::data::write_file;
use crate::network::GofReport;
use crate::postprocess::{ChainSummary, Partition, PartitionMethod};
use crate::sampler::{ChainMeta, PosteriorChain};
use crate::State;

/// Stored draws as they appear in `chain.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTable {
    /// Sweep number of each draw.
    pub iters: Vec<usize>,
    pub loglik: Vec<f64>,
    pub draws: Vec<State>,
}

impl ChainTable {
    pub fn from_chain(chain: &PosteriorChain) -> Self {
        let c = &chain.meta.config;
        let start = c.n_adapt + c.n_burn;
        Self {
            iters: (1..=chain.len()).map(|d| start + d * c.thin).collect(),
            loglik: chain.loglik.clone(),
            draws: chain.draws.clone(),
        }
    }
}

fn push_num(s: &mut String, v: f64) {
    let _ = write!(s, ",{v}");
}

/// Renders draws with columns `iter, loglik, a_l, b_l, theta_l, beta,
/// sigma2, tau2, phi, omega_h, mu_h_k, kappa2_h, g_i, z_i_k`. Labels are
/// written 1-based.
pub fn chain_csv(table: &ChainTable) -> Result<String> {
    let first = table
        .draws
        .first()
        .ok_or_else(|| Error::invalid("cannot write an empty chain"))?;
    let (n, k, h, l) = (first.n_actors(), first.latent_dim(), first.n_groups(), first.n_layers());
    let mut s = String::from("iter,loglik");
    for name in ["a", "b", "theta"] {
        for j in 1..=l {
            let _ = write!(s, ",{name}_{j}");
        }
    }
    s.push_str(",beta,sigma2,tau2,phi");
    for j in 1..=h {
        let _ = write!(s, ",omega_{j}");
    }
    for j in 1..=h {
        for d in 1..=k {
            let _ = write!(s, ",mu_{j}_{d}");
        }
    }
    for j in 1..=h {
        let _ = write!(s, ",kappa2_{j}");
    }
    for i in 1..=n {
        let _ = write!(s, ",g_{i}");
    }
    for i in 1..=n {
        for d in 1..=k {
            let _ = write!(s, ",z_{i}_{d}");
        }
    }
    s.push('\n');
    for ((it, ll), st) in table.iters.iter().zip(&table.loglik).zip(&table.draws) {
        let _ = write!(s, "{it},{ll}");
        for v in st.a.iter().chain(&st.b).chain(&st.theta) {
            push_num(&mut s, *v);
        }
        for v in [st.beta, st.sigma2, st.tau2, st.phi] {
            push_num(&mut s, v);
        }
        for v in st.omega.iter().chain(st.mu.iter()).chain(&st.kappa2) {
            push_num(&mut s, *v);
        }
        for g in &st.g {
            let _ = write!(s, ",{}", g + 1);
        }
        for v in st.z.iter() {
            push_num(&mut s, *v);
        }
        s.push('\n');
    }
    Ok(s)
}

fn count_prefix(headers: &[String], prefix: &str, parts: usize) -> usize {
    headers
        .iter()
        .filter(|h| h.strip_prefix(prefix).is_some_and(|r| r.split('_').count() == parts))
        .count()
}

/// Parses the output of [`chain_csv`].
pub fn read_chain_csv(path: &Path) -> Result<ChainTable> {
    let (headers, rows) = read_raw(path)?;
    let l = count_prefix(&headers, "a_", 1);
    let h = count_prefix(&headers, "omega_", 1);
    let n = count_prefix(&headers, "g_", 1);
    let k = count_prefix(&headers, "z_", 2).checked_div(n).unwrap_or(0);
    let width = 2 + 3 * l + 4 + h * (k + 2) + n * (k + 1);
    if headers.len() != width || l == 0 || h == 0 || n == 0 || k == 0 {
        return Err(Error::parse(path, "header is not a chain table"));
    }
    let mut table = ChainTable {
        iters: Vec::new(),
        loglik: Vec::new(),
        draws: Vec::new(),
    };
    for (r, row) in rows.iter().enumerate() {
        let line = r + 2;
        let num = |c: usize| -> Result<f64> {
            row[c]
                .parse()
                .map_err(|_| Error::parse(path, format!("line {line}, column {}: `{}` is not a number", c + 1, row[c])))
        };
        let int = |c: usize| -> Result<usize> {
            row[c]
                .parse()
                .map_err(|_| Error::parse(path, format!("line {line}, column {}: `{}` is not an integer", c + 1, row[c])))
        };
        let mut c = 2;
        let mut take = |m: usize| -> Result<Vec<f64>> {
            let v = (c..c + m).map(num).collect::<Result<Vec<_>>>();
            c += m;
            v
        };
        let a = take(l)?;
        let b = take(l)?;
        let theta = take(l)?;
        let gp = take(4)?;
        let omega = take(h)?;
        let mu = take(h * k)?;
        let kappa2 = take(h)?;
        let g_start = 2 + 3 * l + 4 + h * (k + 2);
        let g = (g_start..g_start + n)
            .map(|c| int(c).and_then(|v| v.checked_sub(1).ok_or_else(|| Error::parse(path, format!("line {line}: label 0")))))
            .collect::<Result<Vec<_>>>()?;
        let z: Vec<f64> = (g_start + n..width).map(num).collect::<Result<_>>()?;
        let state = State {
            z: Array2::from_shape_vec((n, k), z).expect("width checked"),
            g,
            a,
            b,
            theta,
            beta: gp[0],
            sigma2: gp[1],
            tau2: gp[2],
            phi: gp[3],
            omega,
            mu: Array2::from_shape_vec((h, k), mu).expect("width checked"),
            kappa2,
        };
        state.validate().map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        table.iters.push(int(0)?);
        table.loglik.push(num(1)?);
        table.draws.push(state);
    }
    Ok(table)
}

/// Header plus string fields of every row; row lengths must match.
fn read_raw(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty file"))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (r, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(str::to_owned).collect();
        if row.len() != headers.len() {
            return Err(Error::parse(path, format!("line {}: {} fields, expected {}", r + 2, row.len(), headers.len())));
        }
        rows.push(row);
    }
    Ok((headers, rows))
}

pub fn loglik_csv(table: &ChainTable) -> String {
    let mut s = String::from("iter,loglik\n");
    for (it, ll) in table.iters.iter().zip(&table.loglik) {
        let _ = writeln!(s, "{it},{ll}");
    }
    s
}

/// `actor,group` with both 1-based.
pub fn partition_csv(p: &Partition) -> String {
    let mut s = String::from("actor,group\n");
    for (i, g) in p.labels().iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, g + 1);
    }
    s
}

pub fn read_partition_csv(path: &Path) -> Result<Partition> {
    let (headers, rows) = read_raw(path)?;
    if headers != ["actor", "group"] {
        return Err(Error::parse(path, "expected header `actor,group`"));
    }
    let mut labels = vec![None; rows.len()];
    for (r, row) in rows.iter().enumerate() {
        let bad = || Error::parse(path, format!("line {}: bad actor or group", r + 2));
        let a: usize = row[0].parse().map_err(|_| bad())?;
        let g: usize = row[1].parse().map_err(|_| bad())?;
        if a == 0 || a > rows.len() || g == 0 || labels[a - 1].is_some() {
            return Err(bad());
        }
        labels[a - 1] = Some(g - 1);
    }
    let labels: Vec<usize> = labels.into_iter().map(|v| v.expect("every actor seen")).collect();
    Ok(Partition::new(&labels))
}

/// `actor,z_1,..,z_K`.
pub fn positions_csv(z: &Array2<f64>) -> String {
    let mut s = String::from("actor");
    for d in 1..=z.ncols() {
        let _ = write!(s, ",z_{d}");
    }
    s.push('\n');
    for (i, row) in z.rows().into_iter().enumerate() {
        let _ = write!(s, "{}", i + 1);
        for v in row {
            push_num(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

pub fn read_positions_csv(path: &Path) -> Result<Array2<f64>> {
    let (headers, rows) = read_raw(path)?;
    let k = headers.len().saturating_sub(1);
    if k == 0 || headers[0] != "actor" {
        return Err(Error::parse(path, "expected header `actor,z_1,...`"));
    }
    let mut values = Vec::with_capacity(rows.len() * k);
    for (r, row) in rows.iter().enumerate() {
        if row[0].parse::<usize>().ok() != Some(r + 1) {
            return Err(Error::parse(path, format!("line {}: actors must be listed in order", r + 2)));
        }
        for f in &row[1..] {
            values.push(f.parse().map_err(|_| Error::parse(path, format!("line {}: `{f}` is not a number", r + 2)))?);
        }
    }
    Ok(Array2::from_shape_vec((rows.len(), k), values).expect("row lengths checked"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |v| v.to_string())
}

/// One row per replicate and layer; undefined statistics are `NA`.
pub fn gof_csv(report: &GofReport) -> String {
    let mut s = String::from("draw,layer,density,transitivity,assortativity_group,assortativity_attr\n");
    for rep in &report.replicates {
        for (l, st) in rep.layers.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                rep.draw + 1,
                l + 1,
                st.density,
                st.transitivity,
                opt(st.assortativity_group),
                opt(st.assortativity_attr)
            );
        }
    }
    s
}

/// Per-cell log-likelihoods, one row per stored draw.
pub fn pointwise_csv(pointwise: &[Vec<f64>]) -> String {
    let cells = pointwise.first().map_or(0, Vec::len);
    let mut s = String::from("draw");
    for c in 1..=cells {
        let _ = write!(s, ",cell_{c}");
    }
    s.push('\n');
    for (d, row) in pointwise.iter().enumerate() {
        let _ = write!(s, "{}", d + 1);
        for v in row {
            push_num(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

pub fn read_pointwise_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let (_, rows) = read_raw(path)?;
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            row[1..]
                .iter()
                .map(|f| f.parse().map_err(|_| Error::parse(path, format!("line {}: `{f}` is not a number", r + 2))))
                .collect()
        })
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance record of an output directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub data_fingerprint: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Recomputes every file hash and reports the first mismatch.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for e in &self.files {
            let path = dir.join(&e.file);
            let bytes = std::fs::read(&path).map_err(|err| Error::io(&path, err))?;
            if hex::encode(Sha256::digest(&bytes)) != e.sha256 {
                return Err(Error::parse(&path, "contents differ from the manifest"));
            }
        }
        Ok(())
    }
}

/// Everything `write_outputs` can emit; absent parts are skipped.
pub struct FitOutputs<'a> {
    pub chain: &'a PosteriorChain,
    pub summary: Option<&'a ChainSummary>,
    pub partitions: &'a [(PartitionMethod, Partition)],
    pub gof: Option<&'a GofReport>,
    pub positions: Option<&'a Array2<f64>>,
    pub config_hash: String,
    pub data_fingerprint: String,
    /// Extra named documents written verbatim (e.g. the resolved config).
    pub extra: Vec<(String, String)>,
}

/// Writes the result files into `dir` and finishes with `manifest.json`
/// listing each of them with its hash.
pub fn write_outputs(dir: &Path, out: &FitOutputs<'_>) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = ChainTable::from_chain(out.chain);
    let mut files: Vec<(String, String)> = Vec::new();
    if !table.draws.is_empty() {
        files.push(("chain.csv".into(), chain_csv(&table)?));
    }
    files.push(("loglik.csv".into(), loglik_csv(&table)));
    files.push(("chain_meta.json".into(), to_json(&out.chain.meta)));
    if let Some(s) = out.summary {
        files.push(("summary.json".into(), to_json(s)));
    }
    for (m, p) in out.partitions {
        files.push((format!("partition_{m}.csv"), partition_csv(p)));
    }
    if let Some(g) = out.gof {
        files.push(("gof.csv".into(), gof_csv(g)));
        files.push(("gof.json".into(), to_json(g)));
    }
    if let Some(z) = out.positions {
        files.push(("positions.csv".into(), positions_csv(z)));
    }
    if let Some(pw) = &out.chain.pointwise {
        files.push(("pointwise.csv".into(), pointwise_csv(pw)));
    }
    files.extend(out.extra.iter().cloned());

    let mut seen = HashMap::new();
    let mut entries = Vec::with_capacity(files.len());
    for (name, body) in &files {
        if seen.insert(name.clone(), ()).is_some() {
            return Err(Error::invalid(format!("output file {name} written twice")));
        }
        write_file(&dir.join(name), body)?;
        entries.push(ManifestEntry {
            file: name.clone(),
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
            bytes: body.len() as u64,
        });
    }
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: out.chain.meta.config.seed,
        config_hash: out.config_hash.clone(),
        data_fingerprint: out.data_fingerprint.clone(),
        files: entries,
    };
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    Ok(manifest)
}

/// Reads back the chain of an output directory.
pub fn read_chain_dir(dir: &Path) -> Result<(ChainTable, ChainMeta)> {
    let meta: ChainMeta = read_json(&dir.join("chain_meta.json"))?;
    let path = dir.join("chain.csv");
    let table = if path.exists() {
        read_chain_csv(&path)?
    } else {
        ChainTable {
            iters: Vec::new(),
            loglik: Vec::new(),
            draws: Vec::new(),
        }
    };
    Ok((table, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gof_replicates, simulate_dataset, GofOptions, ScenarioSpec};
    use crate::postprocess::{
        label_draws, point_estimate_partition, posterior_mean_positions, posterior_similarity, summarize_chain,
        EstimatorOptions,
    };
    use crate::sampler::{run_chain, ChainConfig};
    use crate::Hyper;

    fn small_fit(pointwise: bool) -> (PosteriorChain, crate::network::SimulatedDataset) {
        let mut spec = ScenarioSpec::two_layer(2);
        spec.n_actors = 12;
        let sim = simulate_dataset(&spec).unwrap();
        let cfg = ChainConfig {
            n_adapt: 20,
            n_burn: 20,
            n_keep: 30,
            thin: 3,
            store_pointwise: pointwise,
            ..ChainConfig::default()
        };
        let chain = run_chain(&sim.network, &sim.attributes, &Hyper::defaults(2, 3), &cfg, None).unwrap();
        (chain, sim)
    }

    fn reread(dir: &Path, name: &str) -> String {
        let path = dir.join(name);
        match name {
            "chain.csv" => chain_csv(&read_chain_csv(&path).unwrap()).unwrap(),
            "loglik.csv" => {
                let t = read_chain_csv(&dir.join("chain.csv")).unwrap();
                loglik_csv(&t)
            }
            "chain_meta.json" => to_json(&read_json::<ChainMeta>(&path).unwrap()),
            "summary.json" => to_json(&read_json::<ChainSummary>(&path).unwrap()),
            "gof.json" => to_json(&read_json::<GofReport>(&path).unwrap()),
            "gof.csv" => gof_csv(&read_json::<GofReport>(&dir.join("gof.json")).unwrap()),
            "positions.csv" => positions_csv(&read_positions_csv(&path).unwrap()),
            "pointwise.csv" => pointwise_csv(&read_pointwise_csv(&path).unwrap()),
            n if n.starts_with("partition_") => partition_csv(&read_partition_csv(&path).unwrap()),
            other => panic!("unexpected file {other}"),
        }
    }

    #[test]
    fn every_artifact_round_trips() {
        let (chain, sim) = small_fit(true);
        let draws = label_draws(&chain.draws);
        let psm = posterior_similarity(&draws).unwrap();
        let partitions: Vec<_> = [PartitionMethod::MaxPear, PartitionMethod::MinBinder]
            .into_iter()
            .map(|m| (m, point_estimate_partition(&draws, &psm, m, &EstimatorOptions::default()).unwrap()))
            .collect();
        let gof = gof_replicates(&chain.draws, &sim.attributes, Some(&sim.g), &GofOptions { stride: 2, ..Default::default() }).unwrap();
        let summary = summarize_chain(&chain.draws, 0.9).unwrap();
        let positions = posterior_mean_positions(&chain.draws, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_outputs(
            dir.path(),
            &FitOutputs {
                chain: &chain,
                summary: Some(&summary),
                partitions: &partitions,
                gof: Some(&gof),
                positions: Some(&positions),
                config_hash: "c".into(),
                data_fingerprint: "d".into(),
                extra: Vec::new(),
            },
        )
        .unwrap();
        let names: Vec<&str> = manifest.files.iter().map(|e| e.file.as_str()).collect();
        let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        on_disk.sort();
        let mut listed: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        listed.sort();
        assert_eq!(on_disk, listed);
        for name in &names {
            let original = std::fs::read_to_string(dir.path().join(name)).unwrap();
            assert_eq!(reread(dir.path(), name), original, "{name}");
        }
        manifest.verify(dir.path()).unwrap();
        let back: Manifest = read_json(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, manifest);

        let (table, meta) = read_chain_dir(dir.path()).unwrap();
        assert_eq!(table.draws, chain.draws);
        assert_eq!(table.loglik, chain.loglik);
        assert_eq!(table.iters, vec![43, 46, 49, 52, 55, 58, 61, 64, 67, 70]);
        assert_eq!(meta, chain.meta);

        std::fs::write(dir.path().join("positions.csv"), "tampered").unwrap();
        assert!(manifest.verify(dir.path()).is_err());
    }

    #[test]
    fn empty_gof_writes_header_only() {
        let (chain, sim) = small_fit(false);
        let gof = gof_replicates(&chain.draws, &sim.attributes, None, &GofOptions { stride: 50, ..Default::default() }).unwrap();
        assert!(gof.replicates.is_empty());
        let text = gof_csv(&gof);
        assert_eq!(text.lines().count(), 1);
        let dir = tempfile::tempdir().unwrap();
        let m = write_outputs(
            dir.path(),
            &FitOutputs {
                chain: &chain,
                summary: None,
                partitions: &[],
                gof: Some(&gof),
                positions: None,
                config_hash: String::new(),
                data_fingerprint: String::new(),
                extra: Vec::new(),
            },
        )
        .unwrap();
        assert!(m.files.iter().any(|e| e.file == "gof.csv"));
        assert!(!dir.path().join("pointwise.csv").exists());
    }

    #[test]
    fn malformed_chain_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("chain.csv");
        std::fs::write(&p, "iter,loglik\n1,2\n").unwrap();
        assert!(read_chain_csv(&p).is_err());
        let p = dir.path().join("partition.csv");
        std::fs::write(&p, "actor,group\n1,1\n1,2\n").unwrap();
        assert!(read_partition_csv(&p).is_err());
    }
}
