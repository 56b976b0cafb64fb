use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::config::DataConfig;
use crate::model::{pair_count, pair_index, AttributeVector, Cell, MultiLayerNetwork};

/// Known generating values of a simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Group labels, 0-based.
    pub g: Vec<usize>,
    /// Latent positions, if the truth file carries them.
    pub z: Option<Array2<f64>>,
}

/// Everything a fit consumes, with a content hash for provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub network: MultiLayerNetwork,
    /// Attributes as the model sees them (standardized unless disabled).
    pub attributes: AttributeVector<f64>,
    /// Attributes as read from disk.
    pub raw_attributes: AttributeVector<f64>,
    pub truth: Option<GroundTruth>,
    pub fingerprint: String,
}

/// SHA-256 over the network and attribute contents.
pub fn dataset_fingerprint(net: &MultiLayerNetwork, x: &AttributeVector<f64>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(net).expect("plain data serializes"));
    h.update([0u8]);
    h.update(serde_json::to_vec(x).expect("plain data serializes"));
    hex::encode(h.finalize())
}

/// Reads the files a data section names, resolving relative paths
/// against `base`.
pub fn load_dataset(data: &DataConfig, base: &Path) -> Result<DatasetBundle> {
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let raw = read_attributes(&resolve(&data.attributes))?;
    let n = raw.len();
    let network = if let Some(edges) = &data.edges {
        let missing = data.missing.as_ref().map(|p| resolve(p));
        read_edge_list(&resolve(edges), missing.as_deref(), n, data.n_layers)?
    } else {
        if data.missing.is_some() {
            return Err(Error::Config("`missing` applies to edge-list input only; mark NA cells in the adjacency files".into()));
        }
        let mut layers = Vec::with_capacity(data.layers.len());
        for p in &data.layers {
            let path = resolve(p);
            let (size, cells) = read_adjacency(&path)?;
            if size != n {
                return Err(Error::dim(format!(
                    "{} describes {size} actors but the attribute file has {n}",
                    path.display()
                )));
            }
            layers.push(cells);
        }
        MultiLayerNetwork::from_layers(n, layers)?
    };
    let truth = match &data.truth {
        Some(p) => {
            let t = read_truth(&resolve(p))?;
            if t.g.len() != n {
                return Err(Error::dim(format!("truth file lists {} actors, expected {n}", t.g.len())));
            }
            Some(t)
        }
        None => None,
    };
    let attributes = if data.standardize { raw.standardized()? } else { raw.clone() };
    let fingerprint = dataset_fingerprint(&network, &attributes);
    Ok(DatasetBundle {
        network,
        attributes,
        raw_attributes: raw,
        truth,
        fingerprint,
    })
}

fn csv_reader(path: &Path, headers: bool) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> u64 {
    rec.position().map_or(fallback as u64, |p| p.line())
}

/// Parses an `N x N` adjacency matrix of `0`, `1` and `NA`, returning `N`
/// and the upper-triangle cells. Diagonal entries are ignored; a cell that
/// disagrees with its mirror is an error.
pub fn read_adjacency(path: &Path) -> Result<(usize, Vec<Cell>)> {
    let mut rdr = csv_reader(path, false)?;
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut lines = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec, r + 1);
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let cell = match field {
                "0" => Cell::Absent,
                "1" => Cell::Present,
                "NA" => Cell::Missing,
                other => {
                    return Err(Error::parse(
                        path,
                        format!("line {line}, column {}: `{other}` is not 0, 1 or NA", c + 1),
                    ))
                }
            };
            row.push(cell);
        }
        rows.push(row);
        lines.push(line);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::parse(path, "empty adjacency matrix"));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::parse(
                path,
                format!("line {}: {} columns in a matrix with {n} rows", lines[r], row.len()),
            ));
        }
    }
    let loops = (0..n).filter(|&i| rows[i][i] != Cell::Absent).count();
    if loops > 0 {
        log::warn!("{}: ignoring {loops} non-zero diagonal entries", path.display());
    }
    let mut cells = vec![Cell::Absent; pair_count(n)];
    let mut conflicts = String::new();
    let mut n_conflicts = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (u, v) = (rows[i][j], rows[j][i]);
            if u != v {
                n_conflicts += 1;
                if n_conflicts <= 10 {
                    let _ = write!(
                        conflicts,
                        "; line {} column {} is {} but line {} column {} is {}",
                        lines[i],
                        j + 1,
                        cell_text(u),
                        lines[j],
                        i + 1,
                        cell_text(v)
                    );
                }
            }
            cells[pair_index(n, i, j)] = u;
        }
    }
    if n_conflicts > 0 {
        return Err(Error::parse(
            path,
            format!("{n_conflicts} asymmetric entries{conflicts}"),
        ));
    }
    Ok((n, cells))
}

fn cell_text(c: Cell) -> &'static str {
    match c {
        Cell::Absent => "0",
        Cell::Present => "1",
        Cell::Missing => "NA",
    }
}

/// Reads `i,j[,layer]` rows (1-based); a non-numeric first row is taken as
/// a header.
fn read_pairs(path: &Path, n: usize) -> Result<Vec<(usize, usize, usize, u64)>> {
    let mut rdr = csv_reader(path, false)?;
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec, r + 1);
        if r == 0 && rec.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
            continue;
        }
        if rec.len() < 2 || rec.len() > 3 {
            return Err(Error::parse(path, format!("line {line}: expected `i,j` or `i,j,layer`")));
        }
        let field = |c: usize| -> Result<usize> {
            rec[c].parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(|| {
                Error::parse(path, format!("line {line}, column {}: `{}` is not a positive integer", c + 1, &rec[c]))
            })
        };
        let (i, j) = (field(0)?, field(1)?);
        let layer = if rec.len() == 3 { field(2)? } else { 1 };
        for (c, v) in [(1, i), (2, j)] {
            if v > n {
                return Err(Error::parse(path, format!("line {line}, column {c}: actor {v} exceeds {n}")));
            }
        }
        if i == j {
            log::warn!("{}: line {line}: ignoring self-loop on actor {i}", path.display());
            continue;
        }
        out.push((i - 1, j - 1, layer - 1, line));
    }
    Ok(out)
}

/// Builds a network from an edge list and an optional list of pairs with
/// unknown status. Unlisted pairs are absent.
pub fn read_edge_list(
    edges: &Path,
    missing: Option<&Path>,
    n_actors: usize,
    n_layers: Option<usize>,
) -> Result<MultiLayerNetwork> {
    let present = read_pairs(edges, n_actors)?;
    let absent = match missing {
        Some(p) => read_pairs(p, n_actors)?,
        None => Vec::new(),
    };
    let seen = present.iter().chain(&absent).map(|e| e.2 + 1).max().unwrap_or(1);
    let n_layers = n_layers.unwrap_or(seen);
    if seen > n_layers {
        return Err(Error::dim(format!("edge list refers to layer {seen} of {n_layers}")));
    }
    let mut net = MultiLayerNetwork::empty(n_actors, n_layers);
    for &(i, j, l, _) in &present {
        net.set(l, i, j, Cell::Present);
    }
    if let Some(p) = missing {
        for &(i, j, l, line) in &absent {
            if net.get(l, i, j) == Cell::Present {
                return Err(Error::parse(
                    p,
                    format!("line {line}: pair ({}, {}) in layer {} is also listed as an edge", i + 1, j + 1, l + 1),
                ));
            }
            net.set(l, i, j, Cell::Missing);
        }
    }
    Ok(net)
}

/// Reads a headed CSV of numeric columns.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv_reader(path, true)?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let p = headers.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = line_of(&rec, r + 2);
        if rec.len() != p {
            return Err(Error::parse(path, format!("line {line}: {} fields, expected {p}", rec.len())));
        }
        for (c, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::parse(path, format!("line {line}, column {}: `{f}` is not a finite number", c + 1))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let m = Array2::from_shape_vec((rows, p), values).expect("row lengths checked");
    Ok((headers, m))
}

/// Reads a one-column attribute file with a header.
pub fn read_attributes(path: &Path) -> Result<AttributeVector<f64>> {
    let (headers, m) = read_columns(path)?;
    if headers.len() != 1 {
        return Err(Error::parse(path, format!("expected one attribute column, found {}", headers.len())));
    }
    AttributeVector::new(m.column(0).to_vec())
}

/// Reads `actor,group[,z_1,..,z_K]` with 1-based actors and groups.
pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let (headers, m) = read_columns(path)?;
    if headers.len() < 2 || headers[0] != "actor" || headers[1] != "group" {
        return Err(Error::parse(path, "expected header `actor,group[,z_1,...]`"));
    }
    let n = m.nrows();
    let mut g = vec![0; n];
    let mut filled = vec![false; n];
    for r in 0..n {
        let (a, h) = (m[[r, 0]], m[[r, 1]]);
        let ok = |v: f64, hi: f64| v.fract() == 0.0 && v >= 1.0 && v <= hi;
        if !ok(a, n as f64) || !ok(h, f64::MAX) || filled[a as usize - 1] {
            return Err(Error::parse(path, format!("line {}: bad or repeated actor/group", r + 2)));
        }
        filled[a as usize - 1] = true;
        g[a as usize - 1] = h as usize - 1;
    }
    let z = (headers.len() > 2).then(|| {
        let k = headers.len() - 2;
        let mut z = Array2::zeros((n, k));
        for r in 0..n {
            let i = m[[r, 0]] as usize - 1;
            for d in 0..k {
                z[[i, d]] = m[[r, 2 + d]];
            }
        }
        z
    });
    Ok(GroundTruth { g, z })
}

/// Renders one layer as an adjacency matrix.
pub fn adjacency_csv(net: &MultiLayerNetwork, layer: usize) -> String {
    let n = net.n_actors();
    let mut s = String::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                s.push(',');
            }
            s.push_str(if i == j { "0" } else { cell_text(net.get(layer, i, j)) });
        }
        s.push('\n');
    }
    s
}

pub fn attributes_csv(x: &AttributeVector<f64>, name: &str) -> String {
    let mut s = format!("{name}\n");
    for v in x.values() {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn truth_csv(truth: &GroundTruth) -> String {
    let k = truth.z.as_ref().map_or(0, |z| z.ncols());
    let mut s = String::from("actor,group");
    for d in 0..k {
        let _ = write!(s, ",z_{}", d + 1);
    }
    s.push('\n');
    for (i, g) in truth.g.iter().enumerate() {
        let _ = write!(s, "{},{}", i + 1, g + 1);
        if let Some(z) = &truth.z {
            for d in 0..k {
                let _ = write!(s, ",{}", z[[i, d]]);
            }
        }
        s.push('\n');
    }
    s
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `layer_<l>.csv`, `attributes.csv` and optionally `truth.csv`
/// into `dir`, returning a data section that reads them back.
pub fn write_dataset(
    dir: &Path,
    net: &MultiLayerNetwork,
    x: &AttributeVector<f64>,
    truth: Option<&GroundTruth>,
) -> Result<DataConfig> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::new();
    for l in 0..net.n_layers() {
        let name = PathBuf::from(format!("layer_{}.csv", l + 1));
        write_file(&dir.join(&name), &adjacency_csv(net, l))?;
        layers.push(name);
    }
    write_file(&dir.join("attributes.csv"), &attributes_csv(x, "x"))?;
    let truth_path = match truth {
        Some(t) => {
            write_file(&dir.join("truth.csv"), &truth_csv(t))?;
            Some(PathBuf::from("truth.csv"))
        }
        None => None,
    };
    Ok(DataConfig {
        layers,
        attributes: PathBuf::from("attributes.csv"),
        truth: truth_path,
        standardize: false,
        output: PathBuf::from("out"),
        ..DataConfig::default()
    })
}
