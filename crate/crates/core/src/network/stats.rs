use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, MultiLayerNetwork};

/// Undirected simple graph as adjacency lists, built from the present
/// cells of one layer. Missing cells count as non-edges here; callers that
/// care report the mask size alongside.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    pub fn from_layer(net: &MultiLayerNetwork, l: usize) -> Self {
        Self::from_pairs(net.n_actors(), net.layer(l).iter().map(|&c| c == Cell::Present))
    }

    /// From an edge indicator per unordered pair in row-major order.
    pub fn from_pairs(n: usize, present: impl IntoIterator<Item = bool>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut edges = 0;
        let mut it = present.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                if it.next().unwrap_or(false) {
                    adj[i].push(j);
                    adj[j].push(i);
                    edges += 1;
                }
            }
        }
        Self { n, adj, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// Edges over all unordered pairs.
pub fn density(g: &Graph) -> Result<f64> {
    if g.n < 2 {
        return Err(Error::invalid("density needs at least two actors"));
    }
    Ok(g.edges as f64 / (g.n * (g.n - 1) / 2) as f64)
}

/// Edges over observed pairs of one layer; the mask size is the caller's
/// to report.
pub fn observed_density(net: &MultiLayerNetwork, l: usize) -> Result<f64> {
    let obs = net.observed_count(l);
    if obs == 0 {
        return Err(Error::invalid("layer has no observed pairs"));
    }
    Ok(net.edge_count(l) as f64 / obs as f64)
}

/// Three times the triangles over connected triples; 0 without triples.
pub fn transitivity(g: &Graph) -> Result<f64> {
    if g.n < 3 {
        return Err(Error::invalid("transitivity needs at least three actors"));
    }
    let mut mark = vec![false; g.n];
    let mut closed = 0u64;
    let mut triples = 0u64;
    for v in 0..g.n {
        let nb = &g.adj[v];
        let d = nb.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &u in nb {
            mark[u] = true;
        }
        for &u in nb {
            closed += g.adj[u].iter().filter(|&&w| w > u && mark[w]).count() as u64;
        }
        for &u in nb {
            mark[u] = false;
        }
    }
    // Each triangle is closed once at each of its three vertices.
    Ok(if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    })
}

/// Newman's assortativity of a categorical label over edges; `None` when
/// undefined (no edges or a single group among edge endpoints).
pub fn categorical_assortativity(g: &Graph, labels: &[usize]) -> Result<Option<f64>> {
    if labels.len() != g.n {
        return Err(Error::dim(format!("{} labels for {} actors", labels.len(), g.n)));
    }
    if g.edges == 0 {
        return Ok(None);
    }
    let max = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut e = vec![0.0; max * max];
    let w = 1.0 / (2.0 * g.edges as f64);
    for (i, j) in g.edges() {
        e[labels[i] * max + labels[j]] += w;
        e[labels[j] * max + labels[i]] += w;
    }
    let trace: f64 = (0..max).map(|k| e[k * max + k]).sum();
    let aa: f64 = (0..max)
        .map(|k| {
            let a: f64 = (0..max).map(|m| e[k * max + m]).sum();
            a * a
        })
        .sum();
    if (1.0 - aa).abs() < 1e-15 {
        return Ok(None);
    }
    Ok(Some((trace - aa) / (1.0 - aa)))
}

/// Pearson correlation of endpoint values over edges, each edge counted in
/// both orientations; `None` when undefined.
pub fn numeric_assortativity(g: &Graph, values: &[f64]) -> Result<Option<f64>> {
    if values.len() != g.n {
        return Err(Error::dim(format!("{} values for {} actors", values.len(), g.n)));
    }
    if g.edges == 0 {
        return Ok(None);
    }
    let m = 2.0 * g.edges as f64;
    let mut mean = 0.0;
    for (i, j) in g.edges() {
        mean += values[i] + values[j];
    }
    mean /= m;
    let (mut cov, mut var) = (0.0, 0.0);
    for (i, j) in g.edges() {
        let (a, b) = (values[i] - mean, values[j] - mean);
        cov += 2.0 * a * b;
        var += a * a + b * b;
    }
    if var <= 1e-300 * m {
        return Ok(None);
    }
    Ok(Some(cov / var))
}

/// Every statistic for one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStatistics {
    pub density: f64,
    pub transitivity: f64,
    /// By the supplied partition.
    pub assortativity_group: Option<f64>,
    /// By the attribute.
    pub assortativity_attr: Option<f64>,
}

impl LayerStatistics {
    pub fn compute(g: &Graph, labels: Option<&[usize]>, attr: Option<&[f64]>) -> Result<Self> {
        Ok(Self {
            density: density(g)?,
            transitivity: transitivity(g)?,
            assortativity_group: match labels {
                Some(l) => categorical_assortativity(g, l)?,
                None => None,
            },
            assortativity_attr: match attr {
                Some(x) => numeric_assortativity(g, x)?,
                None => None,
            },
        })
    }
}

/// Statistics of every layer of an observed network, with the number of
/// masked pairs. Density is over observed pairs; the other statistics
/// treat masked pairs as absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkStatistics {
    pub layers: Vec<LayerStatistics>,
    pub missing_pairs: Vec<usize>,
}

pub fn network_statistics(
    net: &MultiLayerNetwork,
    labels: Option<&[usize]>,
    attr: Option<&[f64]>,
) -> Result<NetworkStatistics> {
    let mut layers = Vec::with_capacity(net.n_layers());
    for l in 0..net.n_layers() {
        let g = Graph::from_layer(net, l);
        let mut s = LayerStatistics::compute(&g, labels, attr)?;
        s.density = observed_density(net, l)?;
        layers.push(s);
    }
    Ok(NetworkStatistics {
        layers,
        missing_pairs: (0..net.n_layers()).map(|l| net.missing_count(l)).collect(),
    })
}
