use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of one unordered actor pair in one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Absent,
    Present,
    Missing,
}

impl Cell {
    /// Edge value, or `None` for a missing cell.
    #[inline]
    pub fn value(self) -> Option<bool> {
        match self {
            Cell::Absent => Some(false),
            Cell::Present => Some(true),
            Cell::Missing => None,
        }
    }

    #[inline]
    pub fn is_missing(self) -> bool {
        self == Cell::Missing
    }

    #[inline]
    pub fn from_bool(edge: bool) -> Self {
        if edge {
            Cell::Present
        } else {
            Cell::Absent
        }
    }
}

/// Number of unordered pairs among `n` actors.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Row-major index of the unordered pair `{i, j}` in the strict upper
/// triangle. Caller guarantees `i != j` and both `< n`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// `N` actors observed over `L` binary undirected layers.
///
/// Only unordered pairs are stored, so symmetry holds by construction and
/// self-loops cannot be represented. Missing cells are kept explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiLayerNetwork {
    n_actors: usize,
    layers: Vec<Vec<Cell>>,
}

impl MultiLayerNetwork {
    /// All-absent network.
    pub fn empty(n_actors: usize, n_layers: usize) -> Self {
        Self::filled(n_actors, n_layers, Cell::Absent)
    }

    pub fn filled(n_actors: usize, n_layers: usize, cell: Cell) -> Self {
        Self {
            n_actors,
            layers: vec![vec![cell; pair_count(n_actors)]; n_layers],
        }
    }

    /// Builds a network from per-layer upper-triangle cell vectors.
    pub fn from_layers(n_actors: usize, layers: Vec<Vec<Cell>>) -> Result<Self> {
        let p = pair_count(n_actors);
        for (l, layer) in layers.iter().enumerate() {
            if layer.len() != p {
                return Err(Error::dim(format!(
                    "layer {} has {} cells, expected {p} for {n_actors} actors",
                    l + 1,
                    layer.len()
                )));
            }
        }
        Ok(Self { n_actors, layers })
    }

    #[inline]
    pub fn n_actors(&self) -> usize {
        self.n_actors
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn n_pairs(&self) -> usize {
        pair_count(self.n_actors)
    }

    #[inline]
    pub fn layer(&self, l: usize) -> &[Cell] {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Vec<Cell>] {
        &self.layers
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize) -> Cell {
        self.layers[l][pair_index(self.n_actors, i, j)]
    }

    /// Sets the cell for `{i, j}`; panics if `i == j` or out of range.
    pub fn set(&mut self, l: usize, i: usize, j: usize, cell: Cell) {
        assert!(i != j, "self-loops are not representable");
        assert!(i < self.n_actors && j < self.n_actors, "actor out of range");
        let p = pair_index(self.n_actors, i, j);
        self.layers[l][p] = cell;
    }

    #[inline]
    pub fn set_pair(&mut self, l: usize, pair: usize, cell: Cell) {
        self.layers[l][pair] = cell;
    }

    /// Iterates `(pair_index, i, j)` over unordered pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n_actors;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .enumerate()
            .map(|(p, (i, j))| (p, i, j))
    }

    pub fn observed_count(&self, l: usize) -> usize {
        self.layers[l].iter().filter(|c| !c.is_missing()).count()
    }

    pub fn missing_count(&self, l: usize) -> usize {
        self.layers[l].iter().filter(|c| c.is_missing()).count()
    }

    pub fn edge_count(&self, l: usize) -> usize {
        self.layers[l].iter().filter(|c| **c == Cell::Present).count()
    }

    pub fn has_missing(&self) -> bool {
        self.layers.iter().flatten().any(|c| c.is_missing())
    }

    /// Applies a permutation: actor `perm[i]` of the result is actor `i` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n_actors;
        assert_eq!(perm.len(), n);
        let mut out = Self::empty(n, self.n_layers());
        for l in 0..self.n_layers() {
            for (p, i, j) in self.pairs() {
                let q = pair_index(n, perm[i], perm[j]);
                out.layers[l][q] = self.layers[l][p];
            }
        }
        out
    }

    /// Dense symmetric adjacency of layer `l` with missing cells as `None`.
    pub fn dense_layer(&self, l: usize) -> Vec<Vec<Option<bool>>> {
        let n = self.n_actors;
        let mut m = vec![vec![Some(false); n]; n];
        for (p, i, j) in self.pairs() {
            let v = self.layers[l][p].value();
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_is_row_major_upper_triangle() {
        let n = 5;
        let mut expected = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), expected);
                assert_eq!(pair_index(n, j, i), expected);
                expected += 1;
            }
        }
        assert_eq!(expected, pair_count(n));
    }

    #[test]
    fn set_and_get_are_symmetric() {
        let mut net = MultiLayerNetwork::empty(4, 2);
        net.set(1, 3, 0, Cell::Present);
        net.set(0, 1, 2, Cell::Missing);
        assert_eq!(net.get(1, 0, 3), Cell::Present);
        assert_eq!(net.get(1, 3, 0), Cell::Present);
        assert_eq!(net.get(0, 2, 1), Cell::Missing);
        assert_eq!(net.edge_count(1), 1);
        assert_eq!(net.missing_count(0), 1);
        assert_eq!(net.observed_count(0), 5);
    }

    #[test]
    #[should_panic]
    fn self_loop_rejected() {
        MultiLayerNetwork::empty(3, 1).set(0, 1, 1, Cell::Present);
    }

    #[test]
    fn from_layers_checks_length() {
        assert!(MultiLayerNetwork::from_layers(4, vec![vec![Cell::Absent; 5]]).is_err());
        assert!(MultiLayerNetwork::from_layers(4, vec![vec![Cell::Absent; 6]]).is_ok());
    }

    #[test]
    fn permutation_moves_edges() {
        let mut net = MultiLayerNetwork::empty(3, 1);
        net.set(0, 0, 1, Cell::Present);
        let p = net.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 2, 0), Cell::Present);
        assert_eq!(p.edge_count(0), 1);
    }
}
