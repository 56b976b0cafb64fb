use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::linalg::Cholesky;
use crate::model::{gp_covariance, normal_cdf, AttributeVector, Cell, MultiLayerNetwork};
use crate::State;

/// Edge-model parameters of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

/// Full generative specification of a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_actors: usize,
    pub omega: Vec<f64>,
    /// Component means, one `K`-vector per component.
    pub mu: Vec<Vec<f64>>,
    pub kappa2: Vec<f64>,
    pub beta: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub phi: f64,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

/// Five equally weighted components centred on a regular pentagon.
fn pentagon(radius: f64) -> Vec<Vec<f64>> {
    (0..5)
        .map(|h| {
            let t = std::f64::consts::TAU * h as f64 / 5.0;
            vec![radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

impl ScenarioSpec {
    /// Single-layer benchmark: `N = 100`, five groups, `a = 5`, `b = -2`,
    /// `theta = 2.72`, `phi = 0.5`, `tau2 = 0.3`, `sigma2 = 1`, `beta = 0`.
    pub fn single_layer(seed: u64) -> Self {
        Self {
            n_actors: 100,
            omega: vec![0.2; 5],
            mu: pentagon(1.9),
            kappa2: vec![0.5; 5],
            beta: 0.0,
            sigma2: 1.0,
            tau2: 0.3,
            phi: 0.5,
            layers: vec![LayerSpec {
                a: 5.0,
                b: -2.0,
                theta: 2.72,
            }],
            seed,
        }
    }

    /// The single-layer benchmark plus a second layer with `a = 3`, `b = 1`,
    /// `theta = 4`.
    pub fn two_layer(seed: u64) -> Self {
        let mut s = Self::single_layer(seed);
        s.layers.push(LayerSpec {
            a: 3.0,
            b: 1.0,
            theta: 4.0,
        });
        s
    }

    /// Well-separated groups used for the missing-edge study: `a = 1`,
    /// `b = 3.5`, `theta = 1.25`, `phi = 0.3`, `tau2 = 0.2`, `sigma2 = 1`.
    pub fn separated(seed: u64) -> Self {
        Self {
            n_actors: 100,
            omega: vec![0.2; 5],
            mu: pentagon(10.5),
            kappa2: vec![4.5; 5],
            beta: 0.0,
            sigma2: 1.0,
            tau2: 0.2,
            phi: 0.3,
            layers: vec![LayerSpec {
                a: 1.0,
                b: 3.5,
                theta: 1.25,
            }],
            seed,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.first().map_or(0, Vec::len)
    }

    pub fn n_groups(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.omega.len();
        let k = self.latent_dim();
        if self.n_actors < 2 || h == 0 || k == 0 || self.layers.is_empty() {
            return Err(Error::Config("scenario needs N >= 2, H >= 1, K >= 1 and one layer".into()));
        }
        if self.mu.len() != h || self.mu.iter().any(|m| m.len() != k) || self.kappa2.len() != h {
            return Err(Error::Config("mixture components have inconsistent shapes".into()));
        }
        if self.omega.iter().any(|&w| !(w > 0.0)) || (self.omega.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("omega must be positive and sum to 1".into()));
        }
        let positive = self.kappa2.iter().chain([&self.sigma2, &self.tau2]).all(|&v| v > 0.0 && v.is_finite());
        if !positive || self.phi < 0.0 || self.layers.iter().any(|l| !(l.theta > 0.0)) {
            return Err(Error::Config("variances and theta must be positive, phi non-negative".into()));
        }
        Ok(())
    }

    /// The generating parameters as a model state around given `z`, `g`.
    pub fn state(&self, z: Array2<f64>, g: Vec<usize>) -> State {
        let h = self.n_groups();
        let k = self.latent_dim();
        State {
            z,
            g,
            a: self.layers.iter().map(|l| l.a).collect(),
            b: self.layers.iter().map(|l| l.b).collect(),
            theta: self.layers.iter().map(|l| l.theta).collect(),
            beta: self.beta,
            sigma2: self.sigma2,
            tau2: self.tau2,
            phi: self.phi,
            omega: self.omega.clone(),
            mu: Array2::from_shape_fn((h, k), |(c, d)| self.mu[c][d]),
            kappa2: self.kappa2.clone(),
        }
    }
}

/// A synthetic dataset with its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub network: MultiLayerNetwork,
    pub attributes: AttributeVector<f64>,
    pub z: Array2<f64>,
    /// Zero-based true labels.
    pub g: Vec<usize>,
    /// Generating parameters with the true `z` and `g`.
    pub truth: State,
}

/// Draws labels, positions, attributes and edges, in that order, from one
/// stream seeded by `spec.seed`.
pub fn simulate_dataset(spec: &ScenarioSpec) -> Result<SimulatedDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_actors;
    let k = spec.latent_dim();
    let g: Vec<usize> = (0..n).map(|_| categorical(&mut rng, &spec.omega)).collect();
    let mut z = Array2::zeros((n, k));
    for i in 0..n {
        let sd = spec.kappa2[g[i]].sqrt();
        for d in 0..k {
            let e: f64 = StandardNormal.sample(&mut rng);
            z[[i, d]] = spec.mu[g[i]][d] + sd * e;
        }
    }
    let truth = spec.state(z.clone(), g.clone());
    let attributes = simulate_attributes(&mut rng, &truth)?;
    let network = simulate_network(&mut rng, &truth, &attributes)?;
    Ok(SimulatedDataset {
        network,
        attributes,
        z,
        g,
        truth,
    })
}

fn categorical<R: Rng + ?Sized>(rng: &mut R, w: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &p) in w.iter().enumerate() {
        acc += p;
        if u < acc {
            return c;
        }
    }
    w.len() - 1
}

/// `x ~ N(beta 1, sigma2 M(z, phi) + tau2 I)` at the state.
pub fn simulate_attributes<R: Rng + ?Sized>(rng: &mut R, state: &State) -> Result<AttributeVector<f64>> {
    let cov = gp_covariance(&state.z, state.phi, state.sigma2, state.tau2)?;
    let chol = Cholesky::new(&cov)?;
    let n = state.n_actors();
    let e: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let l = chol.factor();
    let x = (0..n)
        .map(|i| state.beta + (0..=i).map(|j| l[[i, j]] * e[j]).sum::<f64>())
        .collect();
    AttributeVector::new(x)
}

/// A complete network with every pair drawn `Bernoulli(Phi(eta))`, layer by
/// layer in row-major pair order.
pub fn simulate_network<R: Rng + ?Sized>(
    rng: &mut R,
    state: &State,
    x: &AttributeVector<f64>,
) -> Result<MultiLayerNetwork> {
    let n = state.n_actors();
    if x.len() != n {
        return Err(Error::dim(format!("{} attributes for {n} actors", x.len())));
    }
    let l = state.n_layers();
    let mut net = MultiLayerNetwork::empty(n, l);
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dist.push(((x.get(i) - x.get(j)).abs(), state.distance(i, j)));
        }
    }
    for layer in 0..l {
        for (p, &(dx, dz)) in dist.iter().enumerate() {
            let eta = state.a[layer] + state.b[layer] * dx - state.theta[layer] * dz;
            let u: f64 = rng.random();
            net.set_pair(layer, p, Cell::from_bool(u < normal_cdf(eta)));
        }
    }
    Ok(net)
}

/// Masks exactly `round(fraction * pairs)` uniformly chosen pairs in each
/// layer, independently per layer. Returns the masked network and the
/// masked pair indices of each layer (sorted); the input keeps the values.
pub fn apply_missingness(
    net: &MultiLayerNetwork,
    fraction: f64,
    seed: u64,
) -> Result<(MultiLayerNetwork, Vec<Vec<usize>>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("missing fraction {fraction} outside [0, 1)")));
    }
    let pairs = net.n_pairs();
    let count = (fraction * pairs as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = net.clone();
    let mut masks = Vec::with_capacity(net.n_layers());
    for l in 0..net.n_layers() {
        let mut chosen = sample(&mut rng, pairs, count).into_vec();
        chosen.sort_unstable();
        for &p in &chosen {
            out.set_pair(l, p, Cell::Missing);
        }
        masks.push(chosen);
    }
    Ok((out, masks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{density, Graph};

    #[test]
    fn seeded_simulation_repeats() {
        let a = simulate_dataset(&ScenarioSpec::single_layer(3)).unwrap();
        let b = simulate_dataset(&ScenarioSpec::single_layer(3)).unwrap();
        assert_eq!(a, b);
        let c = simulate_dataset(&ScenarioSpec::single_layer(4)).unwrap();
        assert_ne!(a.network, c.network);
        assert!(!a.network.has_missing());
    }

    #[test]
    fn benchmark_density_near_reference() {
        let mut ds = Vec::new();
        for seed in 0..10 {
            let sim = simulate_dataset(&ScenarioSpec::single_layer(seed)).unwrap();
            ds.push(density(&Graph::from_layer(&sim.network, 0)).unwrap());
        }
        let mean = ds.iter().sum::<f64>() / ds.len() as f64;
        assert!((mean - 0.1531).abs() < 0.05, "{mean}");
    }

    #[test]
    fn flat_predictor_density_is_phi_a() {
        let mut spec = ScenarioSpec::single_layer(11);
        spec.n_actors = 200;
        spec.layers = vec![LayerSpec {
            a: 0.4,
            b: 0.0,
            theta: 1e-12,
        }];
        let sim = simulate_dataset(&spec).unwrap();
        let d = density(&Graph::from_layer(&sim.network, 0)).unwrap();
        let p = normal_cdf(0.4);
        let m = sim.network.n_pairs() as f64;
        let se = (p * (1.0 - p) / m).sqrt();
        assert!((d - p).abs() < 3.0 * se, "{d} vs {p}");
    }

    #[test]
    fn density_self_consistency_over_seeds() {
        // Empirical density against the mean of Phi(eta) at the same draws.
        let mut diffs = Vec::new();
        for seed in 0..30 {
            let sim = simulate_dataset(&ScenarioSpec::single_layer(100 + seed)).unwrap();
            let t = &sim.truth;
            let n = t.n_actors();
            let mut expected = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let eta = t.a[0] + t.b[0] * (sim.attributes.get(i) - sim.attributes.get(j)).abs()
                        - t.theta[0] * t.distance(i, j);
                    expected += normal_cdf(eta);
                }
            }
            expected /= sim.network.n_pairs() as f64;
            diffs.push(density(&Graph::from_layer(&sim.network, 0)).unwrap() - expected);
        }
        let m = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
        assert!(m.abs() < 3.0 * sd / (diffs.len() as f64).sqrt());
    }

    #[test]
    fn missingness_counts_and_determinism() {
        let sim = simulate_dataset(&ScenarioSpec::two_layer(5)).unwrap();
        let (masked, idx) = apply_missingness(&sim.network, 0.5, 9).unwrap();
        assert_eq!(idx[0].len(), 2475);
        assert_eq!(masked.missing_count(0), 2475);
        assert_eq!(masked.missing_count(1), 2475);
        assert_ne!(idx[0], idx[1]);
        let (again, _) = apply_missingness(&sim.network, 0.5, 9).unwrap();
        assert_eq!(masked, again);
        let (same, none) = apply_missingness(&sim.network, 0.0, 9).unwrap();
        assert_eq!(same, sim.network);
        assert!(none.iter().all(Vec::is_empty));
        assert!(apply_missingness(&sim.network, 1.0, 9).is_err());
        // Original values are recoverable from the unmasked input.
        for &p in &idx[0] {
            assert!(!sim.network.layer(0)[p].is_missing());
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = ScenarioSpec::single_layer(1);
        s.omega = vec![0.5, 0.5, 0.0, 0.0, 0.0];
        assert!(simulate_dataset(&s).is_err());
        let mut s = ScenarioSpec::single_layer(1);
        s.kappa2.pop();
        assert!(simulate_dataset(&s).is_err());
    }
}
