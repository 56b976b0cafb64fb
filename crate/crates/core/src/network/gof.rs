use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simulate::{simulate_attributes, simulate_network};
use super::stats::{Graph, LayerStatistics};
use crate::error::{Error, Result};
use crate::model::AttributeVector;
use crate::State;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    /// Every `stride`-th stored draw is replicated.
    pub stride: usize,
    /// Replicate `r` (draw index `d`) uses seed `seed + d`.
    pub seed: u64,
    /// Also redraw `x` from the attribute process at each draw.
    pub regenerate_x: bool,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self {
            stride: 10,
            seed: 1,
            regenerate_x: false,
        }
    }
}

/// Statistics of one replicate network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    /// Zero-based index of the stored draw.
    pub draw: usize,
    pub layers: Vec<LayerStatistics>,
}

/// Mean of each statistic over replicates; `None` if undefined in every
/// replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticMeans {
    pub density: Option<f64>,
    pub transitivity: Option<f64>,
    pub assortativity_group: Option<f64>,
    pub assortativity_attr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub stride: usize,
    pub n_layers: usize,
    pub replicates: Vec<Replicate>,
    /// Per layer.
    pub means: Vec<StatisticMeans>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0usize);
    for v in values.flatten() {
        s += v;
        c += 1;
    }
    (c > 0).then(|| s / c as f64)
}

impl GofReport {
    pub fn new(stride: usize, n_layers: usize, replicates: Vec<Replicate>) -> Self {
        let means = (0..n_layers)
            .map(|l| {
                let col = |f: fn(&LayerStatistics) -> Option<f64>| mean_of(replicates.iter().map(|r| f(&r.layers[l])));
                StatisticMeans {
                    density: col(|s| Some(s.density)),
                    transitivity: col(|s| Some(s.transitivity)),
                    assortativity_group: col(|s| s.assortativity_group),
                    assortativity_attr: col(|s| s.assortativity_attr),
                }
            })
            .collect();
        Self {
            stride,
            n_layers,
            replicates,
            means,
        }
    }

    /// Values of one statistic in one layer across replicates, skipping
    /// undefined ones.
    pub fn values(&self, layer: usize, stat: fn(&LayerStatistics) -> Option<f64>) -> Vec<f64> {
        self.replicates.iter().filter_map(|r| stat(&r.layers[layer])).collect()
    }
}

/// Posterior-predictive replicates: for draws `stride - 1`, `2 stride - 1`,
/// ..., simulates a complete network at that draw's parameters (and `x`
/// unless regenerated) and computes every statistic. Group assortativity
/// uses `labels` when given.
pub fn gof_replicates(
    draws: &[State],
    x: &AttributeVector<f64>,
    labels: Option<&[usize]>,
    opts: &GofOptions,
) -> Result<GofReport> {
    let first = draws.first().ok_or_else(|| Error::invalid("empty chain"))?;
    if opts.stride == 0 {
        return Err(Error::Config("GoF stride must be at least 1".into()));
    }
    if x.len() != first.n_actors() {
        return Err(Error::dim(format!("{} attributes for {} actors", x.len(), first.n_actors())));
    }
    let n_layers = first.n_layers();
    let picks: Vec<usize> = (1..=draws.len() / opts.stride).map(|r| r * opts.stride - 1).collect();
    let replicates = picks
        .par_iter()
        .map(|&d| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(d as u64));
            let state = &draws[d];
            let xr = if opts.regenerate_x {
                simulate_attributes(&mut rng, state)?
            } else {
                x.clone()
            };
            let net = simulate_network(&mut rng, state, &xr)?;
            let layers = (0..n_layers)
                .map(|l| LayerStatistics::compute(&Graph::from_layer(&net, l), labels, Some(xr.values())))
                .collect::<Result<Vec<_>>>()?;
            Ok(Replicate { draw: d, layers })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GofReport::new(opts.stride, n_layers, replicates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{simulate_dataset, ScenarioSpec};
    use crate::testutil::state_with_z;

    #[test]
    fn saturated_predictor_gives_full_density() {
        let mut s = state_with_z(ndarray::Array2::from_shape_fn((6, 2), |(i, j)| (i + j) as f64));
        s.a = vec![40.0];
        let x = AttributeVector::new(vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let draws = vec![s; 35];
        let r = gof_replicates(&draws, &x, None, &GofOptions::default()).unwrap();
        assert_eq!(r.replicates.len(), 3);
        assert_eq!(r.replicates.iter().map(|r| r.draw).collect::<Vec<_>>(), vec![9, 19, 29]);
        assert!(r.replicates.iter().all(|rep| rep.layers[0].density == 1.0));
        assert_eq!(r.means[0].density, Some(1.0));
        assert_eq!(r.means[0].assortativity_group, None);
    }

    #[test]
    fn stride_larger_than_chain_is_empty() {
        let s = state_with_z(ndarray::Array2::zeros((4, 1)));
        let x = AttributeVector::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = gof_replicates(&[s], &x, None, &GofOptions::default()).unwrap();
        assert!(r.replicates.is_empty());
        assert_eq!(r.means[0].density, None);
        assert!(gof_replicates(&[], &x, None, &GofOptions::default()).is_err());
    }

    #[test]
    fn deterministic_and_order_stable() {
        let sim = simulate_dataset(&ScenarioSpec::single_layer(2)).unwrap();
        let draws = vec![sim.truth.clone(); 40];
        let opts = GofOptions {
            stride: 2,
            seed: 5,
            regenerate_x: true,
        };
        let a = gof_replicates(&draws, &sim.attributes, Some(&sim.g), &opts).unwrap();
        let b = gof_replicates(&draws, &sim.attributes, Some(&sim.g), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates.len(), 20);
    }

    #[test]
    fn truth_lies_inside_replicate_band() {
        let sim = simulate_dataset(&ScenarioSpec::single_layer(8)).unwrap();
        let draws = vec![sim.truth.clone(); 2000];
        let r = gof_replicates(&draws, &sim.attributes, Some(&sim.g), &GofOptions::default()).unwrap();
        let g = Graph::from_layer(&sim.network, 0);
        let obs = LayerStatistics::compute(&g, Some(&sim.g), Some(sim.attributes.values())).unwrap();
        let checks: [(f64, fn(&LayerStatistics) -> Option<f64>); 4] = [
            (obs.density, |s| Some(s.density)),
            (obs.transitivity, |s| Some(s.transitivity)),
            (obs.assortativity_group.unwrap(), |s| s.assortativity_group),
            (obs.assortativity_attr.unwrap(), |s| s.assortativity_attr),
        ];
        for (truth, f) in checks {
            let mut v = r.values(0, f);
            v.sort_by(f64::total_cmp);
            let lo = crate::postprocess::quantile(&v, 0.025);
            let hi = crate::postprocess::quantile(&v, 0.975);
            assert!(lo <= truth && truth <= hi, "{truth} outside ({lo}, {hi})");
        }
    }
}
