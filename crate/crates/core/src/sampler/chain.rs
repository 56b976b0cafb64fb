use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::engine::{Counter, Counters, FastPathAudit, Sampler, Scales};
use super::{initial_state, ChainConfig, ChainRng};
use crate::error::{Error, Result};
use crate::model::{AttributeVector, MultiLayerNetwork};
use crate::{Hyper, State};

/// Sweeps per adaptation batch.
const ADAPT_BATCH: usize = 50;

/// Acceptance rates of the Metropolis blocks after adaptation (counters
/// restart when adaptation ends).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    /// Mean over actors.
    pub z: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Per layer.
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub tau2: f64,
    pub phi: f64,
    pub dilation: f64,
}

impl AcceptanceReport {
    fn from_counters(c: &Counters) -> Self {
        let z: Vec<f64> = c.z.iter().map(Counter::rate).filter(|r| r.is_finite()).collect();
        let (mean, lo, hi) = if z.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                z.iter().sum::<f64>() / z.len() as f64,
                z.iter().copied().fold(f64::INFINITY, f64::min),
                z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        Self {
            z: mean,
            z_min: lo,
            z_max: hi,
            theta: c.theta.iter().map(Counter::rate).collect(),
            sigma2: c.sigma2.rate(),
            tau2: c.tau2.rate(),
            phi: c.phi.rate(),
            dilation: c.dilation.rate(),
        }
    }
}

/// Run metadata stored alongside the draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub config: ChainConfig,
    /// SHA-256 of the network, attributes and hyperparameters.
    pub fingerprint: String,
    pub acceptance: AcceptanceReport,
    /// Adapted `z` scales per actor.
    pub z_steps: Vec<f64>,
    /// Adapted `theta` scales per layer.
    pub theta_steps: Vec<f64>,
    pub sigma2_step: f64,
    pub tau2_step: f64,
    pub phi_step: f64,
    pub dilation_step: f64,
    /// Pair indices of the missing cells of each layer.
    pub missing_cells: Vec<Vec<usize>>,
    /// Posterior mean of the imputed value of each missing cell, aligned
    /// with `missing_cells`.
    pub missing_edge_prob: Vec<Vec<f64>>,
    pub audit: Option<FastPathAudit>,
}

/// Thinned output of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub draws: Vec<State>,
    /// Data log-likelihood (edges plus attributes) of each draw.
    pub loglik: Vec<f64>,
    /// Per observed edge cell, layer-major, for each draw. Present when
    /// `store_pointwise` is set.
    pub pointwise: Option<Vec<Vec<f64>>>,
    pub meta: ChainMeta,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Everything needed to continue a run bit-exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    config: ChainConfig,
    fingerprint: String,
    /// Completed sweeps.
    iteration: usize,
    state: State,
    rng: ChainRng,
    scales: Scales,
    counters: Counters,
    audit: Option<FastPathAudit>,
    draws: Vec<State>,
    loglik: Vec<f64>,
    pointwise: Option<Vec<Vec<f64>>>,
    missing_sum: Vec<Vec<u64>>,
}

impl Checkpoint {
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Numerical(format!("cannot serialize checkpoint: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("<checkpoint>", e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// SHA-256 (hex) of the serialized network, attributes and hyperparameters.
pub fn data_fingerprint(net: &MultiLayerNetwork, x: &AttributeVector<f64>, hyper: &Hyper) -> String {
    let mut h = Sha256::new();
    for part in [
        serde_json::to_vec(net),
        serde_json::to_vec(x),
        serde_json::to_vec(hyper),
    ] {
        h.update(part.expect("plain data serializes"));
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

struct Run<'a> {
    config: ChainConfig,
    fingerprint: String,
    iteration: usize,
    rng: ChainRng,
    sampler: Sampler<'a>,
    draws: Vec<State>,
    loglik: Vec<f64>,
    pointwise: Option<Vec<Vec<f64>>>,
    missing_sum: Vec<Vec<u64>>,
}

impl<'a> Run<'a> {
    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            fingerprint: self.fingerprint.clone(),
            iteration: self.iteration,
            state: self.sampler.state().clone(),
            rng: self.rng.clone(),
            scales: self.sampler.scales.clone(),
            counters: self.sampler.counters.clone(),
            audit: self.sampler.audit(),
            draws: self.draws.clone(),
            loglik: self.loglik.clone(),
            pointwise: self.pointwise.clone(),
            missing_sum: self.missing_sum.clone(),
        }
    }

    fn execute(mut self, observer: &mut dyn FnMut(&Checkpoint) -> Result<()>) -> Result<PosteriorChain> {
        let cfg = self.config.clone();
        let target = 0.5 * (cfg.target_acceptance.0 + cfg.target_acceptance.1);
        let burn_end = cfg.n_adapt + cfg.n_burn;
        while self.iteration < cfg.total_sweeps() {
            self.sampler.sweep(&mut self.rng)?;
            self.iteration += 1;
            let it = self.iteration;
            if it <= cfg.n_adapt {
                if it.is_multiple_of(ADAPT_BATCH) || it == cfg.n_adapt {
                    let batch = it.div_ceil(ADAPT_BATCH) as f64;
                    self.sampler.adapt(target, (1.0 / batch.sqrt()).min(0.5));
                }
                if it == cfg.n_adapt {
                    self.sampler.reset_counters();
                }
            }
            if it > burn_end && (it - burn_end).is_multiple_of(cfg.thin) {
                self.record()?;
            }
            if cfg.checkpoint_every > 0 && it.is_multiple_of(cfg.checkpoint_every) && it < cfg.total_sweeps() {
                observer(&self.checkpoint())?;
            }
        }
        let n = self.draws.len().max(1) as f64;
        let missing_edge_prob = self
            .missing_sum
            .iter()
            .map(|l| l.iter().map(|&c| c as f64 / n).collect())
            .collect();
        let scales = &self.sampler.scales;
        let meta = ChainMeta {
            config: cfg,
            fingerprint: self.fingerprint,
            acceptance: AcceptanceReport::from_counters(&self.sampler.counters),
            z_steps: scales.z.clone(),
            theta_steps: scales.theta.clone(),
            sigma2_step: scales.sigma2,
            tau2_step: scales.tau2,
            phi_step: scales.phi,
            dilation_step: scales.dilation,
            missing_cells: self.sampler.missing_cells().to_vec(),
            missing_edge_prob,
            audit: self.sampler.audit(),
        };
        Ok(PosteriorChain {
            draws: self.draws,
            loglik: self.loglik,
            pointwise: self.pointwise,
            meta,
        })
    }

    fn record(&mut self) -> Result<()> {
        let ll = self.sampler.loglik()?;
        if !ll.is_finite() {
            return Err(Error::Numerical(format!("non-finite log-likelihood at sweep {}", self.iteration)));
        }
        self.loglik.push(ll);
        if let Some(pw) = self.pointwise.as_mut() {
            pw.push(self.sampler.pointwise_loglik());
        }
        for (sum, imp) in self.missing_sum.iter_mut().zip(self.sampler.imputed()) {
            for (s, &v) in sum.iter_mut().zip(imp) {
                *s += u64::from(v);
            }
        }
        self.draws.push(self.sampler.state().clone());
        Ok(())
    }
}

/// Runs a chain from a seeded initial state (or `init` if given).
pub fn run_chain(
    net: &MultiLayerNetwork,
    x: &AttributeVector<f64>,
    hyper: &Hyper,
    config: &ChainConfig,
    init: Option<State>,
) -> Result<PosteriorChain> {
    run_chain_with(net, x, hyper, config, init, &mut |_| Ok(()))
}

/// As [`run_chain`], handing a [`Checkpoint`] to `observer` every
/// `checkpoint_every` sweeps.
pub fn run_chain_with(
    net: &MultiLayerNetwork,
    x: &AttributeVector<f64>,
    hyper: &Hyper,
    config: &ChainConfig,
    init: Option<State>,
    observer: &mut dyn FnMut(&Checkpoint) -> Result<()>,
) -> Result<PosteriorChain> {
    config.validate()?;
    hyper.validate()?;
    let mut rng = ChainRng::seed_from_u64(config.seed);
    let state = match init {
        Some(s) => s,
        None => initial_state(&mut rng, x, net.n_layers(), hyper)?,
    };
    let mut sampler = Sampler::new(net, x, hyper, state, &config.steps, config.tiers)?;
    if config.audit_fast_path {
        sampler.enable_audit();
    }
    let missing_sum = sampler.missing_cells().iter().map(|m| vec![0; m.len()]).collect();
    let run = Run {
        config: config.clone(),
        fingerprint: data_fingerprint(net, x, hyper),
        iteration: 0,
        rng,
        sampler,
        draws: Vec::with_capacity(config.n_draws()),
        loglik: Vec::with_capacity(config.n_draws()),
        pointwise: config.store_pointwise.then(Vec::new),
        missing_sum,
    };
    run.execute(observer)
}

/// Continues a run from `checkpoint`. The inputs must hash to the
/// checkpoint's fingerprint.
pub fn resume_chain(
    net: &MultiLayerNetwork,
    x: &AttributeVector<f64>,
    hyper: &Hyper,
    checkpoint: Checkpoint,
    observer: &mut dyn FnMut(&Checkpoint) -> Result<()>,
) -> Result<PosteriorChain> {
    let found = data_fingerprint(net, x, hyper);
    if found != checkpoint.fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: checkpoint.fingerprint,
            found,
        });
    }
    checkpoint.config.validate()?;
    let mut sampler = Sampler::new(net, x, hyper, checkpoint.state, &checkpoint.config.steps, checkpoint.config.tiers)?;
    sampler.set_scales(checkpoint.scales);
    sampler.counters = checkpoint.counters;
    if let Some(a) = checkpoint.audit {
        sampler.enable_audit();
        sampler.set_audit(a);
    }
    let run = Run {
        config: checkpoint.config,
        fingerprint: checkpoint.fingerprint,
        iteration: checkpoint.iteration,
        rng: checkpoint.rng,
        sampler,
        draws: checkpoint.draws,
        loglik: checkpoint.loglik,
        pointwise: checkpoint.pointwise,
        missing_sum: checkpoint.missing_sum,
    };
    run.execute(observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_posterior, Cell};
    use crate::sampler::{StepSizes, Tiers};
    use crate::testutil::assert_within_se;

    fn data() -> (MultiLayerNetwork, AttributeVector<f64>) {
        let mut net = MultiLayerNetwork::filled(6, 2, Cell::Absent);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)] {
            net.set(0, i, j, Cell::Present);
        }
        net.set(1, 0, 5, Cell::Present);
        net.set(1, 2, 3, Cell::Missing);
        net.set(1, 1, 4, Cell::Missing);
        let x = AttributeVector::new(vec![0.1, 0.4, -0.2, 1.5, 1.1, 0.9]).unwrap();
        (net, x)
    }

    fn short_config(seed: u64) -> ChainConfig {
        ChainConfig {
            n_adapt: 100,
            n_burn: 50,
            n_keep: 200,
            thin: 3,
            seed,
            store_pointwise: true,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn same_seed_same_chain() {
        let (net, x) = data();
        let hyper = Hyper::defaults(2, 2);
        let a = run_chain(&net, &x, &hyper, &short_config(4), None).unwrap();
        let b = run_chain(&net, &x, &hyper, &short_config(4), None).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&net, &x, &hyper, &short_config(5), None).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn output_shape_and_validity() {
        let (net, x) = data();
        let hyper = Hyper::defaults(2, 2);
        let chain = run_chain(&net, &x, &hyper, &short_config(6), None).unwrap();
        assert_eq!(chain.len(), 200 / 3);
        assert_eq!(chain.loglik.len(), chain.len());
        let pw = chain.pointwise.as_ref().unwrap();
        assert_eq!(pw.len(), chain.len());
        assert_eq!(pw[0].len(), 15 + 13);
        assert_eq!(chain.meta.missing_cells[1].len(), 2);
        for d in &chain.draws {
            assert!(d.validate().is_ok());
            assert!(log_posterior(d, &net, &x, &hyper).unwrap().is_finite());
        }
        for p in &chain.meta.missing_edge_prob[1] {
            assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn resume_is_bit_exact() {
        let (net, x) = data();
        let hyper = Hyper::defaults(2, 2);
        let mut cfg = short_config(7);
        cfg.checkpoint_every = 120;
        let mut saved = Vec::new();
        let full = run_chain_with(&net, &x, &hyper, &cfg, None, &mut |cp| {
            saved.push(cp.to_json()?);
            Ok(())
        })
        .unwrap();
        assert_eq!(saved.len(), 2);
        for text in &saved {
            let cp = Checkpoint::from_json(text).unwrap();
            let resumed = resume_chain(&net, &x, &hyper, cp, &mut |_| Ok(())).unwrap();
            assert_eq!(resumed, full);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        let cp = Checkpoint::from_json(&saved[1]).unwrap();
        cp.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.iteration(), 240);
        assert_eq!(back.to_json().unwrap(), saved[1]);
    }

    #[test]
    fn resume_rejects_other_data() {
        let (net, x) = data();
        let hyper = Hyper::defaults(2, 2);
        let mut cfg = short_config(8);
        cfg.checkpoint_every = 100;
        let mut saved = None;
        run_chain_with(&net, &x, &hyper, &cfg, None, &mut |cp| {
            saved.get_or_insert_with(|| cp.clone());
            Ok(())
        })
        .unwrap();
        let other = AttributeVector::new(vec![0.0, 0.4, -0.2, 1.5, 1.1, 0.9]).unwrap();
        let err = resume_chain(&net, &other, &hyper, saved.unwrap(), &mut |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::FingerprintMismatch { .. }));
    }

    #[test]
    fn fingerprint_depends_on_every_input() {
        let (net, x) = data();
        let hyper = Hyper::defaults(2, 2);
        let base = data_fingerprint(&net, &x, &hyper);
        assert_eq!(base.len(), 64);
        let mut n2 = net.clone();
        n2.set(0, 0, 1, Cell::Missing);
        assert_ne!(base, data_fingerprint(&n2, &x, &hyper));
        let mut h2 = hyper.clone();
        h2.nu_beta2 = 10.0;
        assert_ne!(base, data_fingerprint(&net, &x, &h2));
    }

    fn prior_chain(h: usize, seed: u64) -> PosteriorChain {
        let net = MultiLayerNetwork::filled(2, 1, Cell::Missing);
        let x = AttributeVector::new(vec![-0.5, 0.5]).unwrap();
        let hyper = Hyper::defaults(1, h);
        let cfg = ChainConfig {
            n_adapt: 2000,
            n_burn: 1000,
            n_keep: 200_000,
            thin: 2,
            seed,
            steps: StepSizes {
                z: 1.0,
                theta: 1.0,
                sigma2: 1.0,
                tau2: 1.0,
                phi: 0.5,
                dilation: 0.3,
            },
            tiers: Tiers {
                edges: false,
                attributes: false,
            },
            ..ChainConfig::default()
        };
        run_chain(&net, &x, &hyper, &cfg, None).unwrap()
    }

    #[test]
    fn prior_only_chain_reproduces_prior_moments() {
        let chain = prior_chain(3, 21);
        let col = |f: &dyn Fn(&State) -> f64| chain.draws.iter().map(f).collect::<Vec<f64>>();

        // theta ~ Gamma(1, 1).
        assert_within_se("theta", &col(&|s| s.theta[0]), 1.0, 3.0);
        assert_within_se("theta^2", &col(&|s| s.theta[0].powi(2)), 2.0, 3.0);
        // omega ~ Dirichlet(1, 1, 1).
        assert_within_se("omega", &col(&|s| s.omega[0]), 1.0 / 3.0, 3.0);
        assert_within_se("omega^2", &col(&|s| s.omega[0].powi(2)), 1.0 / 6.0, 3.0);
        // sigma2, tau2 ~ InvGamma(2, 1): E ln v = ln 1 - digamma(2).
        let e_log = -(1.0 - 0.577_215_664_901_532_9);
        assert_within_se("ln sigma2", &col(&|s| s.sigma2.ln()), e_log, 3.0);
        assert_within_se("ln tau2", &col(&|s| s.tau2.ln()), e_log, 3.0);
        // phi ~ U(0, 1).
        assert_within_se("phi", &col(&|s| s.phi), 0.5, 3.0);
        // a ~ N(0, 9), beta ~ N(0, 1e4).
        assert_within_se("a^2", &col(&|s| s.a[0].powi(2)), 9.0, 3.0);
        // z ~ mu + kappa e: mean 0, variance 2/3 + E kappa2 = 2/3 + 1/3.
        assert_within_se("z", &col(&|s| s.z[[0, 0]]), 0.0, 3.0);
        assert_within_se("z^2", &col(&|s| s.z[[0, 0]].powi(2)), 1.0, 3.0);
        let rates = &chain.meta.acceptance;
        assert!(rates.theta[0] > 0.15 && rates.theta[0] < 0.6, "{rates:?}");
    }
}
