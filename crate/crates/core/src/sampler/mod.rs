//! Metropolis-within-Gibbs sampler.
//!
//! One sweep runs these blocks in order, each consuming the chain's random
//! stream in the order listed:
//!
//! 1. missing-edge imputation: one uniform per missing cell, layer-major;
//! 2. probit augmentation: truncated-normal draws per observed cell;
//! 3. `(a_l, b_l)`: two normals per layer from the exact bivariate conditional;
//! 4. `theta_l`: log-scale random walk, one normal and one uniform per layer;
//! 5. `z_i`: per-actor random walk, `K` normals and one uniform per actor,
//!    then a joint dilation of the latent configuration (one normal and one
//!    uniform) that rescales `z`, `mu`, `kappa2` and `theta` together;
//! 6. `beta` (one normal), then `sigma2`, `tau2`, `phi` random walks
//!    (one normal and one uniform each);
//! 7. mixture: labels, weights, means, variances.
//!
//! Blocks with a zero step size are skipped and draw nothing.

mod chain;
mod engine;
mod gp;
mod init;
pub mod truncnorm;

use serde::{Deserialize, Serialize};

pub use chain::{
    data_fingerprint, resume_chain, run_chain, run_chain_with, AcceptanceReport, ChainMeta,
    Checkpoint, PosteriorChain,
};
pub use engine::{AugmentedState, FastPathAudit, Sampler};
pub use init::initial_state;

/// Random generator used by every chain.
pub type ChainRng = rand_chacha::ChaCha8Rng;

/// Random-walk scales of the Metropolis blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    /// Scale of the isotropic Gaussian step of each `z_i`.
    pub z: f64,
    /// Scale on `ln theta_l`.
    pub theta: f64,
    /// Scale on `ln sigma2`.
    pub sigma2: f64,
    /// Scale on `ln tau2`.
    pub tau2: f64,
    /// Scale of the reflected walk on `phi`.
    pub phi: f64,
    /// Scale on `ln c` of the joint dilation `z -> c z`, `theta -> theta / c`.
    #[serde(default = "default_dilation")]
    pub dilation: f64,
}

fn default_dilation() -> f64 {
    0.02
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            z: 0.3,
            theta: 0.1,
            sigma2: 0.5,
            tau2: 0.5,
            phi: 0.2,
            dilation: default_dilation(),
        }
    }
}

impl StepSizes {
    pub fn zero() -> Self {
        Self {
            z: 0.0,
            theta: 0.0,
            sigma2: 0.0,
            tau2: 0.0,
            phi: 0.0,
            dilation: 0.0,
        }
    }
}

/// Which likelihood tiers enter the conditionals. Switching both off turns
/// the chain into a prior sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tiers {
    pub edges: bool,
    pub attributes: bool,
}

impl Default for Tiers {
    fn default() -> Self {
        Self {
            edges: true,
            attributes: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub n_adapt: usize,
    pub n_burn: usize,
    pub n_keep: usize,
    pub thin: usize,
    pub seed: u64,
    pub steps: StepSizes,
    /// Acceptance band for adaptation; the midpoint is the target.
    pub target_acceptance: (f64, f64),
    /// Sweeps between checkpoints handed to the observer; 0 disables.
    pub checkpoint_every: usize,
    /// Store per-cell edge log-likelihoods of every kept draw (for WAIC).
    pub store_pointwise: bool,
    /// Cross-check every fast `z` move against a full density evaluation.
    pub audit_fast_path: bool,
    pub tiers: Tiers,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_adapt: 20_000,
            n_burn: 20_000,
            n_keep: 10_000,
            thin: 10,
            seed: 1,
            steps: StepSizes::default(),
            target_acceptance: (0.25, 0.45),
            checkpoint_every: 0,
            store_pointwise: false,
            audit_fast_path: false,
            tiers: Tiers::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let (lo, hi) = self.target_acceptance;
        if self.thin == 0 {
            return Err(crate::Error::Config("thin must be at least 1".into()));
        }
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(crate::Error::Config("target acceptance band must satisfy 0 < low < high < 1".into()));
        }
        let s = &self.steps;
        if [s.z, s.theta, s.sigma2, s.tau2, s.phi, s.dilation].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(crate::Error::Config("step sizes must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Total sweeps of the run.
    pub fn total_sweeps(&self) -> usize {
        self.n_adapt + self.n_burn + self.n_keep
    }

    /// Number of stored draws, `floor(n_keep / thin)`.
    pub fn n_draws(&self) -> usize {
        self.n_keep / self.thin
    }
}
