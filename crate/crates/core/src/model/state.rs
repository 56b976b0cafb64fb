use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// One point of the posterior: latent positions, labels and every parameter.
///
/// Group labels in `g` are zero-based (`0..H`); files use one-based labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Deserialize<'de>"
))]
pub struct ModelState<T> {
    /// Latent positions, `N x K`.
    pub z: Array2<T>,
    pub g: Vec<usize>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub theta: Vec<T>,
    pub beta: T,
    pub sigma2: T,
    pub tau2: T,
    pub phi: T,
    pub omega: Vec<T>,
    /// Component means, `H x K`.
    pub mu: Array2<T>,
    pub kappa2: Vec<T>,
}

impl<T: Real> ModelState<T> {
    #[inline]
    pub fn n_actors(&self) -> usize {
        self.z.nrows()
    }

    #[inline]
    pub fn latent_dim(&self) -> usize {
        self.z.ncols()
    }

    #[inline]
    pub fn n_layers(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn n_groups(&self) -> usize {
        self.omega.len()
    }

    /// Euclidean distance between latent positions of `i` and `j`.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> T {
        let zi = self.z.row(i);
        let zj = self.z.row(j);
        zi.iter()
            .zip(zj.iter())
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum::<T>()
            .sqrt()
    }

    /// Number of scalar coordinates of the state: `NK + N + 3L + H(K + 2) + 4`.
    ///
    /// Component means are `K`-vectors, so this reduces to the usual
    /// `NK + N + 3L + 3H + 4` count only for `K = 1`.
    pub fn dimension(&self) -> usize {
        let (n, k, l, h) = (self.n_actors(), self.latent_dim(), self.n_layers(), self.n_groups());
        n * k + n + 3 * l + h * (k + 2) + 4
    }

    /// Number of parameter blocks, counting each `z_i` coordinate and each
    /// component (`omega_h`, `mu_h`, `kappa2_h`) once.
    pub fn block_dimension(&self) -> usize {
        let (n, k, l, h) = (self.n_actors(), self.latent_dim(), self.n_layers(), self.n_groups());
        n * k + n + 3 * l + 3 * h + 4
    }

    /// Checks shapes and the positivity/simplex constraints.
    pub fn validate(&self) -> Result<()> {
        let (n, k, l, h) = (self.n_actors(), self.latent_dim(), self.n_layers(), self.n_groups());
        if self.g.len() != n {
            return Err(Error::dim(format!("g has {} labels for {n} actors", self.g.len())));
        }
        if self.b.len() != l || self.theta.len() != l {
            return Err(Error::dim("a, b and theta must have one entry per layer"));
        }
        if self.mu.nrows() != h || self.mu.ncols() != k || self.kappa2.len() != h {
            return Err(Error::dim("mu must be H x K and kappa2 length H"));
        }
        if h == 0 || k == 0 {
            return Err(Error::dim("H and K must be at least 1"));
        }
        if let Some(i) = self.g.iter().position(|&gi| gi >= h) {
            return Err(Error::invalid(format!("label of actor {} outside 1..{h}", i + 1)));
        }
        if self.theta.iter().any(|&t| !(t > T::zero())) {
            return Err(Error::invalid("theta must be positive"));
        }
        if !(self.sigma2 > T::zero()) || !(self.tau2 > T::zero()) {
            return Err(Error::invalid("sigma2 and tau2 must be positive"));
        }
        if self.kappa2.iter().any(|&k2| !(k2 > T::zero())) {
            return Err(Error::invalid("kappa2 must be positive"));
        }
        if self.omega.iter().any(|&w| !(w > T::zero() && w <= T::one())) {
            return Err(Error::invalid("omega entries must lie in (0, 1]"));
        }
        let total: T = self.omega.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::invalid("omega must sum to one"));
        }
        let finite = self.z.iter().chain(self.mu.iter()).all(|v| v.is_finite())
            && self.a.iter().chain(self.b.iter()).all(|v| v.is_finite())
            && self.beta.is_finite()
            && self.phi.is_finite();
        if !finite {
            return Err(Error::invalid("state contains non-finite values"));
        }
        Ok(())
    }

    /// Converts every scalar to another precision.
    pub fn cast<U: Real>(&self) -> ModelState<U> {
        let c = |v: T| U::lit(v.as_f64());
        ModelState {
            z: self.z.mapv(c),
            g: self.g.clone(),
            a: self.a.iter().map(|&v| c(v)).collect(),
            b: self.b.iter().map(|&v| c(v)).collect(),
            theta: self.theta.iter().map(|&v| c(v)).collect(),
            beta: c(self.beta),
            sigma2: c(self.sigma2),
            tau2: c(self.tau2),
            phi: c(self.phi),
            omega: self.omega.iter().map(|&v| c(v)).collect(),
            mu: self.mu.mapv(c),
            kappa2: self.kappa2.iter().map(|&v| c(v)).collect(),
        }
    }
}

/// Prior constants and model dimensions.
///
/// Normal priors are parameterized by variance, Gamma by shape/rate and
/// inverse-Gamma by shape/scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Deserialize<'de>"
))]
pub struct Hyperparameters<T> {
    pub m_a: T,
    pub nu_a2: T,
    pub m_b: T,
    pub nu_b2: T,
    pub lambda1: T,
    pub lambda2: T,
    pub nu_beta2: T,
    pub eta1: T,
    pub eta2: T,
    pub xi1: T,
    pub xi2: T,
    pub u1: T,
    pub u2: T,
    pub alpha: Vec<T>,
    pub m_mu: Vec<T>,
    pub nu_mu2: T,
    pub gamma1: T,
    pub gamma2: T,
    /// Latent dimension.
    pub k: usize,
    /// Number of mixture components.
    pub h: usize,
}

impl<T: Real> Hyperparameters<T> {
    /// Default priors: `N(0, 9)` on `a_l`, `b_l`; `Gamma(1, 1)` on `theta_l`;
    /// `N(0, 1e4)` on `beta`; `InvGamma(2, 1)` on `sigma2`, `tau2`;
    /// `U(0, 1)` on `phi`; flat Dirichlet on `omega`; `N(0, 2/3 I)` on
    /// `mu_h`; `InvGamma(3, 2/3)` on `kappa2_h`.
    pub fn defaults(k: usize, h: usize) -> Self {
        let l = T::lit;
        Self {
            m_a: l(0.0),
            nu_a2: l(9.0),
            m_b: l(0.0),
            nu_b2: l(9.0),
            lambda1: l(1.0),
            lambda2: l(1.0),
            nu_beta2: l(1e4),
            eta1: l(2.0),
            eta2: l(1.0),
            xi1: l(2.0),
            xi2: l(1.0),
            u1: l(0.0),
            u2: l(1.0),
            alpha: vec![l(1.0); h],
            m_mu: vec![l(0.0); k],
            nu_mu2: l(2.0 / 3.0),
            gamma1: l(3.0),
            gamma2: l(2.0 / 3.0),
            k,
            h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.h == 0 {
            return Err(Error::Config("K and H must be at least 1".into()));
        }
        if self.alpha.len() != self.h {
            return Err(Error::Config(format!("alpha has {} entries, H = {}", self.alpha.len(), self.h)));
        }
        if self.m_mu.len() != self.k {
            return Err(Error::Config(format!("m_mu has {} entries, K = {}", self.m_mu.len(), self.k)));
        }
        let positive = [
            ("nu_a2", self.nu_a2),
            ("nu_b2", self.nu_b2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("nu_beta2", self.nu_beta2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("xi1", self.xi1),
            ("xi2", self.xi2),
            ("nu_mu2", self.nu_mu2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.u1 < self.u2) || self.u1 < T::zero() {
            return Err(Error::Config("phi prior needs 0 <= u1 < u2".into()));
        }
        if self.alpha.iter().any(|&a| !(a > T::zero())) {
            return Err(Error::Config("alpha entries must be positive".into()));
        }
        Ok(())
    }
}
