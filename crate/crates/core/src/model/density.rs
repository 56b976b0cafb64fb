//! Log-density terms of the joint model.
//!
//! All terms keep their normalizing constants, so [`log_posterior`] is the
//! log joint density `p(Y, x, z, g, params)` with nothing dropped.

use ndarray::Array2;

use super::linalg::Cholesky;
use super::normal::ln_phi;
use super::{AttributeVector, Cell, Hyperparameters, ModelState, MultiLayerNetwork};
use crate::error::{Error, Result};
use crate::real::{ln_gamma, Real, LN_2PI};

fn check_dims<T: Real>(
    net: Option<&MultiLayerNetwork>,
    state: &ModelState<T>,
    x: &AttributeVector<T>,
) -> Result<()> {
    let n = state.n_actors();
    if x.len() != n {
        return Err(Error::dim(format!("{} attributes for {n} latent positions", x.len())));
    }
    if let Some(net) = net {
        if net.n_actors() != n {
            return Err(Error::dim(format!("network has {} actors, state has {n}", net.n_actors())));
        }
        if net.n_layers() != state.n_layers() {
            return Err(Error::dim(format!(
                "network has {} layers, state has {}",
                net.n_layers(),
                state.n_layers()
            )));
        }
    }
    Ok(())
}

/// Probit predictor `a_l + b_l |x_i - x_j| - theta_l ||z_i - z_j||`.
pub fn edge_linear_predictor<T: Real>(
    i: usize,
    j: usize,
    l: usize,
    state: &ModelState<T>,
    x: &AttributeVector<T>,
) -> Result<T> {
    let n = state.n_actors();
    if i == j {
        return Err(Error::invalid("edge predictor needs two distinct actors"));
    }
    if i >= n || j >= n || l >= state.n_layers() || x.len() != n {
        return Err(Error::invalid(format!("pair ({i}, {j}) in layer {l} out of range")));
    }
    Ok(predictor(state, x, i, j, l))
}

#[inline]
fn predictor<T: Real>(state: &ModelState<T>, x: &AttributeVector<T>, i: usize, j: usize, l: usize) -> T {
    state.a[l] + state.b[l] * (x.get(i) - x.get(j)).abs() - state.theta[l] * state.distance(i, j)
}

/// Probit log-likelihood of all observed cells; missing cells add nothing.
///
/// Each unordered pair is counted once. Summation order is layer-major then
/// row-major over pairs.
pub fn edge_loglik<T: Real>(
    net: &MultiLayerNetwork,
    state: &ModelState<T>,
    x: &AttributeVector<T>,
) -> Result<T> {
    check_dims(Some(net), state, x)?;
    let mut total = T::zero();
    for l in 0..net.n_layers() {
        let layer = net.layer(l);
        for (p, i, j) in net.pairs() {
            let eta = match layer[p] {
                Cell::Missing => continue,
                Cell::Present => predictor(state, x, i, j, l),
                Cell::Absent => -predictor(state, x, i, j, l),
            };
            total = total + T::lit(ln_phi(eta.as_f64()));
        }
    }
    Ok(total)
}

/// Exponential-kernel covariance `sigma2 exp(-phi d_ij) + tau2 I`.
pub fn gp_covariance<T: Real>(z: &Array2<T>, phi: T, sigma2: T, tau2: T) -> Result<Array2<T>> {
    if !(sigma2 > T::zero()) || !(tau2 > T::zero()) || !sigma2.is_finite() || !tau2.is_finite() {
        return Err(Error::invalid("gp_covariance: sigma2 and tau2 must be positive"));
    }
    if !(phi >= T::zero()) || !phi.is_finite() {
        return Err(Error::invalid("gp_covariance: phi must be non-negative"));
    }
    let n = z.nrows();
    let mut cov = Array2::<T>::zeros((n, n));
    for i in 0..n {
        cov[[i, i]] = sigma2 + tau2;
        for j in 0..i {
            let d: T = z
                .row(i)
                .iter()
                .zip(z.row(j).iter())
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum::<T>()
                .sqrt();
            let c = sigma2 * (-phi * d).exp();
            cov[[i, j]] = c;
            cov[[j, i]] = c;
        }
    }
    Ok(cov)
}

/// Gaussian-process log density of `x` with mean `beta 1` and covariance
/// [`gp_covariance`], through a Cholesky factorization.
pub fn attr_logdensity<T: Real>(x: &AttributeVector<T>, state: &ModelState<T>) -> Result<T> {
    check_dims(None, state, x)?;
    let cov = gp_covariance(&state.z, state.phi, state.sigma2, state.tau2)?;
    let chol = Cholesky::new(&cov)?;
    let resid: Vec<T> = x.values().iter().map(|&v| v - state.beta).collect();
    let n = T::from_usize(x.len()).unwrap();
    let half = T::lit(0.5);
    Ok(-half * (n * T::lit(LN_2PI) + chol.log_det() + chol.quad_form(&resid)))
}

/// Completed-data log density of `(z, g)` given `omega`, `mu`, `kappa2`:
/// `sum_i ln omega_{g_i} + ln N_K(z_i; mu_{g_i}, kappa2_{g_i} I)`.
pub fn mixture_logprior<T: Real>(state: &ModelState<T>) -> Result<T> {
    let h = state.n_groups();
    let k = state.latent_dim();
    if state.mu.nrows() != h || state.mu.ncols() != k || state.kappa2.len() != h {
        return Err(Error::dim("mixture parameters do not match H and K"));
    }
    if state.kappa2.iter().any(|&k2| !(k2 > T::zero())) {
        return Err(Error::invalid("kappa2 must be positive"));
    }
    let kf = T::from_usize(k).unwrap();
    let half = T::lit(0.5);
    let mut total = T::zero();
    for (i, &gi) in state.g.iter().enumerate() {
        if gi >= h {
            return Err(Error::invalid(format!("label of actor {} outside 1..{h}", i + 1)));
        }
        let k2 = state.kappa2[gi];
        let sq: T = state
            .z
            .row(i)
            .iter()
            .zip(state.mu.row(gi).iter())
            .map(|(&p, &m)| (p - m) * (p - m))
            .sum();
        total = total + state.omega[gi].ln() - half * kf * (T::lit(LN_2PI) + k2.ln()) - half * sq / k2;
    }
    Ok(total)
}

fn ln_normal<T: Real>(v: T, mean: T, var: T) -> T {
    let half = T::lit(0.5);
    -half * (T::lit(LN_2PI) + var.ln()) - half * (v - mean) * (v - mean) / var
}

fn ln_gamma_pdf<T: Real>(v: T, shape: T, rate: T) -> T {
    shape * rate.ln() - ln_gamma(shape) + (shape - T::one()) * v.ln() - rate * v
}

fn ln_inv_gamma_pdf<T: Real>(v: T, shape: T, scale: T) -> T {
    shape * scale.ln() - ln_gamma(shape) - (shape + T::one()) * v.ln() - scale / v
}

/// Log prior density of all parameters other than `(z, g)`.
///
/// Returns `-inf` when `phi` lies outside `[u1, u2]`.
pub fn log_prior<T: Real>(state: &ModelState<T>, hyper: &Hyperparameters<T>) -> Result<T> {
    if state.omega.len() != hyper.alpha.len() || state.latent_dim() != hyper.m_mu.len() {
        return Err(Error::dim("state does not match hyperparameter dimensions"));
    }
    if state.phi < hyper.u1 || state.phi > hyper.u2 {
        return Ok(T::neg_infinity());
    }
    let mut total = T::zero();
    for l in 0..state.n_layers() {
        total = total + ln_normal(state.a[l], hyper.m_a, hyper.nu_a2);
        total = total + ln_normal(state.b[l], hyper.m_b, hyper.nu_b2);
        total = total + ln_gamma_pdf(state.theta[l], hyper.lambda1, hyper.lambda2);
    }
    total = total + ln_normal(state.beta, T::zero(), hyper.nu_beta2);
    total = total + ln_inv_gamma_pdf(state.sigma2, hyper.eta1, hyper.eta2);
    total = total + ln_inv_gamma_pdf(state.tau2, hyper.xi1, hyper.xi2);
    total = total - (hyper.u2 - hyper.u1).ln();

    let alpha_sum: T = hyper.alpha.iter().copied().sum();
    total = total + ln_gamma(alpha_sum);
    for (h, &alpha) in hyper.alpha.iter().enumerate() {
        total = total - ln_gamma(alpha) + (alpha - T::one()) * state.omega[h].ln();
    }
    for h in 0..state.n_groups() {
        for (kk, &m) in hyper.m_mu.iter().enumerate() {
            total = total + ln_normal(state.mu[[h, kk]], m, hyper.nu_mu2);
        }
        total = total + ln_inv_gamma_pdf(state.kappa2[h], hyper.gamma1, hyper.gamma2);
    }
    Ok(total)
}

/// The four components of the log posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorTerms<T> {
    pub edge: T,
    pub attribute: T,
    pub mixture: T,
    pub prior: T,
}

impl<T: Real> PosteriorTerms<T> {
    /// `((edge + attribute) + mixture) + prior`, in that order.
    pub fn total(&self) -> T {
        ((self.edge + self.attribute) + self.mixture) + self.prior
    }

    /// Data log-likelihood `ln p(Y, x | z, params)`.
    pub fn loglik(&self) -> T {
        self.edge + self.attribute
    }
}

pub fn log_posterior_terms<T: Real>(
    state: &ModelState<T>,
    net: &MultiLayerNetwork,
    x: &AttributeVector<T>,
    hyper: &Hyperparameters<T>,
) -> Result<PosteriorTerms<T>> {
    let prior = log_prior(state, hyper)?;
    let edge = edge_loglik(net, state, x)?;
    let mixture = mixture_logprior(state)?;
    // The covariance is only guaranteed valid for phi >= 0; outside the
    // prior support the attribute term is irrelevant.
    let attribute = if prior == T::neg_infinity() && state.phi < T::zero() {
        T::neg_infinity()
    } else {
        attr_logdensity(x, state)?
    };
    Ok(PosteriorTerms {
        edge,
        attribute,
        mixture,
        prior,
    })
}

/// Unnormalized log posterior: the full log joint density of data, latent
/// variables and parameters. `-inf` when `phi` is outside `[u1, u2]`.
pub fn log_posterior<T: Real>(
    state: &ModelState<T>,
    net: &MultiLayerNetwork,
    x: &AttributeVector<T>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    Ok(log_posterior_terms(state, net, x, hyper)?.total())
}
