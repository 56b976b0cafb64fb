use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::gp::GpCache;
use super::truncnorm::{negative_part, positive_part};
use super::{StepSizes, Tiers};
use crate::error::{Error, Result};
use crate::model::{
    attr_logdensity, ln_phi, normal_cdf, pair_count, pair_index, AttributeVector,
    Cell, MultiLayerNetwork,
};
use crate::real::LN_2PI;
use crate::{Hyper, State};

/// Probit augmentation variables, one per observed cell of each layer in
/// row-major pair order. Positive exactly where the edge is present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub ystar: Vec<Vec<f64>>,
}

/// Discrepancy between fast and full `z`-move density deltas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FastPathAudit {
    pub checked: u64,
    pub max_abs_error: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct Counter {
    pub accepted: u64,
    pub proposed: u64,
}

impl Counter {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Per-target scales: `z` is tuned per actor and `theta` per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Scales {
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub tau2: f64,
    pub phi: f64,
    pub dilation: f64,
}

impl Scales {
    fn from_steps(steps: &StepSizes, n: usize, l: usize) -> Self {
        Self {
            z: vec![steps.z; n],
            theta: vec![steps.theta; l],
            sigma2: steps.sigma2,
            tau2: steps.tau2,
            phi: steps.phi,
            dilation: steps.dilation,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct Counters {
    pub z: Vec<Counter>,
    pub theta: Vec<Counter>,
    pub sigma2: Counter,
    pub tau2: Counter,
    pub phi: Counter,
    pub dilation: Counter,
}

impl Counters {
    fn new(n: usize, l: usize) -> Self {
        Self {
            z: vec![Counter::default(); n],
            theta: vec![Counter::default(); l],
            ..Default::default()
        }
    }
}

/// Sampler state for one chain: the current model state plus the caches
/// and tuning needed to advance it.
pub struct Sampler<'a> {
    net: &'a MultiLayerNetwork,
    x: &'a [f64],
    hyper: &'a Hyper,
    tiers: Tiers,
    state: State,
    aug: AugmentedState,
    /// Imputed values of the missing cells of each layer, this sweep.
    imputed: Vec<Vec<bool>>,
    observed: Vec<Vec<usize>>,
    observed_y: Vec<Vec<bool>>,
    missing: Vec<Vec<usize>>,
    absdx: Vec<f64>,
    dist: Vec<f64>,
    pub(crate) scales: Scales,
    pub(crate) counters: Counters,
    audit: Option<FastPathAudit>,
}

impl<'a> Sampler<'a> {
    pub fn new(
        net: &'a MultiLayerNetwork,
        x: &'a AttributeVector<f64>,
        hyper: &'a Hyper,
        state: State,
        steps: &StepSizes,
        tiers: Tiers,
    ) -> Result<Self> {
        hyper.validate()?;
        state.validate()?;
        let n = net.n_actors();
        let l = net.n_layers();
        if x.len() != n || state.n_actors() != n {
            return Err(Error::dim(format!(
                "network has {n} actors, attributes {}, state {}",
                x.len(),
                state.n_actors()
            )));
        }
        if state.n_layers() != l || state.latent_dim() != hyper.k || state.n_groups() != hyper.h {
            return Err(Error::dim("state shape does not match network layers, K or H"));
        }
        if n < 2 {
            return Err(Error::dim("at least two actors are required"));
        }
        let xs = x.values();
        let mut absdx = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i + 1..n {
                absdx.push((xs[i] - xs[j]).abs());
            }
        }
        let mut observed = Vec::with_capacity(l);
        let mut observed_y = Vec::with_capacity(l);
        let mut missing = Vec::with_capacity(l);
        for layer in net.layers() {
            let mut obs = Vec::new();
            let mut ys = Vec::new();
            let mut mis = Vec::new();
            for (p, c) in layer.iter().enumerate() {
                match c.value() {
                    Some(y) => {
                        obs.push(p);
                        ys.push(y);
                    }
                    None => mis.push(p),
                }
            }
            observed.push(obs);
            observed_y.push(ys);
            missing.push(mis);
        }
        let aug = AugmentedState {
            ystar: observed
                .iter()
                .zip(&observed_y)
                .map(|(_, ys)| ys.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect())
                .collect(),
        };
        let imputed = missing.iter().map(|m| vec![false; m.len()]).collect();
        let mut sampler = Self {
            net,
            x: xs,
            hyper,
            tiers,
            state,
            aug,
            imputed,
            observed,
            observed_y,
            missing,
            absdx,
            dist: Vec::new(),
            scales: Scales::from_steps(steps, n, l),
            counters: Counters::new(n, l),
            audit: None,
        };
        sampler.recompute_distances();
        Ok(sampler)
    }

    /// Enables the fast-path audit of `z` moves.
    pub fn enable_audit(&mut self) {
        self.audit = Some(FastPathAudit::default());
    }

    pub(crate) fn set_audit(&mut self, audit: FastPathAudit) {
        self.audit = Some(audit);
    }

    pub fn audit(&self) -> Option<FastPathAudit> {
        self.audit
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    pub fn augmentation(&self) -> &AugmentedState {
        &self.aug
    }

    /// Imputed values of each layer's missing cells, row-major pair order.
    pub fn imputed(&self) -> &[Vec<bool>] {
        &self.imputed
    }

    /// Pair indices of each layer's missing cells.
    pub fn missing_cells(&self) -> &[Vec<usize>] {
        &self.missing
    }

    /// Pair indices of each layer's observed cells.
    pub fn observed_cells(&self) -> &[Vec<usize>] {
        &self.observed
    }

    pub fn network(&self) -> &MultiLayerNetwork {
        self.net
    }

    /// Sets per-block scales, e.g. to zero for tests.
    pub fn set_steps(&mut self, steps: &StepSizes) {
        self.scales = Scales::from_steps(steps, self.state.n_actors(), self.state.n_layers());
    }

    pub(crate) fn set_scales(&mut self, scales: Scales) {
        self.scales = scales;
    }

    fn recompute_distances(&mut self) {
        let n = self.state.n_actors();
        self.dist.clear();
        for i in 0..n {
            for j in i + 1..n {
                self.dist.push(self.state.distance(i, j));
            }
        }
    }

    #[inline]
    fn eta(&self, l: usize, p: usize) -> f64 {
        self.state.a[l] + self.state.b[l] * self.absdx[p] - self.state.theta[l] * self.dist[p]
    }

    /// One full sweep through every block.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.impute_missing_edges(rng);
        self.update_augmentation(rng);
        self.update_ab(rng)?;
        self.update_theta(rng);
        self.update_z(rng)?;
        self.update_dilation(rng)?;
        self.update_gp_params(rng)?;
        self.update_mixture(rng);
        Ok(())
    }

    /// Draws each missing cell from `Bernoulli(Phi(eta))`. The network's
    /// mask is untouched; the draws only live in [`Sampler::imputed`].
    pub fn impute_missing_edges<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for l in 0..self.missing.len() {
            for k in 0..self.missing[l].len() {
                let p = self.missing[l][k];
                let prob = normal_cdf(self.eta(l, p));
                let u: f64 = rng.random();
                self.imputed[l][k] = u < prob;
            }
        }
    }

    /// Redraws every augmentation variable from its truncated normal.
    pub fn update_augmentation<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for l in 0..self.observed.len() {
            for k in 0..self.observed[l].len() {
                let eta = self.eta(l, self.observed[l][k]);
                self.aug.ystar[l][k] = if self.observed_y[l][k] {
                    positive_part(rng, eta)
                } else {
                    negative_part(rng, eta)
                };
            }
        }
    }

    /// Exact bivariate-normal Gibbs draw of `(a_l, b_l)` given the
    /// augmentation, with `theta_l d` as a fixed offset.
    pub fn update_ab<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let h = self.hyper;
        for l in 0..self.state.n_layers() {
            let theta = self.state.theta[l];
            let (mut n, mut su, mut suu, mut sr, mut sur) = (0.0, 0.0, 0.0, 0.0, 0.0);
            if self.tiers.edges {
                for (k, &p) in self.observed[l].iter().enumerate() {
                    let u = self.absdx[p];
                    let r = self.aug.ystar[l][k] + theta * self.dist[p];
                    n += 1.0;
                    su += u;
                    suu += u * u;
                    sr += r;
                    sur += u * r;
                }
            }
            let p00 = 1.0 / h.nu_a2 + n;
            let p01 = su;
            let p11 = 1.0 / h.nu_b2 + suu;
            let r0 = h.m_a / h.nu_a2 + sr;
            let r1 = h.m_b / h.nu_b2 + sur;
            let det = p00 * p11 - p01 * p01;
            if !(det > 0.0) {
                return Err(Error::Numerical(format!("singular (a, b) precision in layer {}", l + 1)));
            }
            let m0 = (p11 * r0 - p01 * r1) / det;
            let m1 = (p00 * r1 - p01 * r0) / det;
            // Precision factor L L^T; sample = mean + L^{-T} e.
            let l00 = p00.sqrt();
            let l10 = p01 / l00;
            let l11 = (p11 - l10 * l10).sqrt();
            let e0: f64 = StandardNormal.sample(rng);
            let e1: f64 = StandardNormal.sample(rng);
            let v1 = e1 / l11;
            let v0 = (e0 - l10 * v1) / l00;
            self.state.a[l] = m0 + v0;
            self.state.b[l] = m1 + v1;
        }
        Ok(())
    }

    /// Log-scale random walk on each `theta_l` against the augmented
    /// Gaussian likelihood and the Gamma prior.
    pub fn update_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let h = self.hyper;
        for l in 0..self.state.n_layers() {
            let step = self.scales.theta[l];
            if step == 0.0 {
                continue;
            }
            let (a, b) = (self.state.a[l], self.state.b[l]);
            let (mut sdd, mut srd) = (0.0, 0.0);
            if self.tiers.edges {
                for (k, &p) in self.observed[l].iter().enumerate() {
                    let d = self.dist[p];
                    sdd += d * d;
                    srd += (self.aug.ystar[l][k] - a - b * self.absdx[p]) * d;
                }
            }
            // Density of log theta: includes the Jacobian theta.
            let target = |t: f64| -0.5 * t * t * sdd - t * srd + h.lambda1 * t.ln() - h.lambda2 * t;
            let cur = self.state.theta[l];
            let e: f64 = StandardNormal.sample(rng);
            let prop = cur * (step * e).exp();
            let u: f64 = rng.random();
            let accept = prop > 0.0 && prop.is_finite() && u.ln() < target(prop) - target(cur);
            if accept {
                self.state.theta[l] = prop;
            }
            self.counters.theta[l].record(accept);
        }
    }

    fn covariance_from_cache(&self, phi: f64, sigma2: f64, tau2: f64) -> Array2<f64> {
        let n = self.state.n_actors();
        let mut cov = Array2::<f64>::zeros((n, n));
        let mut p = 0;
        for i in 0..n {
            cov[[i, i]] = sigma2 + tau2;
            for j in i + 1..n {
                let c = sigma2 * (-phi * self.dist[p]).exp();
                cov[[i, j]] = c;
                cov[[j, i]] = c;
                p += 1;
            }
        }
        cov
    }

    fn gp_cache(&self) -> Result<GpCache> {
        let s = &self.state;
        let cov = self.covariance_from_cache(s.phi, s.sigma2, s.tau2);
        GpCache::new(&cov, self.x, s.beta)
    }

    /// Per-actor random walk on latent positions.
    ///
    /// The attribute term uses [`GpCache`] rank-restricted updates, with one
    /// full refactorization at the start of every call.
    pub fn update_z<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let n = self.state.n_actors();
        let k = self.state.latent_dim();
        let n_layers = self.state.n_layers();
        let mut gp = if self.tiers.attributes {
            Some(self.gp_cache()?)
        } else {
            None
        };
        let mut prop = vec![0.0; k];
        let mut new_dist = vec![0.0; n];
        let mut col = vec![0.0; n];
        for i in 0..n {
            let step = self.scales.z[i];
            if step == 0.0 {
                continue;
            }
            for (c, v) in prop.iter_mut().enumerate() {
                let e: f64 = StandardNormal.sample(rng);
                *v = self.state.z[[i, c]] + step * e;
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                let zj = self.state.z.row(j);
                new_dist[j] = prop.iter().zip(zj.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            }

            let mut delta = 0.0;
            if self.tiers.edges {
                for l in 0..n_layers {
                    let layer = self.net.layer(l);
                    let (a, b, theta) = (self.state.a[l], self.state.b[l], self.state.theta[l]);
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        let p = pair_index(n, i, j);
                        let sign = match layer[p] {
                            Cell::Present => 1.0,
                            Cell::Absent => -1.0,
                            Cell::Missing => continue,
                        };
                        let base = a + b * self.absdx[p];
                        delta += ln_phi(sign * (base - theta * new_dist[j])) - ln_phi(sign * (base - theta * self.dist[p]));
                    }
                }
            }

            let gi = self.state.g[i];
            let k2 = self.state.kappa2[gi];
            let mu = self.state.mu.row(gi);
            let sq_new: f64 = prop.iter().zip(mu.iter()).map(|(p, m)| (p - m) * (p - m)).sum();
            let sq_cur: f64 = self.state.z.row(i).iter().zip(mu.iter()).map(|(p, m)| (p - m) * (p - m)).sum();
            delta += -0.5 * (sq_new - sq_cur) / k2;

            let mut column = None;
            if let Some(cache) = gp.as_mut() {
                let s = &self.state;
                for j in 0..n {
                    col[j] = if j == i { 0.0 } else { s.sigma2 * (-s.phi * new_dist[j]).exp() };
                }
                let mut cp = cache.propose(i, &col);
                if !cp.delta.is_finite() {
                    // Drift in the cached precision: refactor and retry once.
                    *cache = self.gp_cache()?;
                    cp = cache.propose(i, &col);
                    if !cp.delta.is_finite() {
                        return Err(Error::Numerical(format!(
                            "attribute covariance lost definiteness moving actor {}",
                            i + 1
                        )));
                    }
                }
                if let Some(audit) = self.audit.as_mut() {
                    let xv = AttributeVector::new(self.x.to_vec())?;
                    let mut moved = self.state.clone();
                    for c in 0..k {
                        moved.z[[i, c]] = prop[c];
                    }
                    let full = attr_logdensity(&xv, &moved)? - attr_logdensity(&xv, &self.state)?;
                    audit.checked += 1;
                    audit.max_abs_error = audit.max_abs_error.max((full - cp.delta).abs());
                }
                delta += cp.delta;
                column = Some(cp);
            }

            let u: f64 = rng.random();
            let accept = u.ln() < delta;
            if accept {
                for c in 0..k {
                    self.state.z[[i, c]] = prop[c];
                }
                for j in 0..n {
                    if j != i {
                        self.dist[pair_index(n, i, j)] = new_dist[j];
                    }
                }
                if let (Some(cache), Some(cp)) = (gp.as_mut(), column) {
                    cache.accept(i, cp)?;
                }
            }
            self.counters.z[i].record(accept);
        }
        Ok(())
    }

    /// Metropolis move along the direction the edge tier cannot see:
    /// `z -> c z`, `mu -> c mu`, `kappa2 -> c^2 kappa2`, `theta -> theta / c`
    /// with `ln c` a Gaussian step. Edge terms are unchanged; the attribute
    /// term is re-evaluated because `phi` is held fixed.
    pub fn update_dilation<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let step = self.scales.dilation;
        if step == 0.0 {
            return Ok(());
        }
        let hp = self.hyper;
        let e: f64 = StandardNormal.sample(rng);
        let log_c = step * e;
        let c = log_c.exp();
        let s = &self.state;
        let (n, k, h, l) = (s.n_actors() as f64, s.latent_dim() as f64, s.n_groups() as f64, s.n_layers() as f64);

        let mut log_ratio = 0.0;
        if self.tiers.attributes {
            let cur = self.attr_loglik(s.phi, s.sigma2, s.tau2, s.beta)?;
            for d in self.dist.iter_mut() {
                *d *= c;
            }
            let prop = self.attr_loglik(s.phi, s.sigma2, s.tau2, s.beta);
            for d in self.dist.iter_mut() {
                *d /= c;
            }
            log_ratio += prop? - cur;
        }
        // Mixture normalizers: each z_i term gains -K ln c.
        log_ratio -= n * k * log_c;
        for row in s.mu.rows() {
            for (d, &m) in row.iter().enumerate() {
                let (a, b) = (m - hp.m_mu[d], c * m - hp.m_mu[d]);
                log_ratio -= 0.5 * (b * b - a * a) / hp.nu_mu2;
            }
        }
        for &k2 in &s.kappa2 {
            let new = c * c * k2;
            log_ratio += -(hp.gamma1 + 1.0) * (new.ln() - k2.ln()) - hp.gamma2 * (1.0 / new - 1.0 / k2);
        }
        for &t in &s.theta {
            let new = t / c;
            log_ratio += (hp.lambda1 - 1.0) * (new.ln() - t.ln()) - hp.lambda2 * (new - t);
        }
        // Jacobian of the map on (z, mu, kappa2, theta).
        log_ratio += (n * k + h * k + 2.0 * h - l) * log_c;

        let u: f64 = rng.random();
        let accept = u.ln() < log_ratio;
        if accept {
            let s = &mut self.state;
            s.z.mapv_inplace(|v| v * c);
            s.mu.mapv_inplace(|v| v * c);
            s.kappa2.iter_mut().for_each(|v| *v *= c * c);
            s.theta.iter_mut().for_each(|v| *v /= c);
            self.recompute_distances();
        }
        self.counters.dilation.record(accept);
        Ok(())
    }

    fn attr_loglik(&self, phi: f64, sigma2: f64, tau2: f64, beta: f64) -> Result<f64> {
        let cov = self.covariance_from_cache(phi, sigma2, tau2);
        let chol = crate::model::linalg::Cholesky::new(&cov)?;
        let resid: Vec<f64> = self.x.iter().map(|v| v - beta).collect();
        let n = self.x.len() as f64;
        Ok(-0.5 * (n * LN_2PI + chol.log_det() + chol.quad_form(&resid)))
    }

    /// `beta` by conjugate Gibbs; `sigma2`, `tau2` by log-scale random walk;
    /// `phi` by a random walk reflected into `[u1, u2]`.
    pub fn update_gp_params<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let h = self.hyper;
        let attrs = self.tiers.attributes;

        let (mut prec, mut lin) = (1.0 / h.nu_beta2, 0.0);
        if attrs {
            let cache = self.gp_cache()?;
            let (one_p_one, one_p_x) = cache.beta_sufficient(self.x);
            prec += one_p_one;
            lin += one_p_x;
        }
        let e: f64 = StandardNormal.sample(rng);
        self.state.beta = lin / prec + e / prec.sqrt();

        let s = self.state.clone();
        let mut cur_ll = if attrs {
            self.attr_loglik(s.phi, s.sigma2, s.tau2, s.beta)?
        } else {
            0.0
        };
        let inv_gamma_log = |v: f64, shape: f64, scale: f64| -(shape + 1.0) * v.ln() - scale / v;

        // sigma2, with Jacobian on the log scale.
        let step = self.scales.sigma2;
        if step != 0.0 {
            let cur = self.state.sigma2;
            let e: f64 = StandardNormal.sample(rng);
            let prop = cur * (step * e).exp();
            let prop_ll = if attrs {
                self.attr_loglik(self.state.phi, prop, self.state.tau2, self.state.beta)?
            } else {
                0.0
            };
            let log_ratio = prop_ll - cur_ll + inv_gamma_log(prop, h.eta1, h.eta2) - inv_gamma_log(cur, h.eta1, h.eta2)
                + prop.ln()
                - cur.ln();
            let u: f64 = rng.random();
            let accept = prop > 0.0 && prop.is_finite() && u.ln() < log_ratio;
            if accept {
                self.state.sigma2 = prop;
                cur_ll = prop_ll;
            }
            self.counters.sigma2.record(accept);
        }

        let step = self.scales.tau2;
        if step != 0.0 {
            let cur = self.state.tau2;
            let e: f64 = StandardNormal.sample(rng);
            let prop = cur * (step * e).exp();
            let prop_ll = if attrs {
                self.attr_loglik(self.state.phi, self.state.sigma2, prop, self.state.beta)?
            } else {
                0.0
            };
            let log_ratio = prop_ll - cur_ll + inv_gamma_log(prop, h.xi1, h.xi2) - inv_gamma_log(cur, h.xi1, h.xi2)
                + prop.ln()
                - cur.ln();
            let u: f64 = rng.random();
            let accept = prop > 0.0 && prop.is_finite() && u.ln() < log_ratio;
            if accept {
                self.state.tau2 = prop;
                cur_ll = prop_ll;
            }
            self.counters.tau2.record(accept);
        }

        let step = self.scales.phi;
        if step != 0.0 {
            let cur = self.state.phi;
            let e: f64 = StandardNormal.sample(rng);
            let prop = reflect(cur + step * e, h.u1, h.u2);
            let prop_ll = if attrs {
                self.attr_loglik(prop, self.state.sigma2, self.state.tau2, self.state.beta)?
            } else {
                0.0
            };
            let u: f64 = rng.random();
            let accept = u.ln() < prop_ll - cur_ll;
            if accept {
                self.state.phi = prop;
            }
            self.counters.phi.record(accept);
        }
        Ok(())
    }

    /// Conjugate updates of labels, weights, component means and variances.
    /// Empty components draw their mean and variance from the prior.
    pub fn update_mixture<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let hp = self.hyper;
        let n = self.state.n_actors();
        let k = self.state.latent_dim();
        let h = self.state.n_groups();
        let kf = k as f64;

        if h > 1 {
            let mut logp = vec![0.0; h];
            for i in 0..n {
                let zi = self.state.z.row(i);
                for c in 0..h {
                    let k2 = self.state.kappa2[c];
                    let sq: f64 = zi.iter().zip(self.state.mu.row(c).iter()).map(|(p, m)| (p - m) * (p - m)).sum();
                    logp[c] = self.state.omega[c].ln() - 0.5 * kf * k2.ln() - 0.5 * sq / k2;
                }
                let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let total: f64 = logp.iter().map(|v| (v - max).exp()).sum();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = h - 1;
                for (c, v) in logp.iter().enumerate() {
                    acc += (v - max).exp();
                    if u < acc {
                        pick = c;
                        break;
                    }
                }
                self.state.g[i] = pick;
            }
        }

        let mut counts = vec![0usize; h];
        for &gi in &self.state.g {
            counts[gi] += 1;
        }

        if h > 1 {
            let mut w: Vec<f64> = (0..h)
                .map(|c| {
                    let shape = hp.alpha[c] + counts[c] as f64;
                    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
                })
                .collect();
            for v in w.iter_mut() {
                *v = v.max(f64::MIN_POSITIVE);
            }
            let total: f64 = w.iter().sum();
            for (c, v) in w.into_iter().enumerate() {
                self.state.omega[c] = v / total;
            }
        } else {
            self.state.omega[0] = 1.0;
        }

        let mut sums = Array2::<f64>::zeros((h, k));
        for i in 0..n {
            let gi = self.state.g[i];
            for c in 0..k {
                sums[[gi, c]] += self.state.z[[i, c]];
            }
        }
        for c in 0..h {
            let k2 = self.state.kappa2[c];
            let prec = 1.0 / hp.nu_mu2 + counts[c] as f64 / k2;
            let sd = 1.0 / prec.sqrt();
            for d in 0..k {
                let mean = (hp.m_mu[d] / hp.nu_mu2 + sums[[c, d]] / k2) / prec;
                let e: f64 = StandardNormal.sample(rng);
                self.state.mu[[c, d]] = mean + sd * e;
            }
        }

        let mut ss = vec![0.0; h];
        for i in 0..n {
            let gi = self.state.g[i];
            ss[gi] += self
                .state
                .z
                .row(i)
                .iter()
                .zip(self.state.mu.row(gi).iter())
                .map(|(p, m)| (p - m) * (p - m))
                .sum::<f64>();
        }
        for c in 0..h {
            let shape = hp.gamma1 + 0.5 * counts[c] as f64 * kf;
            let scale = hp.gamma2 + 0.5 * ss[c];
            let gdraw: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
            self.state.kappa2[c] = (scale / gdraw).max(f64::MIN_POSITIVE);
        }
    }

    /// Data log-likelihood at the current state: edge terms over observed
    /// cells plus the attribute density.
    pub fn loglik(&self) -> Result<f64> {
        let mut total = 0.0;
        for l in 0..self.observed.len() {
            for (k, &p) in self.observed[l].iter().enumerate() {
                let eta = self.eta(l, p);
                total += if self.observed_y[l][k] { ln_phi(eta) } else { ln_phi(-eta) };
            }
        }
        let s = &self.state;
        Ok(total + self.attr_loglik(s.phi, s.sigma2, s.tau2, s.beta)?)
    }

    /// Edge log-likelihood of every observed cell, layer-major.
    pub fn pointwise_loglik(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in 0..self.observed.len() {
            for (k, &p) in self.observed[l].iter().enumerate() {
                let eta = self.eta(l, p);
                out.push(if self.observed_y[l][k] { ln_phi(eta) } else { ln_phi(-eta) });
            }
        }
        out
    }

    /// Robbins-Monro update of every scale toward `target` acceptance using
    /// the counters since the last call, which are then reset.
    pub(crate) fn adapt(&mut self, target: f64, gain: f64) {
        let adj = |scale: &mut f64, c: &Counter| {
            if *scale > 0.0 && c.proposed > 0 {
                *scale *= (gain * (c.rate() - target)).exp();
            }
        };
        for (s, c) in self.scales.z.iter_mut().zip(&self.counters.z) {
            adj(s, c);
        }
        for (s, c) in self.scales.theta.iter_mut().zip(&self.counters.theta) {
            adj(s, c);
        }
        adj(&mut self.scales.sigma2, &self.counters.sigma2);
        adj(&mut self.scales.tau2, &self.counters.tau2);
        adj(&mut self.scales.phi, &self.counters.phi);
        adj(&mut self.scales.dilation, &self.counters.dilation);
        // Reflection makes very wide phi steps pointless.
        let width = self.hyper.u2 - self.hyper.u1;
        self.scales.phi = self.scales.phi.min(width);
        self.reset_counters();
    }

    pub(crate) fn reset_counters(&mut self) {
        self.counters = Counters::new(self.state.n_actors(), self.state.n_layers());
    }
}

/// Reflects `v` into `[lo, hi]`.
pub(crate) fn reflect(mut v: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if !v.is_finite() {
        return 0.5 * (lo + hi);
    }
    // Fold onto a period of 2 * width first.
    let period = 2.0 * width;
    v = (v - lo).rem_euclid(period);
    if v > width {
        v = period - v;
    }
    lo + v
}
