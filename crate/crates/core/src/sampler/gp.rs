//! Precision-matrix cache for single-actor moves in the Gaussian-process tier.
//!
//! Moving `z_i` changes only row and column `i` of the covariance, and the
//! marginal density of `x_{-i}` does not involve `z_i`. The density change is
//! therefore the change in the conditional `x_i | x_{-i}`, which needs
//! `A^{-1} = (Sigma_{-i,-i})^{-1} = P_{-i,-i} - p p^T / P_ii` from the current
//! precision `P`. Accepting a move updates `P` and `ln det Sigma` in `O(N^2)`.

use crate::error::{Error, Result};
use crate::model::linalg::Cholesky;
use crate::real::LN_2PI;
use ndarray::Array2;

#[derive(Clone, Debug)]
pub(crate) struct GpCache {
    n: usize,
    /// Row-major `N x N` precision matrix.
    prec: Vec<f64>,
    log_det: f64,
    /// `x - beta`.
    resid: Vec<f64>,
    /// `P (x - beta)`.
    pr: Vec<f64>,
    diag: f64,
}

/// Outcome of evaluating a proposed covariance column for actor `i`.
pub(crate) struct ColumnProposal {
    pub delta: f64,
    q: Vec<f64>,
    var: f64,
}

impl GpCache {
    pub fn new(cov: &Array2<f64>, x: &[f64], beta: f64) -> Result<Self> {
        let n = x.len();
        let mut cache = Self {
            n,
            prec: vec![0.0; n * n],
            log_det: 0.0,
            resid: vec![0.0; n],
            pr: vec![0.0; n],
            diag: 0.0,
        };
        cache.refresh(cov, x, beta)?;
        Ok(cache)
    }

    /// Full refactorization from a covariance matrix.
    pub fn refresh(&mut self, cov: &Array2<f64>, x: &[f64], beta: f64) -> Result<()> {
        let chol = Cholesky::new(cov)?;
        let inv = chol.inverse();
        self.prec.copy_from_slice(inv.as_slice().expect("standard layout"));
        self.log_det = chol.log_det();
        self.diag = cov[[0, 0]];
        for (r, &v) in self.resid.iter_mut().zip(x) {
            *r = v - beta;
        }
        self.update_pr();
        Ok(())
    }

    fn update_pr(&mut self) {
        let n = self.n;
        for j in 0..n {
            let row = &self.prec[j * n..(j + 1) * n];
            self.pr[j] = row.iter().zip(&self.resid).map(|(p, r)| p * r).sum();
        }
    }

    #[cfg(test)]
    pub fn log_density(&self) -> f64 {
        let quad: f64 = self.resid.iter().zip(&self.pr).map(|(r, u)| r * u).sum();
        -0.5 * (self.n as f64 * LN_2PI + self.log_det + quad)
    }

    /// Log-density change when column `i` of the covariance becomes `col`
    /// (entry `i` of `col` is ignored; the diagonal never changes).
    pub fn propose(&self, i: usize, col: &[f64]) -> ColumnProposal {
        let n = self.n;
        let p = &self.prec;
        let pii = p[i * n + i];

        // Current conditional: residual u_i / P_ii, variance 1 / P_ii.
        let e_cur = self.pr[i] / pii;
        let cur = -0.5 * (LN_2PI - pii.ln() + e_cur * e_cur * pii);

        // t = P c with c_i = 0, then q = A^{-1} c.
        let mut t = vec![0.0; n];
        for (j, tj) in t.iter_mut().enumerate() {
            let row = &p[j * n..(j + 1) * n];
            let mut s = 0.0;
            for k in 0..n {
                if k != i {
                    s += row[k] * col[k];
                }
            }
            *tj = s;
        }
        let ti = t[i];
        let ui = self.pr[i];
        let mut q = vec![0.0; n];
        let mut cq = 0.0;
        let mut mean = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let pji = p[j * n + i];
            q[j] = t[j] - pji * ti / pii;
            cq += col[j] * q[j];
            // w_j = (A^{-1} r_{-i})_j
            let w = self.pr[j] - pji * ui / pii;
            mean += col[j] * w;
        }
        let var = self.diag - cq;
        let delta = if var > 0.0 {
            let e = self.resid[i] - mean;
            -0.5 * (LN_2PI + var.ln() + e * e / var) - cur
        } else {
            f64::NAN
        };
        ColumnProposal { delta, q, var }
    }

    /// Commits an evaluated proposal for actor `i`.
    pub fn accept(&mut self, i: usize, prop: ColumnProposal) -> Result<()> {
        if !(prop.var > 0.0) {
            return Err(Error::Numerical("conditional variance is not positive".into()));
        }
        let n = self.n;
        let pii = self.prec[i * n + i];
        let pcol: Vec<f64> = (0..n).map(|j| self.prec[j * n + i]).collect();
        let inv_var = 1.0 / prop.var;
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i {
                    continue;
                }
                self.prec[j * n + k] += prop.q[j] * prop.q[k] * inv_var - pcol[j] * pcol[k] / pii;
            }
        }
        for j in 0..n {
            if j != i {
                let v = -prop.q[j] * inv_var;
                self.prec[j * n + i] = v;
                self.prec[i * n + j] = v;
            }
        }
        self.prec[i * n + i] = inv_var;
        self.log_det += prop.var.ln() + pii.ln();
        self.update_pr();
        Ok(())
    }

    /// `1^T P 1` and `1^T P x`, for the conjugate `beta` update.
    pub fn beta_sufficient(&self, x: &[f64]) -> (f64, f64) {
        let n = self.n;
        let mut one_p_one = 0.0;
        let mut one_p_x = 0.0;
        for j in 0..n {
            let row = &self.prec[j * n..(j + 1) * n];
            let rs: f64 = row.iter().sum();
            one_p_one += rs;
            one_p_x += rs * x[j];
        }
        (one_p_one, one_p_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{attr_logdensity, gp_covariance, AttributeVector, ModelState};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(n: usize, rng: &mut ChaCha8Rng) -> ModelState<f64> {
        let z = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>() * 3.0);
        ModelState {
            z,
            g: vec![0; n],
            a: vec![0.0],
            b: vec![0.0],
            theta: vec![1.0],
            beta: 0.3,
            sigma2: 1.2,
            tau2: 0.4,
            phi: 0.7,
            omega: vec![1.0],
            mu: array![[0.0, 0.0]],
            kappa2: vec![1.0],
        }
    }

    #[test]
    fn incremental_moves_match_full_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 7;
        let mut s = state(n, &mut rng);
        let xv: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x = AttributeVector::new(xv.clone()).unwrap();
        let cov = gp_covariance(&s.z, s.phi, s.sigma2, s.tau2).unwrap();
        let mut cache = GpCache::new(&cov, &xv, s.beta).unwrap();
        assert!((cache.log_density() - attr_logdensity(&x, &s).unwrap()).abs() < 1e-12);

        for step in 0..40 {
            let i = step % n;
            let mut moved = s.clone();
            moved.z[[i, 0]] += rng.random::<f64>() - 0.5;
            moved.z[[i, 1]] += rng.random::<f64>() - 0.5;
            let new_cov = gp_covariance(&moved.z, s.phi, s.sigma2, s.tau2).unwrap();
            let col: Vec<f64> = (0..n).map(|j| new_cov[[j, i]]).collect();
            let prop = cache.propose(i, &col);
            let full = attr_logdensity(&x, &moved).unwrap() - attr_logdensity(&x, &s).unwrap();
            assert!((prop.delta - full).abs() < 1e-10, "step {step}: {} vs {full}", prop.delta);
            cache.accept(i, prop).unwrap();
            s = moved;
            assert!((cache.log_density() - attr_logdensity(&x, &s).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = state(4, &mut rng);
        let xv = vec![0.5, -0.1, 0.2, 1.0];
        let cov = gp_covariance(&s.z, s.phi, s.sigma2, s.tau2).unwrap();
        let cache = GpCache::new(&cov, &xv, s.beta).unwrap();
        let chol = Cholesky::new(&cov).unwrap();
        let ones = chol.solve(&[1.0; 4]);
        let (a, b) = cache.beta_sufficient(&xv);
        assert!((a - ones.sum()).abs() < 1e-12);
        let want: f64 = ones.iter().zip(&xv).map(|(p, q)| p * q).sum();
        assert!((b - want).abs() < 1e-12);
    }
}
