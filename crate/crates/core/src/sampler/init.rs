use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::AttributeVector;
use crate::{Hyper, State};

/// Starting state for a chain.
///
/// Mixture parameters come from their priors and positions from the
/// resulting mixture; `(a, b)` from their priors with `theta = 1`; `beta`
/// and the variances are moment-matched to `x`; `phi` sits mid-interval.
pub fn initial_state<R: Rng + ?Sized>(
    rng: &mut R,
    x: &AttributeVector<f64>,
    n_layers: usize,
    hyper: &Hyper,
) -> Result<State> {
    hyper.validate()?;
    let n = x.len();
    if n < 2 || n_layers == 0 {
        return Err(Error::dim("need at least two actors and one layer"));
    }
    let (k, h) = (hyper.k, hyper.h);

    let mut omega: Vec<f64> = hyper
        .alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map(|d| d.sample(rng)).unwrap_or(1.0).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = omega.iter().sum();
    omega.iter_mut().for_each(|w| *w /= total);

    let g: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            omega
                .iter()
                .position(|w| {
                    acc += w;
                    u < acc
                })
                .unwrap_or(h - 1)
        })
        .collect();

    let mu_sd = hyper.nu_mu2.sqrt();
    let mut mu = Array2::zeros((h, k));
    for c in 0..h {
        for d in 0..k {
            let e: f64 = StandardNormal.sample(rng);
            mu[[c, d]] = hyper.m_mu[d] + mu_sd * e;
        }
    }
    let kappa2: Vec<f64> = (0..h)
        .map(|_| {
            let gd: f64 = Gamma::new(hyper.gamma1, 1.0).expect("validated shape").sample(rng);
            (hyper.gamma2 / gd).max(f64::MIN_POSITIVE)
        })
        .collect();

    let mut z = Array2::zeros((n, k));
    for i in 0..n {
        let sd = kappa2[g[i]].sqrt();
        for d in 0..k {
            let e: f64 = StandardNormal.sample(rng);
            z[[i, d]] = mu[[g[i], d]] + sd * e;
        }
    }

    let na = Normal::new(hyper.m_a, hyper.nu_a2.sqrt()).expect("validated variance");
    let nb = Normal::new(hyper.m_b, hyper.nu_b2.sqrt()).expect("validated variance");
    let a: Vec<f64> = (0..n_layers).map(|_| na.sample(rng)).collect();
    let b: Vec<f64> = (0..n_layers).map(|_| nb.sample(rng)).collect();

    let var = x.sample_variance();
    let half = if var > 0.0 && var.is_finite() { 0.5 * var } else { 0.5 };

    let state = State {
        z,
        g,
        a,
        b,
        theta: vec![1.0; n_layers],
        beta: x.mean(),
        sigma2: half,
        tau2: half,
        phi: 0.5 * (hyper.u1 + hyper.u2),
        omega,
        mu,
        kappa2,
    };
    state.validate()?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::ChainRng;
    use rand::SeedableRng;

    #[test]
    fn shapes_and_moments() {
        let x = AttributeVector::new(vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let hyper = Hyper::defaults(2, 3);
        let mut rng = ChainRng::seed_from_u64(5);
        let s = initial_state(&mut rng, &x, 2, &hyper).unwrap();
        assert_eq!(s.z.dim(), (4, 2));
        assert_eq!(s.mu.dim(), (3, 2));
        assert_eq!(s.theta, vec![1.0, 1.0]);
        assert_eq!(s.beta, 3.0);
        assert!((s.sigma2 - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.phi, 0.5);
        assert!((s.omega.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.g.iter().all(|&g| g < 3));
    }

    #[test]
    fn seeded_start_is_reproducible() {
        let x = AttributeVector::new(vec![0.5, -1.0, 2.0]).unwrap();
        let hyper = Hyper::defaults(2, 2);
        let a = initial_state(&mut ChainRng::seed_from_u64(9), &x, 1, &hyper).unwrap();
        let b = initial_state(&mut ChainRng::seed_from_u64(9), &x, 1, &hyper).unwrap();
        assert_eq!(a, b);
    }
}
