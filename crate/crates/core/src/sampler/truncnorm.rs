//! One-sided truncated normal draws for probit data augmentation.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Standard normal conditioned on `z > lower`.
///
/// Plain rejection from `N(0, 1)` when `lower <= 0`; otherwise Robert's
/// translated-exponential proposal with rate `(lower + sqrt(lower^2 + 4)) / 2`,
/// whose acceptance stays above 0.75 for any positive bound.
pub fn std_normal_above<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    if lower <= 0.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z > lower {
                return z;
            }
        }
    }
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = lower + e / rate;
        let u: f64 = rng.random();
        let d = z - rate;
        if u.ln() <= -0.5 * d * d {
            return z;
        }
    }
}

/// `N(mean, 1)` truncated to `(0, inf)`.
#[inline]
pub fn positive_part<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let z = mean + std_normal_above(rng, -mean);
    // Rounding can land exactly on the bound for huge |mean|.
    if z > 0.0 {
        z
    } else {
        f64::MIN_POSITIVE
    }
}

/// `N(mean, 1)` truncated to `(-inf, 0]`.
#[inline]
pub fn negative_part<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let z = mean - std_normal_above(rng, mean);
    z.min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_normal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| negative_part(&mut rng, 0.0)).sum::<f64>() / n as f64;
        let want = -(2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - want).abs() < 0.01, "{mean} vs {want}");
    }

    #[test]
    fn respects_sign_far_in_tails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &eta in &[-30.0, -20.0, -5.0, 0.0, 5.0, 20.0, 30.0] {
            for _ in 0..200 {
                assert!(positive_part(&mut rng, eta) > 0.0);
                assert!(negative_part(&mut rng, eta) <= 0.0);
            }
        }
        let v = positive_part(&mut rng, 20.0);
        assert!((v - 20.0).abs() < 6.0);
    }

    #[test]
    fn tail_moments_match_mills_ratio() {
        // E[Z | Z > c] = phi(c) / (1 - Phi(c)).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &c in &[0.5, 3.0, 12.0] {
            let n = 50_000;
            let draws: Vec<f64> = (0..n).map(|_| std_normal_above(&mut rng, c)).collect();
            let m = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1) as f64;
            let pdf = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let sf = crate::model::normal_cdf(-c);
            let want = pdf / sf;
            let se = (var / n as f64).sqrt();
            assert!((m - want).abs() < 4.0 * se, "c={c}: {m} vs {want}");
        }
    }
}
