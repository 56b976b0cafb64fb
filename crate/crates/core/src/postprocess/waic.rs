use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WAIC and its two components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// WAIC from a draws-by-cells matrix of pointwise log-likelihoods. The
/// penalty uses the `n - 1` sample variance over draws.
pub fn waic(pointwise: &[Vec<f64>]) -> Result<Waic> {
    if pointwise.len() < 2 {
        return Err(Error::invalid("WAIC needs at least two draws"));
    }
    let cells = pointwise[0].len();
    if pointwise.iter().any(|r| r.len() != cells) {
        return Err(Error::dim("draws have different numbers of cells"));
    }
    let m = pointwise.len() as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for c in 0..cells {
        let col = pointwise.iter().map(|r| r[c]);
        let max = col.clone().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numerical(format!("cell {} has non-finite log-likelihood", c + 1)));
        }
        let sum_exp: f64 = col.clone().map(|v| (v - max).exp()).sum();
        lppd += max + (sum_exp / m).ln();
        let mean = col.clone().sum::<f64>() / m;
        p_waic += col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    }
    Ok(Waic {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}
