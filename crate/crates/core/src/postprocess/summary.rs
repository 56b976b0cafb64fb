use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::State;

/// Posterior mean and equal-tailed credible interval of one quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub level: f64,
    pub rows: Vec<SummaryRow>,
}

impl ChainSummary {
    pub fn get(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Linear-interpolation sample quantile (the common "type 7" rule).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and equal-tailed interval at `level` of a sample.
pub fn summarize(name: impl Into<String>, values: &[f64], level: f64) -> Result<SummaryRow> {
    if values.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level {level} outside (0, 1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok(SummaryRow {
        name: name.into(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        lower: quantile(&sorted, tail),
        upper: quantile(&sorted, 1.0 - tail),
    })
}

/// Summaries of every scalar parameter plus `theta_l / theta_m` for every
/// ordered pair of layers. Mixture parameters are label-dependent and are
/// reported as stored.
pub fn summarize_chain(draws: &[State], level: f64) -> Result<ChainSummary> {
    let first = draws.first().ok_or_else(|| Error::invalid("empty chain"))?;
    let l = first.n_layers();
    let h = first.n_groups();
    let k = first.latent_dim();
    let mut rows = Vec::new();
    let mut add = |name: String, f: &dyn Fn(&State) -> f64| -> Result<()> {
        let v: Vec<f64> = draws.iter().map(f).collect();
        rows.push(summarize(name, &v, level)?);
        Ok(())
    };
    for j in 0..l {
        add(format!("a_{}", j + 1), &|s| s.a[j])?;
    }
    for j in 0..l {
        add(format!("b_{}", j + 1), &|s| s.b[j])?;
    }
    for j in 0..l {
        add(format!("theta_{}", j + 1), &|s| s.theta[j])?;
    }
    add("beta".into(), &|s| s.beta)?;
    add("sigma2".into(), &|s| s.sigma2)?;
    add("tau2".into(), &|s| s.tau2)?;
    add("phi".into(), &|s| s.phi)?;
    for c in 0..h {
        add(format!("omega_{}", c + 1), &|s| s.omega[c])?;
    }
    for c in 0..h {
        for d in 0..k {
            add(format!("mu_{}_{}", c + 1, d + 1), &|s| s.mu[[c, d]])?;
        }
    }
    for c in 0..h {
        add(format!("kappa2_{}", c + 1), &|s| s.kappa2[c])?;
    }
    for p in 0..l {
        for q in 0..l {
            if p != q {
                add(format!("theta_{}/theta_{}", p + 1, q + 1), &|s| s.theta[p] / s.theta[q])?;
            }
        }
    }
    Ok(ChainSummary { level, rows })
}
