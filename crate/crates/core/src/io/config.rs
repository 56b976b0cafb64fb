use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::postprocess::{EstimatorOptions, PartitionMethod};
use crate::sampler::ChainConfig;
use crate::Hyper;

/// A scalar broadcast to every entry, or an explicit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, len: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(v) => Ok(vec![*v; len]),
            Self::Vec(v) if v.len() == len => Ok(v.clone()),
            Self::Vec(v) => Err(Error::Config(format!("{name} has {} entries, expected {len}", v.len()))),
        }
    }
}

/// Where the data lives. Paths are relative to the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// One N x N adjacency CSV per layer.
    pub layers: Vec<PathBuf>,
    /// Alternative to `layers`: edge list with columns `i,j[,layer]`.
    pub edges: Option<PathBuf>,
    /// Pairs with unknown status, same columns as `edges`.
    pub missing: Option<PathBuf>,
    /// Layer count for edge-list input; defaults to the largest layer seen.
    pub n_layers: Option<usize>,
    /// One-column attribute CSV with a header.
    pub attributes: PathBuf,
    /// Optional ground truth (`actor,group[,z_1..]`) for simulation studies.
    pub truth: Option<PathBuf>,
    /// Center and scale `x` to unit sample variance on load.
    #[serde(default = "yes")]
    pub standardize: bool,
    pub output: PathBuf,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k: usize,
    pub h: usize,
}

/// Overrides of the default priors; anything omitted keeps its default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub m_a: Option<f64>,
    pub nu_a2: Option<f64>,
    pub m_b: Option<f64>,
    pub nu_b2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub nu_beta2: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub alpha: Option<ScalarOrVec>,
    pub m_mu: Option<ScalarOrVec>,
    pub nu_mu2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

/// Which configuration alignment uses as its reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceChoice {
    /// The last stored draw.
    #[default]
    Last,
    /// The true positions from the truth file.
    Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub methods: Vec<PartitionMethod>,
    /// Credible level of the summary intervals.
    pub level: f64,
    pub gof_stride: usize,
    pub gof_seed: u64,
    pub gof_regenerate_x: bool,
    pub reference: ReferenceChoice,
    pub max_groups: Option<usize>,
    pub restarts: usize,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            methods: vec![PartitionMethod::MaxPear, PartitionMethod::MinBinder, PartitionMethod::GreedyEpl],
            level: 0.95,
            gof_stride: 10,
            gof_seed: 1,
            gof_regenerate_x: false,
            reference: ReferenceChoice::Last,
            max_groups: None,
            restarts: 5,
        }
    }
}

impl PostprocessConfig {
    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            max_groups: self.max_groups,
            restarts: self.restarts,
            ..EstimatorOptions::default()
        }
    }
}

/// Everything a `fit` run needs, read from a TOML file.
///
/// ```toml
/// [data]
/// layers = ["advice.csv", "friendship.csv"]
/// attributes = "age.csv"
/// output = "out"
///
/// [model]
/// k = 2
/// h = 5
///
/// [priors]          # optional overrides
/// nu_beta2 = 100.0
///
/// [chain]           # optional, see ChainConfig
/// n_adapt = 2000
/// seed = 7
///
/// [postprocess]     # optional
/// methods = ["maxpear", "greedyepl"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub postprocess: PostprocessConfig,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file; relative paths resolve against
    /// its directory (made absolute).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::parse(path, m),
            other => other,
        })?;
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.base_dir = std::path::absolute(parent).map_err(|e| Error::io(parent, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Copy with every data path resolved, so it can be saved anywhere.
    pub fn with_absolute_paths(&self) -> Self {
        let mut c = self.clone();
        let d = &mut c.data;
        let fix = |p: &mut PathBuf| *p = self.resolve(p);
        d.layers.iter_mut().for_each(fix);
        d.edges.iter_mut().for_each(fix);
        d.missing.iter_mut().for_each(fix);
        d.truth.iter_mut().for_each(fix);
        fix(&mut d.attributes);
        fix(&mut d.output);
        c
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.data.output)
    }

    /// Defaults with the overrides applied.
    pub fn hyperparameters(&self) -> Result<Hyper> {
        let mut h = Hyper::defaults(self.model.k, self.model.h);
        let p = &self.priors;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut h.m_a, p.m_a);
        set(&mut h.nu_a2, p.nu_a2);
        set(&mut h.m_b, p.m_b);
        set(&mut h.nu_b2, p.nu_b2);
        set(&mut h.lambda1, p.lambda1);
        set(&mut h.lambda2, p.lambda2);
        set(&mut h.nu_beta2, p.nu_beta2);
        set(&mut h.eta1, p.eta1);
        set(&mut h.eta2, p.eta2);
        set(&mut h.xi1, p.xi1);
        set(&mut h.xi2, p.xi2);
        set(&mut h.u1, p.u1);
        set(&mut h.u2, p.u2);
        set(&mut h.nu_mu2, p.nu_mu2);
        set(&mut h.gamma1, p.gamma1);
        set(&mut h.gamma2, p.gamma2);
        if let Some(a) = &p.alpha {
            h.alpha = a.expand(self.model.h, "alpha")?;
        }
        if let Some(m) = &p.m_mu {
            h.m_mu = m.expand(self.model.k, "m_mu")?;
        }
        h.validate()?;
        Ok(h)
    }

    /// Checks values and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        self.hyperparameters()?;
        self.chain.validate()?;
        let d = &self.data;
        match (d.layers.is_empty(), &d.edges) {
            (true, None) => return Err(Error::Config("[data] needs `layers` or `edges`".into())),
            (false, Some(_)) => return Err(Error::Config("[data] takes `layers` or `edges`, not both".into())),
            _ => {}
        }
        let mut inputs: Vec<&PathBuf> = d.layers.iter().collect();
        inputs.extend(d.edges.iter());
        inputs.extend(d.missing.iter());
        inputs.extend(d.truth.iter());
        inputs.push(&d.attributes);
        for p in inputs {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", full.display())));
            }
        }
        let pp = &self.postprocess;
        if !(pp.level > 0.0 && pp.level < 1.0) {
            return Err(Error::Config("postprocess.level must be in (0, 1)".into()));
        }
        if pp.gof_stride == 0 {
            return Err(Error::Config("postprocess.gof_stride must be at least 1".into()));
        }
        if pp.reference == ReferenceChoice::Truth && d.truth.is_none() {
            return Err(Error::Config("reference = \"truth\" needs data.truth".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
layers = ["a.csv"]
attributes = "x.csv"
output = "out"

[model]
k = 2
h = 3
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let h = cfg.hyperparameters().unwrap();
        assert_eq!(h, Hyper::defaults(2, 3));
        assert_eq!(cfg.chain, ChainConfig::default());
        assert!(cfg.data.standardize);
        assert_eq!(cfg.postprocess.methods.len(), 3);
    }

    #[test]
    fn overrides_and_vectors() {
        let text = format!(
            "{MINIMAL}\n[priors]\nnu_beta2 = 4.0\nalpha = [1.0, 2.0, 3.0]\nm_mu = 0.5\n[chain]\nseed = 9\nthin = 2\n[postprocess]\nmethods = [\"maxpear\"]\nreference = \"last\"\n"
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        let h = cfg.hyperparameters().unwrap();
        assert_eq!(h.nu_beta2, 4.0);
        assert_eq!(h.alpha, vec![1.0, 2.0, 3.0]);
        assert_eq!(h.m_mu, vec![0.5, 0.5]);
        assert_eq!(cfg.chain.seed, 9);
        assert_eq!(cfg.chain.n_keep, 10_000);
        assert_eq!(cfg.postprocess.methods, vec![PartitionMethod::MaxPear]);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_configs() {
        assert!(RunConfig::from_toml("[model]\nk = 2\nh = 2\n").is_err());
        let text = format!("{MINIMAL}\n[priors]\nalpha = [1.0]\n");
        assert!(RunConfig::from_toml(&text).unwrap().hyperparameters().is_err());
        let text = format!("{MINIMAL}\n[priors]\nbogus = 1.0\n");
        assert!(RunConfig::from_toml(&text).is_err());
        let text = format!("{MINIMAL}\n[chain]\nthin = 0\n");
        assert!(RunConfig::from_toml(&text).unwrap().validate().is_err());
    }

    #[test]
    fn missing_inputs_fail_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert!(err.is_input());
        std::fs::write(dir.path().join("a.csv"), "0,1\n1,0\n").unwrap();
        std::fs::write(dir.path().join("x.csv"), "x\n1\n2\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir(), dir.path().join("out"));
        assert_eq!(cfg.hash().len(), 64);
    }
}
