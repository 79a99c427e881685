//! Experiment configuration: a JSON file whose fields command-line flags may
//! override.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use linsel_core::corpus::random_linear_instance;
use linsel_core::{
    make_hard_instance, make_unverifiable_instance, AlgorithmSpec, Instance, InstanceJson, Noise,
    RoundingRule, Settings, SolverConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Where the instance comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Hard {
        d_star: usize,
        eps: f64,
        #[serde(default)]
        extra_arm: bool,
    },
    Unverifiable {
        dim: usize,
    },
    Explicit {
        instance: InstanceJson,
    },
    /// Instance JSON on disk, relative to the working directory.
    File {
        path: PathBuf,
    },
    Random {
        seed: u64,
        arms: usize,
        dim: usize,
        d_star: usize,
    },
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec::Hard {
            d_star: 2,
            eps: 0.25,
            extra_arm: false,
        }
    }
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        Ok(match self {
            InstanceSpec::Hard {
                d_star,
                eps,
                extra_arm,
            } => make_hard_instance(*d_star, *eps, *extra_arm)?,
            InstanceSpec::Unverifiable { dim } => make_unverifiable_instance(*dim)?,
            InstanceSpec::Explicit { instance } => instance.build()?,
            InstanceSpec::File { path } => load_instance(path)?,
            InstanceSpec::Random {
                seed,
                arms,
                dim,
                d_star,
            } => {
                if *dim == 0 || *arms < *dim || *d_star == 0 || *d_star > *dim {
                    bail!("random instance needs 1 <= d_star <= dim <= arms");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                random_linear_instance(&mut rng, *arms, *dim, *d_star)
            }
        })
    }
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    let json: InstanceJson = serde_json::from_str(&text)
        .with_context(|| format!("parsing instance {}", path.display()))?;
    Ok(json.build()?)
}

fn default_trials() -> u64 {
    100
}

fn default_delta() -> f64 {
    0.1
}

fn default_zeta() -> f64 {
    0.25
}

/// Resolved experiment. Every field has a default, so `{}` is a valid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default)]
    pub algorithm: Option<AlgorithmSpec>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Accuracy for the misspecified measures; `None` skips them.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub rounding: RoundingRule,
    #[serde(default)]
    pub dedup_candidates: bool,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub pull_cap: Option<u64>,
    /// Not part of any report, so identical runs are byte-identical
    /// wherever they write.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn settings(&self) -> Settings {
        Settings {
            zeta: self.zeta,
            rule: self.rounding,
            dedup_candidates: self.dedup_candidates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()?;
        self.noise.validate()?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta = {} outside (0, 1)", self.delta);
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                bail!("eps = {eps} must be positive");
            }
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            bail!("solver needs tol > 0 and max_iter >= 1");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON rendering, which omits the output path.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.zeta, 0.25);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"trails": 3}"#).is_err());
        let bad = r#"{"instance": {"generator": "hard", "d_star": 3, "eps": 0.1, "colour": 1}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn generators_build() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"instance": {"generator": "random", "seed": 3, "arms": 5, "dim": 3, "d_star": 2},
                "algorithm": {"name": "master_fc", "delta": 0.1, "max_ell": 6}}"#,
        )
        .unwrap();
        let inst = cfg.instance.build().unwrap();
        assert_eq!(inst.dim(), 3);
        assert_eq!(inst.intrinsic_dim(), Some(2));
        let hard = InstanceSpec::Hard {
            d_star: 3,
            eps: 0.1,
            extra_arm: true,
        };
        assert_eq!(hard.build().unwrap().dim(), 4);
    }

    #[test]
    fn hash_ignores_output_path() {
        let mut a = ExperimentConfig::default();
        let h = a.hash();
        a.out = Some("elsewhere".into());
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 64);
    }
}
