use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::SinkhornConfig;
use crate::error::{Error, Result};
use crate::metrics::NmiNormalization;
use crate::objective::LossWeights;
use crate::pipeline::synthetic::SyntheticSpec;

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

/// How the cluster proportions `π` evolve during the clustering stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProportionMode {
    /// Estimated once from the initial K-means partition.
    Fixed,
    /// Re-estimated every epoch from the current hard assignment.
    #[default]
    PerEpoch,
}

/// Switches that remove one component of the method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    /// Drop the structure Laplacian (α = 0).
    pub no_structure: bool,
    /// Drop the attribute Laplacian (α = 1).
    pub no_attribute: bool,
    /// Drop both trace terms, keeping the orthogonality penalty.
    pub no_encoding_trace: bool,
    /// β = 0.
    pub no_orthogonality: bool,
    /// Replace the optimal-transport target with the sharpened
    /// frequency-normalized target.
    pub sdcn_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataSource>,
    /// Number of clusters; taken from the dataset when absent.
    pub n_clusters: Option<usize>,
    pub embedding_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub theta: f64,
    pub pretrain_epochs: usize,
    pub train_epochs: usize,
    pub seed: u64,
    pub ablation: AblationFlags,
    pub proportions: ProportionMode,
    /// Defaults to `1/(10K)`.
    pub proportion_floor: Option<f64>,
    pub kmeans_restarts: usize,
    pub sinkhorn_max_iterations: usize,
    pub sinkhorn_tolerance: f64,
    pub nmi_normalization: NmiNormalization,
    /// Score the hard assignment after every clustering epoch as well.
    pub record_epoch_metrics: bool,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            n_clusters: None,
            embedding_dim: 16,
            hidden_dims: vec![256],
            learning_rate: 0.005,
            weight_decay: 0.005,
            alpha: 0.5,
            beta: 4.0,
            gamma: 0.4,
            lambda: 5.0,
            theta: 1.0,
            pretrain_epochs: 100,
            train_epochs: 100,
            seed: 0,
            ablation: AblationFlags::default(),
            proportions: ProportionMode::PerEpoch,
            proportion_floor: None,
            kmeans_restarts: crate::clustering::DEFAULT_RESTARTS,
            sinkhorn_max_iterations: 1000,
            sinkhorn_tolerance: 1e-6,
            nmi_normalization: NmiNormalization::Geometric,
            record_epoch_metrics: false,
            deterministic: true,
        }
    }
}

/// Shipped per-dataset hyperparameters.
pub const PRESETS: &[(&str, &str)] = &[
    ("acm", include_str!("../../presets/acm.toml")),
    ("amazon", include_str!("../../presets/amazon.toml")),
    ("citeseer", include_str!("../../presets/citeseer.toml")),
    ("cora", include_str!("../../presets/cora.toml")),
    ("dblp", include_str!("../../presets/dblp.toml")),
    ("pubmed", include_str!("../../presets/pubmed.toml")),
    ("synthetic", include_str!("../../presets/synthetic.toml")),
];

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == lower)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let known: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
            })?;
        Self::from_toml(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.raw_loss_weights().validate()?;
        let positive = [
            ("learning_rate", self.learning_rate),
            ("lambda", self.lambda),
            ("theta", self.theta),
            ("sinkhorn_tolerance", self.sinkhorn_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weight_decay",
                reason: format!("must be non-negative, got {}", self.weight_decay),
            });
        }
        if self.embedding_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "embedding_dim",
                reason: "layer sizes must be positive".into(),
            });
        }
        if self.n_clusters == Some(0) {
            return Err(Error::InvalidParameter {
                name: "n_clusters",
                reason: "must be positive".into(),
            });
        }
        if self.sinkhorn_max_iterations == 0 || self.kmeans_restarts == 0 {
            return Err(Error::InvalidParameter {
                name: "iterations",
                reason: "sinkhorn_max_iterations and kmeans_restarts must be positive".into(),
            });
        }
        if let Some(f) = self.proportion_floor {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter {
                    name: "proportion_floor",
                    reason: format!("must lie in [0, 1], got {f}"),
                });
            }
        }
        if self.ablation.no_structure && self.ablation.no_attribute {
            return Err(Error::Config(
                "no_structure and no_attribute together remove both traces; use no_encoding_trace".into(),
            ));
        }
        Ok(())
    }

    fn raw_loss_weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    /// Loss weights with the ablation switches applied.
    pub fn loss_weights(&self) -> LossWeights {
        let mut w = self.raw_loss_weights();
        if self.ablation.no_structure {
            w.alpha = 0.0;
        }
        if self.ablation.no_attribute {
            w.alpha = 1.0;
        }
        if self.ablation.no_orthogonality {
            w.beta = 0.0;
        }
        w
    }

    pub fn sinkhorn(&self) -> SinkhornConfig {
        SinkhornConfig {
            lambda: self.lambda,
            max_iterations: self.sinkhorn_max_iterations,
            marginal_tolerance: self.sinkhorn_tolerance,
        }
    }

    /// `[F, hidden..., d]`.
    pub fn layer_dims(&self, n_features: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(n_features);
        dims.extend(&self.hidden_dims);
        dims.push(self.embedding_dim);
        dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            RunConfig::preset(name).unwrap();
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn preset_values() {
        let pubmed = RunConfig::preset("PubMed").unwrap();
        assert_eq!(pubmed.learning_rate, 0.01);
        assert_eq!(pubmed.weight_decay, 0.005);
        assert_eq!(pubmed.alpha, 0.9);
        assert_eq!(pubmed.beta, 2.0);
        assert_eq!(pubmed.gamma, 0.5);
        assert_eq!(pubmed.lambda, 20.0);
        let cora = RunConfig::preset("cora").unwrap();
        assert_eq!(
            (cora.learning_rate, cora.weight_decay, cora.alpha, cora.beta, cora.gamma, cora.lambda),
            (0.001, 0.0005, 0.9, 20.0, 2.0, 5.0)
        );
        assert_eq!(cora.embedding_dim, 16);
        assert_eq!(cora.theta, 1.0);
    }

    #[test]
    fn ablation_overrides_weights() {
        let mut cfg = RunConfig::default();
        cfg.ablation.no_orthogonality = true;
        assert_eq!(cfg.loss_weights().beta, 0.0);
        assert_eq!(cfg.loss_weights().alpha, cfg.alpha);
        cfg.ablation.no_attribute = true;
        assert_eq!(cfg.loss_weights().alpha, 1.0);
    }

    #[test]
    fn rejects_out_of_range() {
        let cfg = RunConfig {
            alpha: 1.2,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_toml("learning_rate = -1.0").is_err());
        assert!(RunConfig::from_toml("no_such_field = 1").is_err());
    }
}
