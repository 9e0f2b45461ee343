//! Stochastic block model graphs with Gaussian feature blobs.

use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Parameters of the synthetic fixture.
///
/// Block `k`'s feature mean is `(separation/√2)·e_k`, so any two block
/// means are exactly `separation` apart; per-coordinate noise is unit
/// Gaussian, which makes `separation` a distance in noise standard
/// deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            blocks: 3,
            nodes_per_block: 20,
            p_in: 0.9,
            p_out: 0.05,
            feature_dim: 16,
            feature_separation: 6.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }

    fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "p_in/p_out",
                reason: format!("need 0 <= p_out < p_in <= 1, got p_in={} p_out={}", self.p_in, self.p_out),
            });
        }
        if self.blocks == 0 || self.nodes_per_block == 0 {
            return Err(Error::InvalidParameter {
                name: "blocks",
                reason: "blocks and nodes_per_block must be positive".into(),
            });
        }
        if self.feature_dim < self.blocks {
            return Err(Error::InvalidParameter {
                name: "feature_dim",
                reason: format!("need at least one dimension per block ({} < {})", self.feature_dim, self.blocks),
            });
        }
        if !(self.feature_separation >= 0.0 && self.feature_separation.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "feature_separation",
                reason: format!("must be non-negative, got {}", self.feature_separation),
            });
        }
        Ok(())
    }
}

/// Parses `key=value` pairs separated by commas, e.g.
/// `blocks=3,nodes=20,p_in=0.9,p_out=0.05,features=16,separation=6,seed=1`.
/// Unspecified keys keep their defaults.
impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {part:?}")))?;
            let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key}: {e}"));
            match key.trim() {
                "blocks" => spec.blocks = value.parse().map_err(|e| bad(&e))?,
                "nodes" | "nodes_per_block" => spec.nodes_per_block = value.parse().map_err(|e| bad(&e))?,
                "p_in" => spec.p_in = value.parse().map_err(|e| bad(&e))?,
                "p_out" => spec.p_out = value.parse().map_err(|e| bad(&e))?,
                "features" | "feature_dim" => spec.feature_dim = value.parse().map_err(|e| bad(&e))?,
                "separation" | "feature_separation" => {
                    spec.feature_separation = value.parse().map_err(|e| bad(&e))?
                }
                "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
                other => return Err(Error::Config(format!("unknown synthetic key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<AttributedGraph> {
    spec.validate()?;
    let n = spec.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<usize> = (0..n).map(|i| i / spec.nodes_per_block).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let offset = spec.feature_separation / std::f64::consts::SQRT_2;
    let mut features = Array2::<f64>::zeros((n, spec.feature_dim));
    for (i, mut row) in features.outer_iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        row[labels[i]] += offset;
    }
    AttributedGraph::from_edges(n, &edges, features, Some(labels), Some(spec.blocks))
}
