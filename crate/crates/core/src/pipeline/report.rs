use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ClusteringScores;
use crate::pipeline::config::RunConfig;

/// Encoding-stage losses for one epoch, measured before the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingRecord {
    pub epoch: usize,
    pub loss: f64,
    pub structure_term: f64,
    pub attribute_term: f64,
    pub penalty_term: f64,
}

/// Clustering-stage losses for one epoch, measured before the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub encoding: EncodingRecord,
    pub clustering_loss: f64,
    pub total_loss: f64,
    pub sinkhorn_iterations: Option<usize>,
    pub sinkhorn_residual: Option<f64>,
    pub metrics: Option<ClusteringScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub seed: u64,
    pub n_nodes: usize,
    pub n_clusters: usize,
    pub pretrain: Vec<EncodingRecord>,
    pub train: Vec<TrainRecord>,
    pub sinkhorn_calls: usize,
    pub metrics: Option<ClusteringScores>,
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Copy with the wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        RunReport {
            wall_clock_secs: 0.0,
            ..self.clone()
        }
    }

    /// `ACC=<v> NMI=<v> ARI=<v> F1=<v>`, or `NA` values when the graph has no
    /// labels.
    pub fn metrics_line(&self) -> String {
        match &self.metrics {
            Some(m) => m.to_string(),
            None => "ACC=NA NMI=NA ARI=NA F1=NA".to_string(),
        }
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.metrics.map(|m| m.acc)
    }
}

/// Plain-text comparison table, one row per labelled report.
pub fn format_table<'a>(rows: impl IntoIterator<Item = (String, &'a RunReport)>) -> String {
    let rows: Vec<_> = rows.into_iter().collect();
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    writeln!(out, "{:<width$}  {:>7} {:>7} {:>7} {:>7}", "variant", "ACC", "NMI", "ARI", "F1").unwrap();
    for (key, report) in rows {
        match report.metrics {
            Some(m) => writeln!(
                out,
                "{key:<width$}  {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
                m.acc, m.nmi, m.ari, m.f1
            ),
            None => writeln!(out, "{key:<width$}  {:>7} {:>7} {:>7} {:>7}", "NA", "NA", "NA", "NA"),
        }
        .unwrap();
    }
    out
}
