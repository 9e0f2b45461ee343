//! End-to-end pipeline: configuration, data loading, training, batch
//! runners, reports and embedding export.

pub mod config;
pub mod dataset;
pub mod export;
pub mod report;
pub mod runners;
pub mod synthetic;
pub mod train;

pub use config::{AblationFlags, DataSource, ProportionMode, RunConfig, PRESETS};
pub use dataset::{load_dataset, write_dataset, Manifest};
pub use export::{export_embeddings, pca, Pca};
pub use report::{format_table, EncodingRecord, RunReport, TrainRecord};
pub use runners::{
    configure, run_ablation, run_ablation_variants, run_sweep, AblationRow, AblationVariant, GridAxis, GridPoint,
    ParameterGrid, SweepParameter, SweepRow,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use train::{
    initialize, pretrain, pretrain_with, resolve_clusters, run, run_pretrain_only, train, train_with, Laplacians,
    Pretrained, TrainOutcome,
};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Materializes the graph named by `config.data`.
pub fn load_graph(config: &RunConfig) -> Result<AttributedGraph> {
    match &config.data {
        Some(DataSource::Manifest(path)) => load_dataset(path),
        Some(DataSource::Synthetic(spec)) => generate_synthetic(spec),
        None => Err(Error::Config(
            "no data source: pass --dataset, --synthetic, or set `data` in the config".into(),
        )),
    }
}
