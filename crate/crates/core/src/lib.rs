//! Attributed graph clustering by cut-informed embedding.
//!
//! An MLP maps node features to embeddings `H` that minimize a blend of two
//! relaxed normalized cuts (one on the structure graph, one on a dense
//! feature-similarity graph that is never materialized) plus an
//! orthogonality penalty. A clustering head then refines the embedding with
//! Student's-t soft assignments against an entropy-regularized optimal
//! transport target that respects estimated cluster proportions.
//!
//! ```
//! use cutclust::pipeline::{generate_synthetic, run, RunConfig, SyntheticSpec};
//!
//! let graph = generate_synthetic(&SyntheticSpec::default()).unwrap();
//! let config = RunConfig { pretrain_epochs: 20, train_epochs: 20, ..RunConfig::preset("synthetic").unwrap() };
//! let outcome = run(&config, &graph).unwrap();
//! assert_eq!(outcome.predictions.len(), graph.n_nodes());
//! println!("{}", outcome.report.metrics_line());
//! ```

pub mod clustering;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod pipeline;
pub mod sparse;

pub use error::{Error, Result};
pub use graph::AttributedGraph;
pub use metrics::ClusteringScores;
pub use pipeline::{RunConfig, RunReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/laplacians.md")]
    mod laplacians {}
    #[doc = include_str!("../../../book/src/encoder.md")]
    mod encoder {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
