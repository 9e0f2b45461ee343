use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency is not symmetric: A[{row},{col}] != A[{col},{row}]")]
    AsymmetricAdjacency { row: usize, col: usize },

    #[error("adjacency entry A[{row},{col}] = {value} is not in {{0, 1}}")]
    NonBinaryAdjacency { row: usize, col: usize, value: f64 },

    #[error("non-finite feature value at node {node}, column {column}")]
    NonFiniteFeature { node: usize, column: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("label {label} at node {node} is outside [0, {n_classes})")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        n_classes: usize,
    },

    #[error("partition block {block} is empty")]
    EmptyBlock { block: usize },

    #[error("partition block {block} has zero volume")]
    ZeroVolumeBlock { block: usize },

    #[error("non-finite gradient for parameter {parameter}")]
    NonFiniteGradient { parameter: String },

    #[error("invalid value for {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("q[{row},{col}] = 0 where the target is positive (infinite divergence)")]
    InfiniteDivergence { row: usize, col: usize },

    #[error("soft assignment entry q[{row},{col}] = {value} is not strictly positive")]
    NonPositiveAssignment { row: usize, col: usize, value: f64 },

    #[error("sinkhorn did not converge in {iterations} iterations (marginal error {marginal_error:e})")]
    SinkhornNotConverged {
        iterations: usize,
        marginal_error: f64,
    },

    #[error("requested {k} clusters but only {n} points")]
    TooManyClusters { k: usize, n: usize },

    #[error("non-finite entry in cost matrix at ({row},{col})")]
    NonFiniteCost { row: usize, col: usize },

    #[error("label vectors differ in length: {pred} predicted vs {truth} true")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("non-finite loss at {stage} epoch {epoch}")]
    NonFiniteLoss { stage: &'static str, epoch: usize },

    #[error("{stage} epoch {epoch}: {source}")]
    Epoch {
        stage: &'static str,
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Dataset { path: PathBuf, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AsymmetricAdjacency { .. } => "asymmetric_adjacency",
            Error::NonBinaryAdjacency { .. } => "non_binary_adjacency",
            Error::NonFiniteFeature { .. } => "non_finite_feature",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::EmptyBlock { .. } => "empty_block",
            Error::ZeroVolumeBlock { .. } => "zero_volume_block",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InfiniteDivergence { .. } => "infinite_divergence",
            Error::NonPositiveAssignment { .. } => "non_positive_assignment",
            Error::SinkhornNotConverged { .. } => "sinkhorn_not_converged",
            Error::TooManyClusters { .. } => "too_many_clusters",
            Error::NonFiniteCost { .. } => "non_finite_cost",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Epoch { source, .. } => source.kind(),
            Error::Parse { .. } => "parse",
            Error::Dataset { .. } => "dataset",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_epoch(self, stage: &'static str, epoch: usize) -> Self {
        match self {
            e @ (Error::NonFiniteLoss { .. } | Error::Epoch { .. }) => e,
            other => Error::Epoch {
                stage,
                epoch,
                source: Box::new(other),
            },
        }
    }
}
