//! Batches of independent runs: component ablations and hyperparameter
//! grids. Runs share nothing, so outside deterministic mode they execute on
//! the rayon pool; results are always returned in input order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::pipeline::config::{AblationFlags, RunConfig};
use crate::pipeline::report::RunReport;
use crate::pipeline::train::run;

fn run_all<T: Sync, R: Send>(
    parallel: bool,
    items: &[T],
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    if parallel {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Full,
    /// Attribute graph only (α = 0).
    WithoutStructure,
    /// Structure graph only (α = 1).
    WithoutAttribute,
    /// No trace terms at all.
    WithoutEncoding,
    WithoutOrthogonality,
    /// Sharpened frequency-normalized target instead of optimal transport.
    WithoutOptimalTransport,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::Full,
        AblationVariant::WithoutStructure,
        AblationVariant::WithoutAttribute,
        AblationVariant::WithoutEncoding,
        AblationVariant::WithoutOrthogonality,
        AblationVariant::WithoutOptimalTransport,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::WithoutStructure => "w/o O",
            AblationVariant::WithoutAttribute => "w/o A",
            AblationVariant::WithoutEncoding => "w/o OA",
            AblationVariant::WithoutOrthogonality => "w/o Orthogonal",
            AblationVariant::WithoutOptimalTransport => "w/o OptTrans",
        }
    }

    /// `base` with exactly this variant's switch set.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut flags = AblationFlags::default();
        match self {
            AblationVariant::Full => {}
            AblationVariant::WithoutStructure => flags.no_structure = true,
            AblationVariant::WithoutAttribute => flags.no_attribute = true,
            AblationVariant::WithoutEncoding => flags.no_encoding_trace = true,
            AblationVariant::WithoutOrthogonality => flags.no_orthogonality = true,
            AblationVariant::WithoutOptimalTransport => flags.sdcn_target = true,
        }
        RunConfig {
            ablation: flags,
            ..base.clone()
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub report: RunReport,
}

/// Runs every variant with the same seed and base config.
pub fn run_ablation(config: &RunConfig, graph: &AttributedGraph) -> Result<Vec<AblationRow>> {
    run_ablation_variants(config, graph, &AblationVariant::ALL)
}

pub fn run_ablation_variants(
    config: &RunConfig,
    graph: &AttributedGraph,
    variants: &[AblationVariant],
) -> Result<Vec<AblationRow>> {
    run_all(!config.deterministic, variants, |&variant| {
        let outcome = run(&variant.apply(config), graph)?;
        Ok(AblationRow {
            variant,
            report: outcome.report,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Beta,
    Gamma,
    Lambda,
    EmbeddingDim,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Beta => "beta",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Lambda => "lambda",
            SweepParameter::EmbeddingDim => "d",
        }
    }

    fn set(self, cfg: &mut RunConfig, value: f64) -> Result<()> {
        match self {
            SweepParameter::Alpha => cfg.alpha = value,
            SweepParameter::Beta => cfg.beta = value,
            SweepParameter::Gamma => cfg.gamma = value,
            SweepParameter::Lambda => cfg.lambda = value,
            SweepParameter::EmbeddingDim => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "d",
                        reason: format!("embedding dimension must be a positive integer, got {value}"),
                    });
                }
                cfg.embedding_dim = value as usize;
            }
        }
        Ok(())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alpha" => Ok(SweepParameter::Alpha),
            "beta" => Ok(SweepParameter::Beta),
            "gamma" => Ok(SweepParameter::Gamma),
            "lambda" => Ok(SweepParameter::Lambda),
            "d" | "embedding_dim" => Ok(SweepParameter::EmbeddingDim),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?} (expected alpha, beta, gamma, lambda or d)"
            ))),
        }
    }
}

/// One axis of a grid, e.g. `alpha=0.1,0.5,0.9`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid axis must look like name=v1,v2; got {s:?}")))?;
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid grid value {v:?} for {name}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridAxis {
            parameter: name.parse()?,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub axes: Vec<GridAxis>,
}

/// A single grid setting, ordered as the axes were given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint(pub Vec<(SweepParameter, f64)>);

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(p, v)| format!("{}={v}", p.name())).collect();
        f.write_str(&parts.join(" "))
    }
}

impl ParameterGrid {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        ParameterGrid { axes }
    }

    /// Cartesian product, last axis varying fastest. An empty grid has no
    /// points.
    pub fn points(&self) -> Vec<GridPoint> {
        if self.axes.is_empty() {
            return Vec::new();
        }
        let mut points = vec![GridPoint(Vec::new())];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut next = p.0.clone();
                        next.push((axis.parameter, v));
                        GridPoint(next)
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub report: RunReport,
}

pub fn configure(base: &RunConfig, point: &GridPoint) -> Result<RunConfig> {
    let mut cfg = base.clone();
    for &(p, v) in &point.0 {
        p.set(&mut cfg, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One full run per grid point, all with the base seed.
pub fn run_sweep(config: &RunConfig, graph: &AttributedGraph, grid: &ParameterGrid) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    let configs = points
        .iter()
        .map(|p| configure(config, p))
        .collect::<Result<Vec<_>>>()?;
    let reports = run_all(!config.deterministic, &configs, |cfg| Ok(run(cfg, graph)?.report))?;
    Ok(points
        .into_iter()
        .zip(reports)
        .map(|(point, report)| SweepRow { point, report })
        .collect())
}
