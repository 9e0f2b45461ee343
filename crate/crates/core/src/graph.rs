//! Attributed graphs and the two normalized Laplacians the encoder is trained
//! against.
//!
//! The structure Laplacian `L_G = I - D^{-1/2} A D^{-1/2}` is stored sparse.
//! The attribute Laplacian `L_S = I - D_S^{-1/2} S D_S^{-1/2}` is defined on
//! the dense cosine-similarity graph `S_ij = (1 + cos(x_i, x_j)) / 2`, which
//! is never materialized: with `X̂` the row-normalized features,
//!
//! ```text
//! S = (1·1ᵀ + X̂·X̂ᵀ) / 2
//! ```
//!
//! is an exact rank-(F+1) factorization, so `L_S·H` costs `O(N·F·d)`.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// A graph with node attributes and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    adjacency: CsrMatrix,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
    n_classes: Option<usize>,
}

impl AttributedGraph {
    /// Validates shapes, adjacency symmetry and binary entries, and label
    /// range.
    pub fn new(
        adjacency: CsrMatrix,
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        let n = adjacency.dim();
        if features.nrows() != n {
            return Err(Error::shape("feature rows", n, features.nrows()));
        }
        check_adjacency(&adjacency)?;
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::shape("label count", n, labels.len()));
            }
            let k = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
            if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
                return Err(Error::LabelOutOfRange {
                    node,
                    label,
                    n_classes: k,
                });
            }
        }
        let n_classes = match (&labels, n_classes) {
            (_, Some(k)) => Some(k),
            (Some(l), None) => Some(l.iter().max().map_or(1, |m| m + 1)),
            (None, None) => None,
        };
        if n_classes == Some(0) {
            return Err(Error::InvalidParameter {
                name: "n_classes",
                reason: "must be positive".into(),
            });
        }
        Ok(AttributedGraph {
            adjacency,
            features,
            labels,
            n_classes,
        })
    }

    /// Builds the adjacency from an undirected edge list: both directions
    /// are inserted, duplicates collapse to a single 1.
    pub fn from_edges(
        n_nodes: usize,
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        let adjacency = adjacency_from_edges(n_nodes, edges)?;
        Self::new(adjacency, features, labels, n_classes)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.dim()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Number of undirected edges (self-loops count once).
    pub fn n_edges(&self) -> usize {
        self.adjacency.triplets().filter(|&(i, j, _)| i <= j).count()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.n_classes
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|i| self.adjacency.row(i).map(|(_, v)| v).sum())
            .collect()
    }
}

/// Symmetric binary adjacency from an edge list. Out-of-range ids are an
/// error.
pub fn adjacency_from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<CsrMatrix> {
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for &(u, v) in edges {
        if u >= n_nodes || v >= n_nodes {
            return Err(Error::InvalidParameter {
                name: "edge",
                reason: format!("node id out of range: ({u}, {v}) with {n_nodes} nodes"),
            });
        }
        triplets.push((u, v, 1.0));
        if u != v {
            triplets.push((v, u, 1.0));
        }
    }
    triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    triplets.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    Ok(CsrMatrix::from_triplets(n_nodes, triplets))
}

fn check_adjacency(adjacency: &CsrMatrix) -> Result<()> {
    for (i, j, v) in adjacency.triplets() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NonBinaryAdjacency {
                row: i,
                col: j,
                value: v,
            });
        }
        if adjacency.get(j, i) != v {
            return Err(Error::AsymmetricAdjacency { row: i, col: j });
        }
    }
    Ok(())
}

/// `I - D^{-1/2} A D^{-1/2}` in sparse form.
///
/// Isolated nodes get `D^{-1/2} = 0`, so their row is the identity row.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureLaplacian {
    matrix: CsrMatrix,
    degrees: Vec<f64>,
}

impl StructureLaplacian {
    pub fn from_adjacency(adjacency: &CsrMatrix) -> Result<Self> {
        check_adjacency(adjacency)?;
        let n = adjacency.dim();
        let degrees: Vec<f64> = (0..n)
            .map(|i| adjacency.row(i).map(|(_, v)| v).sum())
            .collect();
        let inv_sqrt: Vec<f64> = degrees
            .iter()
            .map(|&d| if d > 0.0 { d.sqrt().recip() } else { 0.0 })
            .collect();
        let mut triplets = Vec::with_capacity(adjacency.nnz() + n);
        for i in 0..n {
            triplets.push((i, i, 1.0));
        }
        for (i, j, a) in adjacency.triplets() {
            if a != 0.0 {
                triplets.push((i, j, -a * inv_sqrt[i] * inv_sqrt[j]));
            }
        }
        Ok(StructureLaplacian {
            matrix: CsrMatrix::from_triplets(n, triplets),
            degrees,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, h: &ArrayView2<f64>) -> Array2<f64> {
        self.matrix.matmul(h)
    }
}

pub fn build_normalized_laplacian(graph: &AttributedGraph) -> Result<StructureLaplacian> {
    StructureLaplacian::from_adjacency(graph.adjacency())
}

/// Low-rank representation of the attribute-graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitAttributeLaplacian {
    unit_features: Array2<f64>,
    inv_sqrt_rowsum: Array1<f64>,
}

impl ImplicitAttributeLaplacian {
    pub fn from_features(features: &Array2<f64>) -> Result<Self> {
        if let Some(((node, column), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { node, column });
        }
        let n = features.nrows();
        let mut unit = features.clone();
        for mut row in unit.outer_iter_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
        // d_S = N/2 + X̂ (X̂ᵀ 1) / 2
        let col_sum = unit.sum_axis(Axis(0));
        let rowsum = unit.dot(&col_sum).mapv(|v| 0.5 * n as f64 + 0.5 * v);
        let inv_sqrt_rowsum = rowsum.mapv(|d| d.sqrt().recip());
        Ok(ImplicitAttributeLaplacian {
            unit_features: unit,
            inv_sqrt_rowsum,
        })
    }

    pub fn dim(&self) -> usize {
        self.unit_features.nrows()
    }

    pub fn unit_features(&self) -> &Array2<f64> {
        &self.unit_features
    }

    pub fn inv_sqrt_rowsum(&self) -> &Array1<f64> {
        &self.inv_sqrt_rowsum
    }

    /// Row sums of the implicit similarity matrix.
    pub fn degrees(&self) -> Array1<f64> {
        self.inv_sqrt_rowsum.mapv(|v| (v * v).recip())
    }

    /// One entry of the implicit `S`. Intended for inspection and tests.
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        0.5 + 0.5 * self.unit_features.row(i).dot(&self.unit_features.row(j))
    }

    /// `L_S · H` without forming `S`.
    pub fn apply(&self, h: &ArrayView2<f64>) -> Array2<f64> {
        let n = self.dim();
        let scale = self.inv_sqrt_rowsum.view().insert_axis(Axis(1));
        let y = h * &scale;
        let ones_part = y.sum_axis(Axis(0));
        let feature_part = self.unit_features.t().dot(&y);
        let mut sy = self.unit_features.dot(&feature_part);
        sy += &ones_part.view().insert_axis(Axis(0)).broadcast((n, h.ncols())).unwrap();
        sy *= 0.5;
        let mut out = h.to_owned();
        out -= &(sy * &scale);
        out
    }
}

pub fn build_attribute_laplacian(graph: &AttributedGraph) -> Result<ImplicitAttributeLaplacian> {
    ImplicitAttributeLaplacian::from_features(graph.features())
}

fn check_rows(context: &'static str, expected: usize, h: &ArrayView2<f64>) -> Result<()> {
    if h.nrows() != expected {
        return Err(Error::shape(context, expected, h.nrows()));
    }
    Ok(())
}

fn quadratic_from_product(h: &ArrayView2<f64>, lh: Array2<f64>) -> (f64, Array2<f64>) {
    let value = (h * &lh).sum().max(0.0);
    (value, lh * 2.0)
}

/// `Tr(Hᵀ L_G H)` and its gradient `2 L_G H`.
pub fn structure_quadratic(
    laplacian: &StructureLaplacian,
    h: &ArrayView2<f64>,
) -> Result<(f64, Array2<f64>)> {
    check_rows("structure_quadratic rows", laplacian.dim(), h)?;
    Ok(quadratic_from_product(h, laplacian.apply(h)))
}

/// `Tr(Hᵀ L_S H)` and its gradient `2 L_S H`.
pub fn attribute_quadratic(
    laplacian: &ImplicitAttributeLaplacian,
    h: &ArrayView2<f64>,
) -> Result<(f64, Array2<f64>)> {
    check_rows("attribute_quadratic rows", laplacian.dim(), h)?;
    Ok(quadratic_from_product(h, laplacian.apply(h)))
}

/// Exact normalized cut `½ Σ_k A(V_k, V̄_k) / vol(V_k)` of a hard partition.
///
/// Block ids are `0..=max(partition)`; every id in that range must be used.
pub fn normalized_cut(graph: &AttributedGraph, partition: &[usize]) -> Result<f64> {
    let n = graph.n_nodes();
    if partition.len() != n {
        return Err(Error::shape("partition length", n, partition.len()));
    }
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for i in 0..n {
        let b = partition[i];
        sizes[b] += 1;
        for (j, a) in graph.adjacency().row(i) {
            vol[b] += a;
            if partition[j] != b {
                cut[b] += a;
            }
        }
    }
    let mut total = 0.0;
    for block in 0..k {
        if sizes[block] == 0 {
            return Err(Error::EmptyBlock { block });
        }
        if vol[block] <= 0.0 {
            return Err(Error::ZeroVolumeBlock { block });
        }
        total += cut[block] / vol[block];
    }
    Ok(0.5 * total)
}
