//! Embedding export with an optional 2-D PCA projection for plotting.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Principal components of a point cloud.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// All covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `d × r` loading matrix; columns are unit components, signed so their
    /// largest-magnitude entry is positive.
    pub components: Array2<f64>,
    /// `N × r` coordinates of the centered data in component space.
    pub projected: Array2<f64>,
}

/// PCA keeping `rank` components, with covariance normalized by `N - 1`.
/// Components beyond the data dimension are zero columns.
pub fn pca(data: &ArrayView2<f64>, rank: usize) -> Pca {
    let (n, d) = data.dim();
    let mean = data.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
    let centered = data - &mean.view().insert_axis(Axis(0));
    let denom = (n.max(2) - 1) as f64;
    let cov = centered.t().dot(&centered) / denom;
    let (eigenvalues, vectors) = symmetric_eigen(&cov);
    let mut components = Array2::<f64>::zeros((d, rank));
    for k in 0..rank.min(d) {
        let mut col = vectors.column(k).to_owned();
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.mapv_inplace(|v| -v);
        }
        components.column_mut(k).assign(&col);
    }
    let projected = centered.dot(&components);
    Pca {
        mean,
        eigenvalues,
        components,
        projected,
    }
}

/// Writes one CSV row per node: `node_id, h_1..h_d, [true_label], pred_label,
/// [pc_1, pc_2]`.
pub fn export_embeddings(
    h: &ArrayView2<f64>,
    labels: Option<&[usize]>,
    pred: &[usize],
    path: &Path,
    project_2d: bool,
) -> Result<()> {
    let (n, d) = h.dim();
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "embeddings",
            reason: "contain non-finite values".into(),
        });
    }
    if pred.len() != n || labels.is_some_and(|l| l.len() != n) {
        return Err(Error::shape("exported label count", n, pred.len()));
    }
    let projection = project_2d.then(|| pca(h, 2));
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Dataset {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;

    let mut header = vec!["node_id".to_string()];
    header.extend((1..=d).map(|k| format!("h_{k}")));
    if labels.is_some() {
        header.push("true_label".into());
    }
    header.push("pred_label".into());
    if projection.is_some() {
        header.extend(["pc_1".to_string(), "pc_2".to_string()]);
    }
    w.write_record(&header).map_err(csv_err)?;

    for i in 0..n {
        let mut row = vec![i.to_string()];
        row.extend(h.row(i).iter().map(|v| format!("{v:?}")));
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        row.push(pred[i].to_string());
        if let Some(p) = &projection {
            row.extend(p.projected.row(i).iter().map(|v| format!("{v:?}")));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
