//! On-disk dataset format.
//!
//! A manifest of `key=value` lines:
//!
//! ```text
//! name=cora
//! n_nodes=2708
//! n_features=1433
//! n_classes=7
//! edges_file=edges.tsv
//! features_file=features.txt
//! labels_file=labels.txt
//! ```
//!
//! File paths are relative to the manifest. `edges_file` holds one
//! `src<TAB>dst` pair per line with 0-based ids; `features_file` one row of
//! `n_features` space-separated reals per node; `labels_file` (optional) one
//! 0-based class per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub n_nodes: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub edges_file: PathBuf,
    pub features_file: PathBuf,
    pub labels_file: Option<PathBuf>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

impl Manifest {
    pub fn parse(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let mut fields = BTreeMap::new();
        for (lineno, line) in content_lines(&text) {
            if line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(path, lineno, "expected key=value"))?;
            fields.insert(k.trim().to_string(), (lineno, v.trim().to_string()));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let get = |key: &str| -> Result<&(usize, String)> {
            fields.get(key).ok_or_else(|| Error::Dataset {
                path: path.to_path_buf(),
                message: format!("missing key {key:?}"),
            })
        };
        let number = |key: &str| -> Result<usize> {
            let (line, v) = get(key)?;
            v.parse()
                .map_err(|_| parse_err(path, *line, format!("{key} must be a non-negative integer, got {v:?}")))
        };
        Ok(Manifest {
            name: get("name")?.1.clone(),
            n_nodes: number("n_nodes")?,
            n_features: number("n_features")?,
            n_classes: number("n_classes")?,
            edges_file: base.join(&get("edges_file")?.1),
            features_file: base.join(&get("features_file")?.1),
            labels_file: fields.get("labels_file").map(|(_, v)| base.join(v)),
        })
    }
}

fn load_edges(path: &Path, n: usize) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (lineno, line) in content_lines(&text) {
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(path, lineno, "expected two node ids"));
        };
        let id = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid node id {s:?}")))?;
            if v >= n {
                return Err(parse_err(path, lineno, format!("node id out of range: {v} >= {n}")));
            }
            Ok(v)
        };
        edges.push((id(a)?, id(b)?));
    }
    Ok(edges)
}

fn load_features(path: &Path, n: usize, f: usize) -> Result<Array2<f64>> {
    let text = read(path)?;
    let mut data = Vec::with_capacity(n * f);
    let mut rows = 0;
    for (lineno, line) in content_lines(&text) {
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid number {tok:?}")))?;
            data.push(v);
        }
        let width = data.len() - before;
        if width != f {
            return Err(parse_err(path, lineno, format!("expected {f} features, found {width}")));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: format!("expected {n} feature rows, found {rows}"),
        });
    }
    Ok(Array2::from_shape_vec((n, f), data).expect("row widths checked"))
}

fn load_labels(path: &Path, n: usize, k: usize) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels = Vec::with_capacity(n);
    for (lineno, line) in content_lines(&text) {
        let v: usize = line
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("invalid label {line:?}")))?;
        if v >= k {
            return Err(parse_err(path, lineno, format!("label {v} outside [0, {k})")));
        }
        labels.push(v);
    }
    if labels.len() != n {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: format!("expected {n} labels, found {}", labels.len()),
        });
    }
    Ok(labels)
}

/// Reads a dataset and checks it against its manifest. Edges are
/// symmetrized and deduplicated.
pub fn load_dataset(manifest_path: &Path) -> Result<AttributedGraph> {
    let m = Manifest::parse(manifest_path)?;
    let edges = load_edges(&m.edges_file, m.n_nodes)?;
    let features = load_features(&m.features_file, m.n_nodes, m.n_features)?;
    let labels = m
        .labels_file
        .as_deref()
        .map(|p| load_labels(p, m.n_nodes, m.n_classes))
        .transpose()?;
    let graph = AttributedGraph::from_edges(m.n_nodes, &edges, features, labels, Some(m.n_classes))?;
    let stored = graph.adjacency().nnz();
    let listed: usize = edges.iter().map(|&(a, b)| if a == b { 1 } else { 2 }).sum();
    if listed != stored {
        log::warn!(
            "{}: {} duplicate edge entries collapsed to binary adjacency",
            m.edges_file.display(),
            listed - stored
        );
    }
    Ok(graph)
}

/// Writes `graph` in the on-disk format under `dir`, returning the manifest
/// path.
pub fn write_dataset(dir: &Path, name: &str, graph: &AttributedGraph) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |file: &str, text: String| -> Result<()> {
        let p = dir.join(file);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    };

    let mut edges = String::new();
    for (i, j, _) in graph.adjacency().triplets().filter(|&(i, j, _)| i <= j) {
        writeln!(edges, "{i}\t{j}").unwrap();
    }
    write("edges.tsv", edges)?;

    let mut feats = String::new();
    for row in graph.features().outer_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(feats, "{}", line.join(" ")).unwrap();
    }
    write("features.txt", feats)?;

    let mut manifest = format!(
        "name={name}\nn_nodes={}\nn_features={}\nn_classes={}\nedges_file=edges.tsv\nfeatures_file=features.txt\n",
        graph.n_nodes(),
        graph.n_features(),
        graph.n_classes().unwrap_or(1),
    );
    if let Some(labels) = graph.labels() {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write("labels.txt", text)?;
        manifest.push_str("labels_file=labels.txt\n");
    }
    write("manifest.txt", manifest)?;
    Ok(dir.join("manifest.txt"))
}
