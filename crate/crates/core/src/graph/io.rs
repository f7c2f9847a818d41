//! Canonical on-disk dataset directory.
//!
//! ```text
//! meta.json     {"name", "num_nodes", "num_features", "num_classes"}
//! edges.tsv     src<TAB>dst, one undirected edge per line, 0-based
//! features.tsv  node<TAB>feature<TAB>value, nonzero entries only
//! labels.tsv    node<TAB>label, one line per node
//! splits.json   {"train": [..], "val": [..], "test": [..]}
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::tensor::{CsrMatrix, DenseMatrix};

pub const META_FILE: &str = "meta.json";
pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const SPLITS_FILE: &str = "splits.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    /// Informational; written by converters, never trusted by the loader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_edges: Option<usize>,
}

fn read(dir: &Path, file: &str) -> Result<(PathBuf, String)> {
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, text))
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Data lines of a TSV file with their 1-based line numbers. Blank lines are skipped.
fn tsv_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, raw: &str, what: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} from {raw:?}")))
}

fn check_index(path: &Path, line: usize, idx: usize, bound: usize, what: &str) -> Result<()> {
    if idx >= bound {
        return Err(parse_err(
            path,
            line,
            format!("{what} {idx} out of range (must be < {bound})"),
        ));
    }
    Ok(())
}

/// Loads and validates a canonical dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let (meta_path, meta_text) = read(dir, META_FILE)?;
    let meta: Meta = serde_json::from_str(&meta_text).map_err(|source| Error::Json {
        path: meta_path,
        source,
    })?;
    let n = meta.num_nodes;
    let p = meta.num_features;
    let m = meta.num_classes;

    let (path, text) = read(dir, EDGES_FILE)?;
    let mut seen = HashSet::new();
    let mut triplets = Vec::new();
    for (line, f) in tsv_lines(&text) {
        if f.len() != 2 {
            return Err(parse_err(&path, line, format!("expected 2 fields, got {}", f.len())));
        }
        let u: usize = field(&path, line, f[0], "source node")?;
        let v: usize = field(&path, line, f[1], "target node")?;
        check_index(&path, line, u, n, "node")?;
        check_index(&path, line, v, n, "node")?;
        if u == v {
            return Err(parse_err(&path, line, format!("self-loop on node {u}")));
        }
        if !seen.insert((u, v)) {
            return Err(parse_err(&path, line, format!("duplicate edge {u}-{v}")));
        }
        // Edges stored in both directions collapse onto one undirected pair.
        if !seen.contains(&(v, u)) {
            triplets.push((u, v, 1.0));
            triplets.push((v, u, 1.0));
        }
    }
    let graph = CsrMatrix::from_triplets(n, &triplets)?;

    let (path, text) = read(dir, FEATURES_FILE)?;
    let mut features = DenseMatrix::zeros(n, p);
    let mut filled = HashSet::new();
    for (line, f) in tsv_lines(&text) {
        if f.len() != 3 {
            return Err(parse_err(&path, line, format!("expected 3 fields, got {}", f.len())));
        }
        let node: usize = field(&path, line, f[0], "node")?;
        let feat: usize = field(&path, line, f[1], "feature")?;
        let value: f64 = field(&path, line, f[2], "value")?;
        check_index(&path, line, node, n, "node")?;
        check_index(&path, line, feat, p, "feature")?;
        if !value.is_finite() {
            return Err(parse_err(&path, line, "non-finite feature value"));
        }
        if !filled.insert((node, feat)) {
            return Err(parse_err(&path, line, format!("duplicate feature ({node}, {feat})")));
        }
        features.set(node, feat, value);
    }

    let (path, text) = read(dir, LABELS_FILE)?;
    let mut labels = vec![None; n];
    for (line, f) in tsv_lines(&text) {
        if f.len() != 2 {
            return Err(parse_err(&path, line, format!("expected 2 fields, got {}", f.len())));
        }
        let node: usize = field(&path, line, f[0], "node")?;
        let label: usize = field(&path, line, f[1], "label")?;
        check_index(&path, line, node, n, "node")?;
        if label >= m {
            return Err(parse_err(
                &path,
                line,
                format!("label {label} out of range for {m} classes"),
            ));
        }
        if labels[node].replace(label).is_some() {
            return Err(parse_err(&path, line, format!("node {node} labeled twice")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, y)| {
            y.ok_or_else(|| Error::InvalidDataset(format!("{}: node {i} has no label", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;

    let (split_path, split_text) = read(dir, SPLITS_FILE)?;
    let split: Split = serde_json::from_str(&split_text).map_err(|source| Error::Json {
        path: split_path,
        source,
    })?;

    Dataset::new(meta.name, graph, features, labels, m, split)
}

/// Writes `ds` in the canonical format. Each file is written atomically.
pub fn write_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let meta = Meta {
        name: ds.name.clone(),
        num_nodes: ds.num_nodes(),
        num_features: ds.num_features(),
        num_classes: ds.num_classes,
        num_edges: Some(ds.num_edges()),
    };
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_atomic(&dir.join(META_FILE), meta_json.as_bytes())?;

    let mut edges = String::new();
    for u in 0..ds.num_nodes() {
        for &v in ds.graph.row(u).0 {
            if u < v {
                writeln!(edges, "{u}\t{v}").unwrap();
            }
        }
    }
    write_atomic(&dir.join(EDGES_FILE), edges.as_bytes())?;

    let mut feats = String::new();
    for (i, row) in ds.features.row_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                // `{}` on f64 prints the shortest string that parses back exactly
                writeln!(feats, "{i}\t{j}\t{v}").unwrap();
            }
        }
    }
    write_atomic(&dir.join(FEATURES_FILE), feats.as_bytes())?;

    let mut labels = String::new();
    for (i, y) in ds.labels.iter().enumerate() {
        writeln!(labels, "{i}\t{y}").unwrap();
    }
    write_atomic(&dir.join(LABELS_FILE), labels.as_bytes())?;

    let split_json = serde_json::to_string(&ds.split).expect("split serializes");
    write_atomic(&dir.join(SPLITS_FILE), split_json.as_bytes())?;
    Ok(())
}
