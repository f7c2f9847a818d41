use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{CsrMatrix, DenseMatrix};

/// Disjoint train/validation/test node index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Checks disjointness, bounds and a non-empty training set.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        let mut owner = vec![None; n];
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in idx {
                if i >= n {
                    return Err(Error::InvalidDataset(format!(
                        "{name} index {i} out of range for {n} nodes"
                    )));
                }
                if let Some(prev) = owner[i] {
                    return Err(Error::InvalidDataset(format!(
                        "node {i} appears in both {prev} and {name}"
                    )));
                }
                owner[i] = Some(name);
            }
        }
        Ok(())
    }
}

/// Graph, features, labels and the split a model is trained against.
///
/// The adjacency is binary, symmetric and stored without self-loops. Features
/// are kept raw; normalization happens when training inputs are prepared.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: CsrMatrix,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        graph: CsrMatrix,
        features: DenseMatrix,
        labels: Vec<usize>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            graph,
            features,
            labels,
            num_classes,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.n()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Undirected edge count (each `{u, v}` counted once).
    pub fn num_edges(&self) -> usize {
        self.graph.nnz() / 2
    }

    pub fn with_split(&self, split: Split) -> Result<Self> {
        split.validate(self.num_nodes())?;
        Ok(Self {
            split,
            ..self.clone()
        })
    }

    /// Nodes per class over the whole graph.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if n == 0 || self.num_classes == 0 || self.features.cols() == 0 {
            return Err(Error::InvalidDataset(
                "node, feature and class counts must be positive".into(),
            ));
        }
        if self.features.rows() != n {
            return Err(Error::InvalidDataset(format!(
                "feature matrix has {} rows for {n} nodes",
                self.features.rows()
            )));
        }
        if self.labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} nodes",
                self.labels.len()
            )));
        }
        if let Some((node, &label)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y >= self.num_classes)
        {
            return Err(Error::LabelOutOfRange {
                node,
                label,
                num_classes: self.num_classes,
            });
        }
        for i in 0..n {
            if self.graph.has_entry(i, i) {
                return Err(Error::InvalidDataset(format!("self-loop at node {i}")));
            }
        }
        if !self.graph.is_symmetric() {
            return Err(Error::InvalidDataset("adjacency is not symmetric".into()));
        }
        self.split.validate(n)
    }
}
