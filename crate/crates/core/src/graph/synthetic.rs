//! Generated datasets for tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::Rng;

use super::dataset::{Dataset, Split};
use crate::error::Result;
use crate::rng::rng_from_seed;
use crate::tensor::{CsrMatrix, DenseMatrix};

/// Two 5-cliques joined by one bridge edge (4–5). Node features are class
/// indicators; one labeled node per class, the bridge endpoints form the
/// validation set.
pub fn two_cliques() -> Dataset {
    let mut t = Vec::new();
    for block in [0usize, 5] {
        for i in block..block + 5 {
            for j in block..block + 5 {
                if i != j {
                    t.push((i, j, 1.0));
                }
            }
        }
    }
    t.push((4, 5, 1.0));
    t.push((5, 4, 1.0));
    let graph = CsrMatrix::from_triplets(10, &t).expect("valid toy graph");
    let labels: Vec<usize> = (0..10).map(|i| i / 5).collect();
    let mut features = DenseMatrix::zeros(10, 2);
    for (i, &y) in labels.iter().enumerate() {
        features.set(i, y, 1.0);
    }
    let split = Split {
        train: vec![0, 9],
        val: vec![4, 5],
        test: vec![1, 2, 3, 6, 7, 8],
    };
    Dataset::new("two-cliques", graph, features, labels, 2, split).expect("valid toy dataset")
}

/// Parameters of a planted-partition graph with bag-of-words features.
#[derive(Clone, Debug)]
pub struct PlantedPartition {
    pub nodes: usize,
    pub classes: usize,
    pub features: usize,
    /// Expected undirected degree.
    pub avg_degree: f64,
    /// Probability that an edge endpoint is drawn from the same class.
    pub homophily: f64,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the node's class vocabulary
    /// rather than uniformly.
    pub feature_signal: f64,
    pub train_per_class: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl PlantedPartition {
    /// Roughly Cora-shaped: 2708 nodes, 7 classes, 1433 binary features.
    pub fn cora_like(seed: u64) -> Self {
        Self {
            nodes: 2708,
            classes: 7,
            features: 1433,
            avg_degree: 3.9,
            homophily: 0.81,
            words_per_node: 18,
            feature_signal: 0.3,
            train_per_class: 20,
            val_size: 500,
            test_size: 1000,
            seed,
        }
    }

    pub fn small(seed: u64) -> Self {
        Self {
            nodes: 300,
            classes: 3,
            features: 60,
            avg_degree: 4.0,
            homophily: 0.8,
            words_per_node: 8,
            feature_signal: 0.4,
            train_per_class: 5,
            val_size: 60,
            test_size: 120,
            seed,
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        let mut rng = rng_from_seed(self.seed);
        let n = self.nodes;
        let m = self.classes;
        let labels: Vec<usize> = (0..n).map(|i| i % m).collect();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, &y) in labels.iter().enumerate() {
            by_class[y].push(i);
        }

        let target_edges = (self.avg_degree * n as f64 / 2.0).round() as usize;
        let mut edges = std::collections::BTreeSet::new();
        let mut attempts = 0;
        while edges.len() < target_edges && attempts < target_edges * 50 {
            attempts += 1;
            let u = rng.random_range(0..n);
            let v = if rng.random::<f64>() < self.homophily {
                let pool = &by_class[labels[u]];
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(0..n)
            };
            if u != v {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        let mut t = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in &edges {
            t.push((u, v, 1.0));
            t.push((v, u, 1.0));
        }
        let graph = CsrMatrix::from_triplets(n, &t)?;

        let vocab = (self.features / m).max(1);
        let mut features = DenseMatrix::zeros(n, self.features);
        for (i, &y) in labels.iter().enumerate() {
            for _ in 0..self.words_per_node {
                let j = if rng.random::<f64>() < self.feature_signal {
                    (y * vocab + rng.random_range(0..vocab)) % self.features
                } else {
                    rng.random_range(0..self.features)
                };
                features.set(i, j, 1.0);
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut taken = vec![0; m];
        let mut train = Vec::new();
        let mut rest = Vec::new();
        for i in order {
            if taken[labels[i]] < self.train_per_class {
                taken[labels[i]] += 1;
                train.push(i);
            } else {
                rest.push(i);
            }
        }
        train.sort_unstable();
        let val_end = self.val_size.min(rest.len());
        let test_end = (val_end + self.test_size).min(rest.len());
        let split = Split {
            train,
            val: rest[..val_end].to_vec(),
            test: rest[val_end..test_end].to_vec(),
        };
        Dataset::new(format!("planted-{}", self.seed), graph, features, labels, m, split)
    }
}
