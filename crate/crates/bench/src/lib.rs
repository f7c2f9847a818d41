//! Input builders shared by the benchmarks.

use lc_gnn::graph::normalize_adjacency;
use lc_gnn::rng::rng_from_seed;
use lc_gnn::selfcheck::random_stochastic;
use lc_gnn::{CsrMatrix, DenseMatrix};
use rand::Rng;

/// Normalized adjacency of a random graph with about `avg_degree` neighbors
/// per node.
pub fn random_a_hat(n: usize, avg_degree: usize, seed: u64) -> CsrMatrix {
    let mut rng = rng_from_seed(seed);
    let mut edges = std::collections::BTreeSet::new();
    while edges.len() < n * avg_degree / 2 {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let t: Vec<_> = edges
        .iter()
        .flat_map(|&(i, j)| [(i, j, 1.0), (j, i, 1.0)])
        .collect();
    normalize_adjacency(&CsrMatrix::from_triplets(n, &t).expect("valid edges"))
}

pub fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("finite values")
}

pub fn random_z(n: usize, m: usize, seed: u64) -> DenseMatrix {
    random_stochastic(n, m, &mut rng_from_seed(seed))
}
