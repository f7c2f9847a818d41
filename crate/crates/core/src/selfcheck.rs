//! Numerical self-checks run by `lc-gnn selftest`: the fast aggregation
//! against the explicit `n x n` product, and analytic gradients against
//! central finite differences.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gcn::{gcn_backward, gcn_forward, GcnParams};
use crate::graph::normalize_adjacency;
use crate::lc::{build_consistency_mask, lc_aggregate, lc_aggregate_naive, lc_objective};
use crate::rng::rng_from_seed;
use crate::tensor::{CsrMatrix, DenseMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Random row-stochastic matrix from a softmax of uniform logits.
pub fn random_stochastic(n: usize, m: usize, rng: &mut impl Rng) -> DenseMatrix {
    let mut z = DenseMatrix::zeros(n, m);
    for v in z.data_mut() {
        *v = rng.random_range(-3.0..3.0);
    }
    z.softmax_rows()
}

/// Max absolute gap between the Gram-matrix aggregation and the explicit one
/// over `trials` random inputs (n in 2..=50, m in 2..=7).
pub fn identity_check(trials: usize, seed: u64, tolerance: f64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..=50);
        let m = rng.random_range(2..=7);
        let z = random_stochastic(n, m, &mut rng);
        let fast = lc_aggregate(&z)?.z_hat;
        let naive = lc_aggregate_naive(&z)?;
        max_error = max_error.max(fast.max_abs_diff(&naive));
    }
    Ok(CheckReport {
        name: "aggregation identity".into(),
        trials,
        max_error,
        tolerance,
        passed: max_error <= tolerance,
    })
}

/// Random undirected graph with every node on a ring plus extra chords.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> CsrMatrix {
    let mut t = Vec::new();
    let add = |i: usize, j: usize, t: &mut Vec<(usize, usize, f64)>| {
        if i != j && !t.iter().any(|&(a, b, _)| a == i && b == j) {
            t.push((i, j, 1.0));
            t.push((j, i, 1.0));
        }
    };
    for i in 0..n {
        add(i, (i + 1) % n, &mut t);
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.random::<f64>() < 0.2 {
                add(i, j, &mut t);
            }
        }
    }
    CsrMatrix::from_triplets(n, &t).expect("valid triplets")
}

/// Relative error with a small absolute floor so exact zeros compare cleanly.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Full-model objective with dropout off.
fn objective(
    a_hat: &CsrMatrix,
    x: &DenseMatrix,
    params: &GcnParams,
    labels: &[usize],
    train: &[usize],
    lambda: f64,
) -> Result<f64> {
    let z = gcn_forward(a_hat, x, params, 0.0, 0, false)?.into_z();
    let mask = build_consistency_mask(labels, train)?;
    Ok(lc_objective(&z, labels, &mask, lambda)?.0.total)
}

/// Max relative error between backpropagated and central-difference weight
/// gradients of `L_C + λ L_R` on random 8-node graphs (5 features, 4 hidden,
/// 3 classes), one graph per seed.
pub fn gradient_check(seeds: &[u64], lambdas: &[f64], tolerance: f64) -> Result<CheckReport> {
    const N: usize = 8;
    const P: usize = 5;
    const D: usize = 4;
    const M: usize = 3;
    const H: f64 = 1e-5;
    let mut max_error: f64 = 0.0;
    let mut trials = 0;
    for &seed in seeds {
        let mut rng = rng_from_seed(seed);
        let a_hat = normalize_adjacency(&random_graph(N, &mut rng));
        let mut x = DenseMatrix::zeros(N, P);
        for v in x.data_mut() {
            *v = rng.random_range(0.0..1.0);
        }
        let labels: Vec<usize> = (0..N).map(|i| i % M).collect();
        let train = vec![0, 1, 2, 4, 5];
        let params = GcnParams::init(P, D, M, seed);
        for &lambda in lambdas {
            trials += 1;
            let trace = gcn_forward(&a_hat, &x, &params, 0.0, 0, false)?;
            let mask = build_consistency_mask(&labels, &train)?;
            let (_, _, g_z) = lc_objective(&trace.z, &labels, &mask, lambda)?;
            let grads = gcn_backward(&trace, &g_z)?;
            for which in 0..2 {
                let len = if which == 0 { P * D } else { D * M };
                for k in 0..len {
                    let mut plus = params.clone();
                    let mut minus = params.clone();
                    let (wp, wm) = if which == 0 {
                        (plus.w0.data_mut(), minus.w0.data_mut())
                    } else {
                        (plus.w1.data_mut(), minus.w1.data_mut())
                    };
                    wp[k] += H;
                    wm[k] -= H;
                    let fd = (objective(&a_hat, &x, &plus, &labels, &train, lambda)?
                        - objective(&a_hat, &x, &minus, &labels, &train, lambda)?)
                        / (2.0 * H);
                    let an = if which == 0 { grads.w0.data()[k] } else { grads.w1.data()[k] };
                    max_error = max_error.max(relative_error(an, fd));
                }
            }
        }
    }
    Ok(CheckReport {
        name: "gradient check".into(),
        trials,
        max_error,
        tolerance,
        passed: max_error <= tolerance,
    })
}
