//! Label-consistency head.
//!
//! Given a row-stochastic label distribution `Z` (n × m), the aggregation
//! matrix `P = RowNormalize(Z Zᵀ)` connects every pair of nodes in proportion
//! to the agreement of their predicted label distributions, and the
//! aggregated distribution is `Ẑ = P Z`.
//!
//! `P` is dense n × n and is never formed on the production path. Because each
//! row of `Z` sums to one, the row sums of `Z Zᵀ` and of `Z Zᵀ Z` coincide, so
//!
//! ```text
//! RowNormalize(Z Zᵀ) Z  ==  RowNormalize(Z (Zᵀ Z))
//! ```
//!
//! and the right-hand side needs only the m × m Gram matrix `Zᵀ Z` plus one
//! n × m product. [`lc_aggregate_naive`] keeps the explicit form for testing.
//!
//! Training adds two losses: cross-entropy of `Ẑ` on the labeled nodes, and a
//! pairwise cross-entropy between the predicted agreement `N = Z Zᵀ` and the
//! same-label indicator `M`, both restricted to labeled nodes.

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Clamp applied to every log argument.
pub const LOG_EPS: f64 = 1e-7;

/// Tolerance on row sums accepted as row-stochastic input.
pub const STOCHASTIC_TOL: f64 = 1e-8;

/// Same-label indicator over the labeled nodes, self-pairs included.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyMask {
    /// Labeled node indices, in the order used for the mask rows/columns.
    pub nodes: Vec<usize>,
    /// `|nodes| × |nodes|` 0/1 matrix.
    pub mask: DenseMatrix,
}

impl ConsistencyMask {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Result of the label-consistency aggregation.
#[derive(Clone, Debug)]
pub struct LcOutput {
    /// `Ẑ`, n × m.
    pub z_hat: DenseMatrix,
    /// `Zᵀ Z`, m × m.
    pub gram: DenseMatrix,
    /// Row sums of `Z (Zᵀ Z)` used for normalization.
    pub row_sums: Vec<f64>,
}

fn check_input(z: &DenseMatrix) -> Result<()> {
    if z.rows() == 0 || z.cols() == 0 {
        return Err(Error::InvalidConfig("label distribution must be non-empty".into()));
    }
    if z.data().iter().any(|&v| v < 0.0) {
        let (row, _) = z
            .row_iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|&v| v < 0.0))
            .unwrap();
        let sum = z.row(row).iter().sum();
        return Err(Error::NotRowStochastic {
            row,
            sum,
            deviation: (sum - 1.0).abs(),
        });
    }
    z.check_row_stochastic(STOCHASTIC_TOL)
}

/// `Ẑ = RowNormalize(Z (Zᵀ Z))`, computed in O(n m²) time and O(n m + m²) memory.
pub fn lc_aggregate(z: &DenseMatrix) -> Result<LcOutput> {
    check_input(z)?;
    lc_aggregate_unchecked(z)
}

/// [`lc_aggregate`] without the row-stochastic precondition.
///
/// Off the simplex this evaluates the Gram-matrix formula literally, which is
/// what [`lc_backward`] differentiates; finite-difference checks that perturb
/// `Z` freely need this entry point.
pub fn lc_aggregate_unchecked(z: &DenseMatrix) -> Result<LcOutput> {
    let gram = z.matmul_tn(z)?;
    let mut z_hat = z.matmul(&gram)?;
    let mut row_sums = Vec::with_capacity(z.rows());
    for i in 0..z_hat.rows() {
        let row = z_hat.row_mut(i);
        let s: f64 = row.iter().sum();
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::NonPositiveRowSum { row: i });
        }
        row.iter_mut().for_each(|v| *v /= s);
        row_sums.push(s);
    }
    Ok(LcOutput {
        z_hat,
        gram,
        row_sums,
    })
}

/// `P Z` with `P = RowNormalize(Z Zᵀ)` formed explicitly. O(n²) memory; for tests.
pub fn lc_aggregate_naive(z: &DenseMatrix) -> Result<DenseMatrix> {
    check_input(z)?;
    let p = lc_aggregation_matrix(z)?;
    p.matmul(z)
}

/// The dense aggregation matrix `RowNormalize(Z Zᵀ)`.
pub fn lc_aggregation_matrix(z: &DenseMatrix) -> Result<DenseMatrix> {
    z.matmul_nt(z)?.row_normalize()
}

pub fn build_consistency_mask(labels: &[usize], train_idx: &[usize]) -> Result<ConsistencyMask> {
    if train_idx.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    let ys = train_idx
        .iter()
        .map(|&i| {
            labels.get(i).copied().ok_or_else(|| {
                Error::InvalidDataset(format!("training node {i} has no label"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = ys.len();
    let mut mask = DenseMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            if ys[a] == ys[b] {
                mask.set(a, b, 1.0);
            }
        }
    }
    Ok(ConsistencyMask {
        nodes: train_idx.to_vec(),
        mask,
    })
}

/// `-Σ_{i ∈ train} ln max(ẑ[i, y_i], ε)` and its gradient with respect to `Ẑ`.
pub fn classification_loss(
    z_hat: &DenseMatrix,
    labels: &[usize],
    train_idx: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if train_idx.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    let m = z_hat.cols();
    let mut grad = DenseMatrix::zeros(z_hat.rows(), m);
    let mut loss = 0.0;
    for &i in train_idx {
        let y = labels[i];
        if y >= m {
            return Err(Error::LabelOutOfRange {
                node: i,
                label: y,
                num_classes: m,
            });
        }
        let p = z_hat.get(i, y);
        if p > LOG_EPS {
            loss -= p.ln();
            grad.set(i, y, grad.get(i, y) - 1.0 / p);
        } else {
            loss -= LOG_EPS.ln();
        }
    }
    Ok((loss, grad))
}

/// Pairwise cross-entropy between `N = Z_L Z_Lᵀ` and the mask over labeled
/// nodes, with `N` clamped into `[ε, 1 − ε]`. Only the labeled block of `N`
/// is computed. Returns the loss and its gradient with respect to `Z`.
pub fn regularization_loss(z: &DenseMatrix, mask: &ConsistencyMask) -> Result<(f64, DenseMatrix)> {
    let z_l = z.select_rows(&mask.nodes);
    let n_block = z_l.matmul_nt(&z_l)?;
    let k = mask.len();
    let mut g_n = DenseMatrix::zeros(k, k);
    let mut loss = 0.0;
    for a in 0..k {
        for b in 0..k {
            let same = mask.mask.get(a, b);
            let raw = n_block.get(a, b);
            let c = raw.clamp(LOG_EPS, 1.0 - LOG_EPS);
            loss -= same * c.ln() + (1.0 - same) * (1.0 - c).ln();
            if raw > LOG_EPS && raw < 1.0 - LOG_EPS {
                g_n.set(a, b, -same / raw + (1.0 - same) / (1.0 - raw));
            }
        }
    }
    // dN_ab/dz_a = z_b and dN_ab/dz_b = z_a, so dL/dZ_L = (G + Gᵀ) Z_L.
    let mut sym = g_n.clone();
    for a in 0..k {
        for b in 0..k {
            sym.set(a, b, g_n.get(a, b) + g_n.get(b, a));
        }
    }
    let g_l = sym.matmul(&z_l)?;
    let mut grad = DenseMatrix::zeros(z.rows(), z.cols());
    for (r, &i) in mask.nodes.iter().enumerate() {
        for (g, &v) in grad.row_mut(i).iter_mut().zip(g_l.row(r)) {
            *g += v;
        }
    }
    Ok((loss, grad))
}

/// `L = L_C + λ L_R`.
pub fn total_loss(l_c: f64, l_r: f64, lambda: f64) -> f64 {
    l_c + lambda * l_r
}

/// Backward through `Ẑ = RowNormalize(Z (Zᵀ Z))`, including the dependence of
/// the normalizer on `Z`.
pub fn lc_aggregate_backward(
    z: &DenseMatrix,
    out: &LcOutput,
    upstream_zhat: &DenseMatrix,
) -> Result<DenseMatrix> {
    if upstream_zhat.shape() != z.shape() || out.z_hat.shape() != z.shape() {
        return Err(Error::shape("lc_backward", z.shape(), upstream_zhat.shape()));
    }
    // dL/dT for T = Z C, with Ẑ_ik = T_ik / s_i.
    let mut g_t = DenseMatrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        let g = upstream_zhat.row(i);
        let zh = out.z_hat.row(i);
        let inner: f64 = g.iter().zip(zh).map(|(a, b)| a * b).sum();
        let s = out.row_sums[i];
        for (o, &gk) in g_t.row_mut(i).iter_mut().zip(g) {
            *o = (gk - inner) / s;
        }
    }
    // T = Z C with C = ZᵀZ symmetric: dZ = G_T C + Z (S + Sᵀ), S = Zᵀ G_T.
    let mut grad = g_t.matmul(&out.gram)?;
    let s = z.matmul_tn(&g_t)?;
    let m = s.rows();
    let mut s_sym = s.clone();
    for a in 0..m {
        for b in 0..m {
            s_sym.set(a, b, s.get(a, b) + s.get(b, a));
        }
    }
    grad.add_scaled(&z.matmul(&s_sym)?, 1.0)?;
    Ok(grad)
}

/// `dL/dZ` for `L = L_C(Ẑ) + λ L_R(Z)`: the aggregation path carries
/// `upstream_zhat = dL_C/dẐ`, the regularization path is added with weight λ.
pub fn lc_backward(
    z: &DenseMatrix,
    out: &LcOutput,
    upstream_zhat: &DenseMatrix,
    mask: &ConsistencyMask,
    lambda: f64,
) -> Result<DenseMatrix> {
    let mut grad = lc_aggregate_backward(z, out, upstream_zhat)?;
    if lambda != 0.0 {
        let (_, g_r) = regularization_loss(z, mask)?;
        grad.add_scaled(&g_r, lambda)?;
    }
    Ok(grad)
}

/// Loss terms of one head evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LcLoss {
    pub classification: f64,
    pub regularization: f64,
    pub total: f64,
}

/// Forward and backward of the whole head for a given `Z`.
pub fn lc_objective(
    z: &DenseMatrix,
    labels: &[usize],
    mask: &ConsistencyMask,
    lambda: f64,
) -> Result<(LcLoss, LcOutput, DenseMatrix)> {
    let out = lc_aggregate(z)?;
    lc_objective_from(z, out, labels, mask, lambda)
}

pub(crate) fn lc_objective_from(
    z: &DenseMatrix,
    out: LcOutput,
    labels: &[usize],
    mask: &ConsistencyMask,
    lambda: f64,
) -> Result<(LcLoss, LcOutput, DenseMatrix)> {
    let (l_c, g_zhat) = classification_loss(&out.z_hat, labels, &mask.nodes)?;
    let mut grad = lc_aggregate_backward(z, &out, &g_zhat)?;
    let l_r = if lambda != 0.0 {
        let (l_r, g_r) = regularization_loss(z, mask)?;
        grad.add_scaled(&g_r, lambda)?;
        l_r
    } else {
        0.0
    };
    let loss = LcLoss {
        classification: l_c,
        regularization: l_r,
        total: total_loss(l_c, l_r, lambda),
    };
    Ok((loss, out, grad))
}
