use crate::tensor::{CsrMatrix, DenseMatrix};

/// Symmetric renormalized adjacency `D̃^{-1/2} (A + I) D̃^{-1/2}`, where `D̃`
/// holds the row sums of `A + I`.
///
/// Entry `(i, j)` is computed as `a_ij * (s_i * s_j)` with `s = d̃^{-1/2}`, so
/// the output is bit-for-bit symmetric whenever `a` is.
pub fn normalize_adjacency(a: &CsrMatrix) -> CsrMatrix {
    let n = a.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = a.row(i).1.iter().sum::<f64>() + 1.0;
            1.0 / deg.sqrt()
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut diag_done = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if !diag_done && j >= i {
                if j == i {
                    col_idx.push(i);
                    values.push((v + 1.0) * (inv_sqrt[i] * inv_sqrt[i]));
                    diag_done = true;
                    continue;
                }
                col_idx.push(i);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
                diag_done = true;
            }
            col_idx.push(j);
            values.push(v * (inv_sqrt[i] * inv_sqrt[j]));
        }
        if !diag_done {
            col_idx.push(i);
            values.push(inv_sqrt[i] * inv_sqrt[i]);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(n, row_ptr, col_idx, values).expect("normalized adjacency keeps CSR structure")
}

/// Divides each nonzero row by its sum; all-zero rows stay zero.
pub fn row_normalize_features(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let s: f64 = row.iter().sum();
        if s != 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    out
}
