//! Two-layer GCN producing per-node label distributions:
//! `Z = softmax(Â · ReLU(Â · X · W0) · W1)`, without bias terms.
//!
//! Dropout (inverted scaling) is applied to the input features and to the
//! hidden activations when training. Masks are drawn from a ChaCha8 stream
//! seeded by the caller, input entries first (nonzero features only, row-major)
//! and hidden entries second.

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tensor::{CsrMatrix, DenseMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnParams {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnGrads {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

impl GcnParams {
    /// Glorot-uniform weights for `features -> hidden -> classes`.
    pub fn init(features: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        use crate::rng::{derive_seed, STREAM_INIT};
        Self {
            w0: glorot_init(features, hidden, derive_seed(seed, STREAM_INIT, 0)),
            w1: glorot_init(hidden, classes, derive_seed(seed, STREAM_INIT, 1)),
        }
    }

    pub fn num_features(&self) -> usize {
        self.w0.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w0.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.w1.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.w0.is_finite() && self.w1.is_finite()
    }
}

impl GcnGrads {
    pub fn zeros_like(p: &GcnParams) -> Self {
        Self {
            w0: DenseMatrix::zeros(p.w0.rows(), p.w0.cols()),
            w1: DenseMatrix::zeros(p.w1.rows(), p.w1.cols()),
        }
    }
}

/// I.i.d. uniform entries on `[-a, a]` with `a = sqrt(6 / (rows + cols))`.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-a..=a)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("finite init")
}

/// Intermediates of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<'a> {
    a_hat: &'a CsrMatrix,
    params: &'a GcnParams,
    /// Features after input dropout.
    input: Cow<'a, DenseMatrix>,
    /// `Â X W0`, before the ReLU.
    pub pre_activation: DenseMatrix,
    /// ReLU output after hidden dropout.
    pub hidden: DenseMatrix,
    /// Per-entry hidden dropout scale (0 or `1 / (1 - rate)`); empty when off.
    hidden_scale: Vec<f64>,
    pub logits: DenseMatrix,
    pub z: DenseMatrix,
}

impl ForwardTrace<'_> {
    pub fn into_z(self) -> DenseMatrix {
        self.z
    }
}

fn check_shapes(a_hat: &CsrMatrix, x: &DenseMatrix, params: &GcnParams) -> Result<()> {
    if a_hat.n() != x.rows() {
        return Err(Error::shape("gcn_forward (Â vs X)", (a_hat.n(), a_hat.n()), x.shape()));
    }
    if x.cols() != params.w0.rows() {
        return Err(Error::shape("gcn_forward (X vs W0)", x.shape(), params.w0.shape()));
    }
    if params.w0.cols() != params.w1.rows() {
        return Err(Error::shape("gcn_forward (W0 vs W1)", params.w0.shape(), params.w1.shape()));
    }
    Ok(())
}

pub fn gcn_forward<'a>(
    a_hat: &'a CsrMatrix,
    x: &'a DenseMatrix,
    params: &'a GcnParams,
    dropout: f64,
    rng_seed: u64,
    training: bool,
) -> Result<ForwardTrace<'a>> {
    check_shapes(a_hat, x, params)?;
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::InvalidConfig(format!("dropout {dropout} not in [0, 1)")));
    }
    let active = training && dropout > 0.0;
    let keep_scale = 1.0 / (1.0 - dropout);
    let mut rng = rng_from_seed(rng_seed);

    let input = if active {
        let mut xd = x.clone();
        for v in xd.data_mut().iter_mut().filter(|v| **v != 0.0) {
            if rng.random::<f64>() < dropout {
                *v = 0.0;
            } else {
                *v *= keep_scale;
            }
        }
        Cow::Owned(xd)
    } else {
        Cow::Borrowed(x)
    };

    let pre_activation = a_hat.spmm(&input.matmul(&params.w0)?)?;
    let mut hidden = pre_activation.relu();
    let mut hidden_scale = Vec::new();
    if active {
        hidden_scale.reserve(hidden.data().len());
        for v in hidden.data_mut() {
            let s = if rng.random::<f64>() < dropout { 0.0 } else { keep_scale };
            *v *= s;
            hidden_scale.push(s);
        }
    }
    let logits = a_hat.spmm(&hidden.matmul(&params.w1)?)?;
    let z = logits.softmax_rows();
    Ok(ForwardTrace {
        a_hat,
        params,
        input,
        pre_activation,
        hidden,
        hidden_scale,
        logits,
        z,
    })
}

/// Softmax backward: `dL/dlogits` from `dL/dZ`.
fn softmax_backward(z: &DenseMatrix, upstream: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        let zr = z.row(i);
        let gr = upstream.row(i);
        let inner: f64 = zr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (o, (&zk, &gk)) in out.row_mut(i).iter_mut().zip(zr.iter().zip(gr)) {
            *o = zk * (gk - inner);
        }
    }
    out
}

/// Gradients of a scalar loss with respect to both weight matrices, given
/// `upstream = dL/dZ`. Reuses the dropout masks recorded in `trace`.
///
/// Â is assumed symmetric (it is, for the normalized adjacency), so it is
/// its own transpose in the backward products.
pub fn gcn_backward(trace: &ForwardTrace<'_>, upstream: &DenseMatrix) -> Result<GcnGrads> {
    if upstream.shape() != trace.z.shape() {
        return Err(Error::shape("gcn_backward", trace.z.shape(), upstream.shape()));
    }
    let a_hat = trace.a_hat;
    let g_logits = softmax_backward(&trace.z, upstream);
    let g_hw1 = a_hat.spmm(&g_logits)?;
    let w1 = trace.hidden.matmul_tn(&g_hw1)?;

    let mut g_hidden = g_hw1.matmul_nt(&trace.params.w1)?;
    if !trace.hidden_scale.is_empty() {
        for (g, &s) in g_hidden.data_mut().iter_mut().zip(&trace.hidden_scale) {
            *g *= s;
        }
    }
    for (g, &pre) in g_hidden.data_mut().iter_mut().zip(trace.pre_activation.data()) {
        if pre <= 0.0 {
            *g = 0.0;
        }
    }
    let g_xw0 = a_hat.spmm(&g_hidden)?;
    let w0 = trace.input.matmul_tn(&g_xw0)?;
    Ok(GcnGrads { w0, w1 })
}
