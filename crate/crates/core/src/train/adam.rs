use crate::error::{Error, Result};
use crate::gcn::{GcnGrads, GcnParams};
use crate::tensor::DenseMatrix;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// First/second moment accumulators for both weight matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: [DenseMatrix; 2],
    pub v: [DenseMatrix; 2],
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &GcnParams) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self {
            m: [z(&params.w0), z(&params.w1)],
            v: [z(&params.w0), z(&params.w1)],
            step: 0,
        }
    }
}

/// One Adam update of a flat parameter slice. Weight decay is coupled: it is
/// added to the gradient before the moment updates.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    weight_decay: f64,
) {
    let bc1 = 1.0 - BETA1.powi(step as i32);
    let bc2 = 1.0 - BETA2.powi(step as i32);
    for (((w, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        let g = g + weight_decay * *w;
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= lr * m_hat / (v_hat.sqrt() + EPS);
    }
}

pub fn adam_step(
    params: &mut GcnParams,
    grads: &GcnGrads,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.w0.shape() != grads.w0.shape() || state.m[0].shape() != params.w0.shape() {
        return Err(Error::shape("adam_step (w0)", params.w0.shape(), grads.w0.shape()));
    }
    if params.w1.shape() != grads.w1.shape() || state.m[1].shape() != params.w1.shape() {
        return Err(Error::shape("adam_step (w1)", params.w1.shape(), grads.w1.shape()));
    }
    if !grads.w0.is_finite() || !grads.w1.is_finite() {
        return Err(Error::NonFinite { what: "gradient" });
    }
    state.step += 1;
    let step = state.step;
    let [m0, m1] = &mut state.m;
    let [v0, v1] = &mut state.v;
    adam_update(params.w0.data_mut(), grads.w0.data(), m0.data_mut(), v0.data_mut(), step, lr, weight_decay);
    adam_update(params.w1.data_mut(), grads.w1.data(), m1.data_mut(), v1.data_mut(), step, lr, weight_decay);
    Ok(())
}
