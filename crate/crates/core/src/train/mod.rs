//! Full-batch training: base GCN pretraining, the label-consistency stage,
//! best-validation model selection and evaluation.

mod adam;
mod config;

pub use adam::{adam_step, adam_update, AdamState, BETA1, BETA2, EPS};
pub use config::{default_lambda, TrainConfig, Variant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{gcn_backward, gcn_forward, GcnParams};
use crate::graph::{normalize_adjacency, row_normalize_features, Dataset};
use crate::lc::{
    build_consistency_mask, classification_loss, lc_aggregate, lc_objective_from,
    ConsistencyMask,
};
use crate::rng::{derive_seed, STREAM_LC_DROPOUT, STREAM_PRETRAIN_DROPOUT};
use crate::tensor::{CsrMatrix, DenseMatrix};

/// Tolerance for the row-stochastic check on every forward pass.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// How the label distribution is post-processed before classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    /// Predict from `Z` directly.
    None,
    /// `Ẑ = RowNormalize(Z ZᵀZ)`.
    Consistency,
    /// `Ẑ = Â Z`.
    Adjacency,
}

impl From<Variant> for Head {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Full | Variant::NoRl => Head::Consistency,
            Variant::NoLcNoRl => Head::Adjacency,
            Variant::BaseOnly => Head::None,
        }
    }
}

/// Normalized adjacency and features, computed once per dataset.
#[derive(Clone, Debug)]
pub struct Prepared<'a> {
    pub dataset: &'a Dataset,
    pub a_hat: CsrMatrix,
    pub features: DenseMatrix,
}

impl<'a> Prepared<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        Self {
            dataset,
            a_hat: normalize_adjacency(&dataset.graph),
            features: row_normalize_features(&dataset.features),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub classification_loss: f64,
    pub regularization_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the selected parameters.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    #[serde(skip)]
    pub best_params: Option<GcnParams>,
}

/// Fraction of `idx` whose prediction equals the label; 0 for an empty set.
pub fn accuracy(pred: &[usize], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let correct = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    correct as f64 / idx.len() as f64
}

/// Mean cross-entropy of `Z` over the training nodes, with gradient.
fn base_loss(z: &DenseMatrix, labels: &[usize], train: &[usize]) -> Result<(f64, DenseMatrix)> {
    let (sum, mut grad) = classification_loss(z, labels, train)?;
    let k = train.len() as f64;
    grad.scale(1.0 / k);
    Ok((sum / k, grad))
}

/// Applies the head to `Z`, checking row sums where the result is a distribution.
fn apply_head(head: Head, a_hat: &CsrMatrix, z: DenseMatrix) -> Result<DenseMatrix> {
    match head {
        Head::None => Ok(z),
        Head::Consistency => {
            let out = lc_aggregate(&z)?;
            out.z_hat.check_row_stochastic(ROW_SUM_TOL)?;
            Ok(out.z_hat)
        }
        Head::Adjacency => a_hat.spmm(&z),
    }
}

/// Dropout-free class distribution after the head, one row per node.
pub fn predict_proba(prep: &Prepared<'_>, params: &GcnParams, head: Head) -> Result<DenseMatrix> {
    let z = gcn_forward(&prep.a_hat, &prep.features, params, 0.0, 0, false)?.into_z();
    z.check_row_stochastic(ROW_SUM_TOL)?;
    apply_head(head, &prep.a_hat, z)
}

/// Argmax predictions (ties toward the lowest class).
pub fn predict(prep: &Prepared<'_>, params: &GcnParams, head: Head) -> Result<Vec<usize>> {
    Ok(predict_proba(prep, params, head)?.argmax_rows())
}

pub fn evaluate_prepared(prep: &Prepared<'_>, params: &GcnParams, head: Head) -> Result<Accuracy> {
    let pred = predict(prep, params, head)?;
    let ds = prep.dataset;
    Ok(Accuracy {
        train: accuracy(&pred, &ds.labels, &ds.split.train),
        val: accuracy(&pred, &ds.labels, &ds.split.val),
        test: accuracy(&pred, &ds.labels, &ds.split.test),
    })
}

/// Per-split accuracy of `params`, with or without a head.
pub fn evaluate(params: &GcnParams, ds: &Dataset, head: Head) -> Result<Accuracy> {
    evaluate_prepared(&Prepared::new(ds), params, head)
}

#[derive(Clone, Copy, Debug)]
enum Objective {
    /// Mean cross-entropy on `Z`.
    Base,
    /// Summed cross-entropy on `Ẑ = PZ` plus λ times the pairwise term.
    Consistency { lambda: f64 },
    /// Summed cross-entropy on `Ẑ = ÂZ`.
    Adjacency,
}

impl Objective {
    fn head(self) -> Head {
        match self {
            Objective::Base => Head::None,
            Objective::Consistency { .. } => Head::Consistency,
            Objective::Adjacency => Head::Adjacency,
        }
    }

    fn dropout_stream(self) -> u64 {
        match self {
            Objective::Base => STREAM_PRETRAIN_DROPOUT,
            _ => STREAM_LC_DROPOUT,
        }
    }
}

struct StepLoss {
    total: f64,
    classification: f64,
    regularization: f64,
}

fn loss_and_grad(
    objective: Objective,
    prep: &Prepared<'_>,
    mask: &ConsistencyMask,
    z: &DenseMatrix,
) -> Result<(StepLoss, DenseMatrix)> {
    let labels = &prep.dataset.labels;
    match objective {
        Objective::Base => {
            let (l, g) = base_loss(z, labels, &mask.nodes)?;
            Ok((
                StepLoss {
                    total: l,
                    classification: l,
                    regularization: 0.0,
                },
                g,
            ))
        }
        Objective::Consistency { lambda } => {
            let out = lc_aggregate(z)?;
            out.z_hat.check_row_stochastic(ROW_SUM_TOL)?;
            let (loss, _, g) = lc_objective_from(z, out, labels, mask, lambda)?;
            Ok((
                StepLoss {
                    total: loss.total,
                    classification: loss.classification,
                    regularization: loss.regularization,
                },
                g,
            ))
        }
        Objective::Adjacency => {
            let z_hat = prep.a_hat.spmm(z)?;
            let (l, g_hat) = classification_loss(&z_hat, labels, &mask.nodes)?;
            // Â is symmetric, so it is its own transpose here.
            let g = prep.a_hat.spmm(&g_hat)?;
            Ok((
                StepLoss {
                    total: l,
                    classification: l,
                    regularization: 0.0,
                },
                g,
            ))
        }
    }
}

fn run_stage(
    prep: &Prepared<'_>,
    config: &TrainConfig,
    init: GcnParams,
    epochs: usize,
    objective: Objective,
) -> Result<RunResult> {
    config.validate()?;
    let ds = prep.dataset;
    if init.num_features() != ds.num_features() || init.num_classes() != ds.num_classes {
        return Err(Error::InvalidConfig(format!(
            "initial parameters are {}x{}x{}, dataset needs {} features and {} classes",
            init.num_features(),
            init.hidden(),
            init.num_classes(),
            ds.num_features(),
            ds.num_classes
        )));
    }
    let mask = build_consistency_mask(&ds.labels, &ds.split.train)?;
    let head = objective.head();

    let mut params = init;
    let mut state = AdamState::new(&params);
    let mut history = Vec::with_capacity(epochs);
    let mut best: Option<(usize, f64, GcnParams)> = None;

    for epoch in 1..=epochs {
        let seed = derive_seed(config.seed, objective.dropout_stream(), epoch as u64);
        let trace = gcn_forward(&prep.a_hat, &prep.features, &params, config.dropout, seed, true)?;
        trace.z.check_row_stochastic(ROW_SUM_TOL)?;
        let (loss, g_z) = loss_and_grad(objective, prep, &mask, &trace.z)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite { what: "training loss" });
        }
        let grads = gcn_backward(&trace, &g_z)?;
        drop(trace);
        adam_step(&mut params, &grads, &mut state, config.lr, config.weight_decay)?;

        let pred = predict(prep, &params, head)?;
        let val_acc = accuracy(&pred, &ds.labels, &ds.split.val);
        history.push(EpochRecord {
            epoch,
            loss: loss.total,
            classification_loss: loss.classification,
            regularization_loss: loss.regularization,
            val_acc,
        });
        // strict comparison keeps the earliest epoch on ties
        if best.as_ref().is_none_or(|(_, acc, _)| val_acc > *acc) {
            best = Some((epoch, val_acc, params.clone()));
        }
    }

    let (best_epoch, best_val_acc, best_params) = best.ok_or_else(|| {
        Error::InvalidConfig("training needs at least one epoch".into())
    })?;
    let acc = evaluate_prepared(prep, &best_params, head)?;
    Ok(RunResult {
        dataset: ds.name.clone(),
        config: config.clone(),
        history,
        best_epoch,
        best_val_acc,
        train_acc: acc.train,
        test_acc: acc.test,
        best_params: Some(best_params),
    })
}

/// Trains a plain GCN from a fresh initialization for `pretrain_epochs` and
/// returns the full run (the selected parameters are in `best_params`).
pub fn pretrain_base_run(prep: &Prepared<'_>, config: &TrainConfig) -> Result<RunResult> {
    let ds = prep.dataset;
    let init = GcnParams::init(ds.num_features(), config.hidden, ds.num_classes, config.seed);
    if config.pretrain_epochs == 0 {
        return Err(Error::InvalidConfig("pretrain_epochs must be at least 1".into()));
    }
    run_stage(prep, config, init, config.pretrain_epochs, Objective::Base)
}

/// Best-validation parameters of a plain GCN trained for `pretrain_epochs`.
pub fn pretrain_base(ds: &Dataset, config: &TrainConfig) -> Result<GcnParams> {
    let run = pretrain_base_run(&Prepared::new(ds), config)?;
    Ok(run.best_params.expect("run_stage always sets best_params"))
}

/// Trains `config.variant` from `init` for `config.epochs` epochs.
pub fn train_lc_prepared(
    prep: &Prepared<'_>,
    config: &TrainConfig,
    init: GcnParams,
) -> Result<RunResult> {
    let objective = match config.variant {
        Variant::Full => Objective::Consistency {
            lambda: config.lambda,
        },
        Variant::NoRl => Objective::Consistency { lambda: 0.0 },
        Variant::NoLcNoRl => Objective::Adjacency,
        Variant::BaseOnly => Objective::Base,
    };
    run_stage(prep, config, init, config.epochs, objective)
}

pub fn train_lc(ds: &Dataset, config: &TrainConfig, init: GcnParams) -> Result<RunResult> {
    train_lc_prepared(&Prepared::new(ds), config, init)
}

/// Pretraining followed by the configured variant, or a fresh start when
/// `pretrain_epochs` is 0.
pub fn train_pipeline(prep: &Prepared<'_>, config: &TrainConfig) -> Result<RunResult> {
    let init = if config.pretrain_epochs > 0 {
        pretrain_base_run(prep, config)?
            .best_params
            .expect("run_stage always sets best_params")
    } else {
        let ds = prep.dataset;
        GcnParams::init(ds.num_features(), config.hidden, ds.num_classes, config.seed)
    };
    train_lc_prepared(prep, config, init)
}
