//! Multi-seed experiments: the variant ablation, the sparse-label study and
//! the consistency analysis of a plain GCN.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{make_sparse_split, Dataset};
use crate::metrics::{aggregate_seeds, consistency_accuracy_curve, ConsistencyCurve, SeedAggregate};
use crate::train::{
    predict, pretrain_base_run, train_lc_prepared, Head, Prepared, RunResult, TrainConfig, Variant,
};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "LC_GNN_THREADS";

/// Thread count from `LC_GNN_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a pool of `threads` workers (rayon's default when `None`).
/// Results never depend on the thread count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub test_acc: f64,
    pub best_val_acc: f64,
    pub best_epoch: usize,
}

impl From<&RunResult> for SeedRun {
    fn from(r: &RunResult) -> Self {
        Self {
            seed: r.config.seed,
            test_acc: r.test_acc,
            best_val_acc: r.best_val_acc,
            best_epoch: r.best_epoch,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub name: String,
    pub test: SeedAggregate,
    pub runs: Vec<SeedRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    /// Labels per class for sparse runs; `None` for the dataset's own split.
    pub labels_per_class: Option<usize>,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub variants: Vec<VariantSummary>,
}

impl ExperimentReport {
    pub fn get(&self, variant: Variant) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.variant == variant)
    }

    /// Mean test accuracy of `variant`, if it was run.
    pub fn mean(&self, variant: Variant) -> Option<f64> {
        self.get(variant).map(|v| v.test.mean)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Plain-text table with one row per variant.
    pub fn to_table(&self) -> String {
        let header = match self.labels_per_class {
            Some(k) => format!("{} ({k} labels/class)", self.dataset),
            None => self.dataset.clone(),
        };
        let width = self
            .variants
            .iter()
            .map(|v| v.name.chars().count())
            .max()
            .unwrap_or(0)
            .max("Method".len());
        let mut s = String::new();
        writeln!(s, "{:<width$}  {}", "Method", header).unwrap();
        for v in &self.variants {
            writeln!(s, "{:<width$}  {}", v.name, v.test.percent()).unwrap();
        }
        s
    }
}

fn check_seeds(seeds: &[u64], min: usize) -> Result<()> {
    if seeds.len() < min {
        return Err(Error::InvalidConfig(format!(
            "need at least {min} seeds, got {}",
            seeds.len()
        )));
    }
    Ok(())
}

/// Pretrains once, then trains every requested variant from the same weights.
fn run_seed(ds: &Dataset, config: &TrainConfig, seed: u64, variants: &[Variant]) -> Result<Vec<RunResult>> {
    let prep = Prepared::new(ds);
    let base = TrainConfig {
        seed,
        variant: Variant::BaseOnly,
        ..config.clone()
    };
    let init = if config.pretrain_epochs > 0 {
        pretrain_base_run(&prep, &base)?
            .best_params
            .expect("run_stage always sets best_params")
    } else {
        crate::gcn::GcnParams::init(ds.num_features(), config.hidden, ds.num_classes, seed)
    };
    variants
        .par_iter()
        .map(|&variant| {
            let cfg = TrainConfig {
                seed,
                variant,
                ..config.clone()
            };
            train_lc_prepared(&prep, &cfg, init.clone())
        })
        .collect()
}

fn summarize(
    dataset: &str,
    labels_per_class: Option<usize>,
    config: &TrainConfig,
    seeds: &[u64],
    variants: &[Variant],
    per_seed: Vec<Vec<RunResult>>,
) -> Result<ExperimentReport> {
    let mut out = Vec::with_capacity(variants.len());
    for (k, &variant) in variants.iter().enumerate() {
        let runs: Vec<SeedRun> = per_seed.iter().map(|r| SeedRun::from(&r[k])).collect();
        let accs: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
        out.push(VariantSummary {
            variant,
            name: variant.display_name().to_string(),
            test: aggregate_seeds(&accs)?,
            runs,
        });
    }
    Ok(ExperimentReport {
        dataset: dataset.to_string(),
        labels_per_class,
        config: config.clone(),
        seeds: seeds.to_vec(),
        variants: out,
    })
}

/// All four variants on the dataset's own split, at least two seeds.
pub fn run_ablation(
    ds: &Dataset,
    config: &TrainConfig,
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    config.validate()?;
    check_seeds(seeds, 2)?;
    let variants = Variant::ALL;
    let per_seed = with_threads(threads, || {
        seeds
            .par_iter()
            .map(|&seed| run_seed(ds, config, seed, &variants))
            .collect::<Result<Vec<_>>>()
    })??;
    summarize(&ds.name, None, config, seeds, &variants, per_seed)
}

/// `variants` on a fresh `labels_per_class` split drawn per seed.
pub fn run_sparse_experiment(
    ds: &Dataset,
    labels_per_class: usize,
    config: &TrainConfig,
    seeds: &[u64],
    variants: &[Variant],
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    config.validate()?;
    check_seeds(seeds, 1)?;
    if variants.is_empty() {
        return Err(Error::InvalidConfig("no variants requested".into()));
    }
    let per_seed = with_threads(threads, || {
        seeds
            .par_iter()
            .map(|&seed| {
                let split = make_sparse_split(ds, labels_per_class, seed)?;
                let sparse = ds.with_split(split)?;
                run_seed(&sparse, config, seed, variants)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    summarize(&ds.name, Some(labels_per_class), config, seeds, variants, per_seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub dataset: String,
    pub seed: u64,
    pub test_acc: f64,
    pub curve: ConsistencyCurve,
    pub spearman: Option<f64>,
}

/// Trains a plain GCN and buckets its test accuracy by neighbor label
/// consistency.
pub fn consistency_analysis(ds: &Dataset, config: &TrainConfig, buckets: usize) -> Result<ConsistencyReport> {
    config.validate()?;
    let prep = Prepared::new(ds);
    let cfg = TrainConfig {
        variant: Variant::BaseOnly,
        pretrain_epochs: config.pretrain_epochs.max(1),
        ..config.clone()
    };
    let run = pretrain_base_run(&prep, &cfg)?;
    let params = run.best_params.as_ref().expect("run_stage always sets best_params");
    let pred = predict(&prep, params, Head::None)?;
    let curve = consistency_accuracy_curve(ds, &pred, buckets)?;
    Ok(ConsistencyReport {
        dataset: ds.name.clone(),
        seed: config.seed,
        test_acc: run.test_acc,
        spearman: curve.spearman(),
        curve,
    })
}
