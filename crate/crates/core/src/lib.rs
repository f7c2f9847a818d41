//! Graph convolutional node classification with a label-consistency head.
//!
//! A two-layer GCN produces a class distribution `Z` per node. The head
//! aggregates it as `Ẑ = RowNormalize(Z (ZᵀZ))`, which equals propagating
//! through the label-consistency matrix `RowNormalize(Z Zᵀ)` without ever
//! forming an `n x n` matrix, and an optional pairwise regularizer pulls
//! same-label training nodes toward agreeing distributions.

pub mod checkpoint;
pub mod error;
pub mod experiment;
pub mod fsutil;
pub mod gcn;
pub mod graph;
pub mod lc;
pub mod metrics;
pub mod rng;
pub mod selfcheck;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use experiment::{ConsistencyReport, ExperimentReport};
pub use gcn::GcnParams;
pub use graph::{load_dataset, write_dataset, Dataset, Split};
pub use tensor::{CsrMatrix, DenseMatrix};
pub use train::{RunResult, TrainConfig, Variant};
