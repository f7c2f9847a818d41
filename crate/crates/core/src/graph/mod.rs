//! Datasets: canonical file format, adjacency/feature normalization and splits.

mod dataset;
mod io;
mod normalize;
mod split;
pub mod synthetic;

pub use dataset::{Dataset, Split};
pub use io::{
    load_dataset, write_dataset, Meta, EDGES_FILE, FEATURES_FILE, LABELS_FILE, META_FILE,
    SPLITS_FILE,
};
pub use normalize::{normalize_adjacency, row_normalize_features};
pub use split::{make_sparse_split, SPARSE_TEST_SIZE, SPARSE_VAL_SIZE};
