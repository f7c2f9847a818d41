use rand::seq::SliceRandom;

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, STREAM_SPLIT};

pub const SPARSE_VAL_SIZE: usize = 500;
pub const SPARSE_TEST_SIZE: usize = 1000;

/// Samples `labels_per_class` training nodes per class plus 500 validation
/// and 1000 test nodes from the remainder.
///
/// All nodes are shuffled once with the seed; training nodes are the first
/// `labels_per_class` of each class in that order, and validation/test take
/// the next unused nodes in the same order.
pub fn make_sparse_split(ds: &Dataset, labels_per_class: usize, seed: u64) -> Result<Split> {
    if labels_per_class == 0 {
        return Err(Error::InvalidConfig("labels_per_class must be positive".into()));
    }
    let counts = ds.class_counts();
    if let Some((class, &available)) = counts
        .iter()
        .enumerate()
        .find(|(_, &c)| c < labels_per_class)
    {
        return Err(Error::InsufficientClass {
            class,
            needed: labels_per_class,
            available,
        });
    }
    let n = ds.num_nodes();
    let train_size = labels_per_class * ds.num_classes;
    if n < train_size + SPARSE_VAL_SIZE + SPARSE_TEST_SIZE {
        return Err(Error::InvalidDataset(format!(
            "{n} nodes cannot hold {train_size} train + {SPARSE_VAL_SIZE} val + {SPARSE_TEST_SIZE} test"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(seed, STREAM_SPLIT, labels_per_class as u64));
    order.shuffle(&mut rng);

    let mut taken = vec![0usize; ds.num_classes];
    let mut train = Vec::with_capacity(train_size);
    let mut rest = Vec::with_capacity(n - train_size);
    for &i in &order {
        let y = ds.labels[i];
        if taken[y] < labels_per_class {
            taken[y] += 1;
            train.push(i);
        } else {
            rest.push(i);
        }
    }
    let val = rest[..SPARSE_VAL_SIZE].to_vec();
    let test = rest[SPARSE_VAL_SIZE..SPARSE_VAL_SIZE + SPARSE_TEST_SIZE].to_vec();
    train.sort_unstable();
    let split = Split { train, val, test };
    split.validate(n)?;
    Ok(split)
}
