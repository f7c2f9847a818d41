//! Accuracy statistics and the neighbor label-consistency analysis.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::tensor::CsrMatrix;

/// Fraction of each node's neighbors that share its label; `None` for
/// isolated nodes.
pub fn node_label_consistency(graph: &CsrMatrix, labels: &[usize]) -> Vec<Option<f64>> {
    (0..graph.n())
        .map(|i| {
            let (nbrs, _) = graph.row(i);
            let nbrs: Vec<usize> = nbrs.iter().copied().filter(|&j| j != i).collect();
            if nbrs.is_empty() {
                return None;
            }
            let same = nbrs.iter().filter(|&&j| labels[j] == labels[i]).count();
            Some(same as f64 / nbrs.len() as f64)
        })
        .collect()
}

/// Accuracy of test nodes bucketed by label consistency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCurve {
    /// `buckets + 1` edges from 0 to 1.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub correct: Vec<usize>,
}

impl ConsistencyCurve {
    pub fn buckets(&self) -> usize {
        self.counts.len()
    }

    /// `None` for empty buckets.
    pub fn accuracy(&self, bucket: usize) -> Option<f64> {
        (self.counts[bucket] > 0).then(|| self.correct[bucket] as f64 / self.counts[bucket] as f64)
    }

    pub fn midpoint(&self, bucket: usize) -> f64 {
        0.5 * (self.edges[bucket] + self.edges[bucket + 1])
    }

    /// Spearman correlation between bucket midpoint and bucket accuracy over
    /// populated buckets.
    pub fn spearman(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..self.buckets())
            .filter_map(|b| self.accuracy(b).map(|a| (self.midpoint(b), a)))
            .unzip();
        spearman(&xs, &ys)
    }

    /// Tab-separated `bucket_lo bucket_hi count accuracy` rows with a header;
    /// empty buckets print `NA` for accuracy.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("bucket_lo\tbucket_hi\tcount\taccuracy\n");
        for b in 0..self.buckets() {
            let acc = self
                .accuracy(b)
                .map_or_else(|| "NA".to_string(), |a| format!("{a:.6}"));
            writeln!(
                s,
                "{:.4}\t{:.4}\t{}\t{}",
                self.edges[b],
                self.edges[b + 1],
                self.counts[b],
                acc
            )
            .unwrap();
        }
        s
    }
}

/// Bucket of a consistency value in `[0, 1]`; 1.0 lands in the last bucket.
pub fn bucket_of(value: f64, buckets: usize) -> usize {
    ((value * buckets as f64) as usize).min(buckets - 1)
}

/// Buckets the non-isolated test nodes by label consistency and tallies
/// correct predictions per bucket.
pub fn consistency_accuracy_curve(
    ds: &Dataset,
    predictions: &[usize],
    buckets: usize,
) -> Result<ConsistencyCurve> {
    if buckets < 1 {
        return Err(Error::InvalidConfig("buckets must be at least 1".into()));
    }
    if predictions.len() != ds.num_nodes() {
        return Err(Error::InvalidConfig(format!(
            "{} predictions for {} nodes",
            predictions.len(),
            ds.num_nodes()
        )));
    }
    let consistency = node_label_consistency(&ds.graph, &ds.labels);
    let mut counts = vec![0; buckets];
    let mut correct = vec![0; buckets];
    for &i in &ds.split.test {
        if let Some(c) = consistency[i] {
            let b = bucket_of(c, buckets);
            counts[b] += 1;
            if predictions[i] == ds.labels[i] {
                correct[b] += 1;
            }
        }
    }
    let edges = (0..=buckets).map(|k| k as f64 / buckets as f64).collect();
    Ok(ConsistencyCurve {
        edges,
        counts,
        correct,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks). `None` with fewer
/// than two points or when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Mean and sample standard deviation of per-seed accuracies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// `n - 1` denominator; 0 for a single run.
    pub std: f64,
}

impl SeedAggregate {
    /// `mean±std%` with one decimal, the format of published result tables.
    pub fn percent(&self) -> String {
        format!("{:.1}±{:.1}%", 100.0 * self.mean, 100.0 * self.std)
    }
}

pub fn aggregate_seeds(accuracies: &[f64]) -> Result<SeedAggregate> {
    if accuracies.is_empty() {
        return Err(Error::InvalidConfig("cannot aggregate an empty list".into()));
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    let std = if accuracies.len() > 1 {
        (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(SeedAggregate {
        accuracies: accuracies.to_vec(),
        mean,
        std,
    })
}
