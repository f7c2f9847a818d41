//! Acceptance suite. Prints one `PASS`/`FAIL`/`BLOCKED` line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Criteria that need the real citation datasets read them from the
//! directory named by `LC_GNN_DATA` (subdirectories `cora/` and `citeseer/`
//! in the canonical format). Without it they report `BLOCKED`.
//! `LC_GNN_SEEDS` overrides the seed count (default 10) for quicker runs.

#![allow(clippy::needless_range_loop)]

use std::alloc::{GlobalAlloc, Layout, System};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use lc_gnn::experiment::{consistency_analysis, run_ablation, run_sparse_experiment, threads_from_env};
use lc_gnn::gcn::{gcn_backward, gcn_forward, GcnParams};
use lc_gnn::graph::normalize_adjacency;
use lc_gnn::graph::synthetic::PlantedPartition;
use lc_gnn::lc::{build_consistency_mask, lc_aggregate, lc_aggregate_naive, lc_objective};
use lc_gnn::rng::rng_from_seed;
use lc_gnn::train::{predict_proba, train_pipeline, Head, Prepared, ROW_SUM_TOL};
use lc_gnn::{load_dataset, CsrMatrix, DenseMatrix, TrainConfig, Variant};
use rand::Rng;

// ---------------------------------------------------------------------------
// allocation probe

struct Probe;

static TRACKING: AtomicBool = AtomicBool::new(false);
static LARGEST: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Probe {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACKING.load(Ordering::Relaxed) {
            LARGEST.fetch_max(layout.size(), Ordering::Relaxed);
        }
        System.alloc(layout)
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        if TRACKING.load(Ordering::Relaxed) {
            LARGEST.fetch_max(layout.size(), Ordering::Relaxed);
        }
        System.alloc_zeroed(layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        if TRACKING.load(Ordering::Relaxed) {
            LARGEST.fetch_max(new_size, Ordering::Relaxed);
        }
        System.realloc(ptr, layout, new_size)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Probe = Probe;

/// Largest single allocation in bytes made while `f` runs.
fn largest_allocation<T>(f: impl FnOnce() -> T) -> (T, usize) {
    LARGEST.store(0, Ordering::SeqCst);
    TRACKING.store(true, Ordering::SeqCst);
    let out = f();
    TRACKING.store(false, Ordering::SeqCst);
    (out, LARGEST.load(Ordering::SeqCst))
}

// ---------------------------------------------------------------------------
// reporting

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, name: &str, outcome: Outcome) {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                self.failed += 1;
                ("FAIL", d)
            }
            Outcome::Blocked(d) => ("BLOCKED", d),
        };
        println!("{tag:<8} {name}: {detail}");
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn from_error(e: impl std::fmt::Display) -> Outcome {
    Outcome::Fail(format!("error: {e}"))
}

// ---------------------------------------------------------------------------
// independent oracles, plain loops over Vec<Vec<f64>>

type Mat = Vec<Vec<f64>>;

fn to_mat(m: &DenseMatrix) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            c[i][j] = (0..k).map(|t| a[i][t] * b[t][j]).sum();
        }
    }
    c
}

fn naive_consistency(z: &Mat) -> Mat {
    let n = z.len();
    let m = z[0].len();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = (0..m).map(|c| z[i][c] * z[j][c]).sum();
        }
        let s: f64 = p[i].iter().sum();
        for v in &mut p[i] {
            *v /= s;
        }
    }
    mat_mul(&p, z)
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` from an edge list.
fn oracle_a_hat(n: usize, a: &CsrMatrix) -> Mat {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
        for j in 0..n {
            if a.has_entry(i, j) {
                row[j] = 1.0;
            }
        }
    }
    let d: Vec<f64> = m.iter().map(|r| r.iter().sum::<f64>()).collect();
    for i in 0..n {
        for j in 0..n {
            m[i][j] /= (d[i] * d[j]).sqrt();
        }
    }
    m
}

/// `L_C + λ L_R` through the whole model, written from the definitions.
fn oracle_loss(
    a_hat: &Mat,
    x: &Mat,
    w0: &Mat,
    w1: &Mat,
    labels: &[usize],
    train: &[usize],
    lambda: f64,
) -> f64 {
    const EPS: f64 = 1e-7;
    let mut h = mat_mul(&mat_mul(a_hat, x), w0);
    for row in &mut h {
        for v in row {
            *v = v.max(0.0);
        }
    }
    let logits = mat_mul(&mat_mul(a_hat, &h), w1);
    let z: Mat = logits
        .iter()
        .map(|r| {
            let mx = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = r.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        })
        .collect();
    let z_hat = naive_consistency(&z);
    let mut loss = 0.0;
    for &i in train {
        loss -= z_hat[i][labels[i]].max(EPS).ln();
    }
    let mut reg = 0.0;
    for &i in train {
        for &j in train {
            let nij: f64 = (0..z[i].len()).map(|c| z[i][c] * z[j][c]).sum();
            let nij = nij.clamp(EPS, 1.0 - EPS);
            reg -= if labels[i] == labels[j] {
                nij.ln()
            } else {
                (1.0 - nij).ln()
            };
        }
    }
    loss + lambda * reg
}

fn random_stochastic(n: usize, m: usize, rng: &mut impl Rng) -> DenseMatrix {
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| v / s));
    }
    DenseMatrix::from_vec(n, m, data).unwrap()
}

// ---------------------------------------------------------------------------
// criteria

fn aggregation_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let m = rng.random_range(2..=7);
        let z = random_stochastic(n, m, &mut rng);
        let fast = match lc_aggregate(&z) {
            Ok(o) => o.z_hat,
            Err(e) => return from_error(e),
        };
        let naive = lc_aggregate_naive(&z).unwrap();
        let oracle = naive_consistency(&to_mat(&z));
        for i in 0..n {
            for c in 0..m {
                worst = worst.max((fast.get(i, c) - naive.get(i, c)).abs());
                worst = worst.max((fast.get(i, c) - oracle[i][c]).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-10 && secs < 1.0,
        format!("100 trials, max |fast - naive| = {worst:.2e} (tol 1e-10), {secs:.3} s (limit 1 s)"),
    )
}

fn gradient_correctness() -> Outcome {
    const N: usize = 8;
    const P: usize = 5;
    const D: usize = 4;
    const M: usize = 3;
    const H: f64 = 1e-5;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let mut t = Vec::new();
        for i in 0..N {
            let j = (i + 1) % N;
            t.push((i, j, 1.0));
            t.push((j, i, 1.0));
        }
        for i in 0..N {
            for j in (i + 2)..N {
                if (i, j) != (0, N - 1) && rng.random::<f64>() < 0.25 {
                    t.push((i, j, 1.0));
                    t.push((j, i, 1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(N, &t).unwrap();
        let a_hat = normalize_adjacency(&a);
        let a_oracle = oracle_a_hat(N, &a);
        let x_data: Vec<f64> = (0..N * P).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = DenseMatrix::from_vec(N, P, x_data).unwrap();
        let x_oracle = to_mat(&x);
        let labels: Vec<usize> = (0..N).map(|_| rng.random_range(0..M)).collect();
        let train = vec![0, 2, 3, 5, 6];
        let params = GcnParams::init(P, D, M, seed);
        let mask = build_consistency_mask(&labels, &train).unwrap();
        for lambda in [0.0, 1.0, 2.0] {
            let trace = gcn_forward(&a_hat, &x, &params, 0.0, 0, false).unwrap();
            let (_, _, g_z) = lc_objective(&trace.z, &labels, &mask, lambda).unwrap();
            let grads = gcn_backward(&trace, &g_z).unwrap();
            let w0 = to_mat(&params.w0);
            let w1 = to_mat(&params.w1);
            let f = |w0: &Mat, w1: &Mat| oracle_loss(&a_oracle, &x_oracle, w0, w1, &labels, &train, lambda);
            for r in 0..P {
                for c in 0..D {
                    let (mut wp, mut wm) = (w0.clone(), w0.clone());
                    wp[r][c] += H;
                    wm[r][c] -= H;
                    let fd = (f(&wp, &w1) - f(&wm, &w1)) / (2.0 * H);
                    worst = worst.max(rel(grads.w0.get(r, c), fd));
                }
            }
            for r in 0..D {
                for c in 0..M {
                    let (mut wp, mut wm) = (w1.clone(), w1.clone());
                    wp[r][c] += H;
                    wm[r][c] -= H;
                    let fd = (f(&w0, &wp) - f(&w0, &wm)) / (2.0 * H);
                    worst = worst.max(rel(grads.w1.get(r, c), fd));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-4 && secs < 10.0,
        format!("5 seeds x lambda {{0,1,2}}, max relative error {worst:.2e} (tol 1e-4), {secs:.2} s (limit 10 s)"),
    )
}

/// Relative error; a 1e-6 floor on the denominator keeps gradients that are
/// exactly zero (dead ReLU units) from dividing by rounding noise.
fn rel(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn row_stochasticity() -> Outcome {
    // Training re-checks Z (and Ẑ where it is a distribution) on every forward
    // pass and aborts with an error on violation, so completing every variant
    // is the continuous assertion; the final outputs are re-checked here.
    let ds = PlantedPartition::small(11).generate().unwrap();
    let prep = Prepared::new(&ds);
    let mut worst: f64 = 0.0;
    for variant in Variant::ALL {
        let cfg = TrainConfig {
            epochs: 100,
            pretrain_epochs: 50,
            variant,
            seed: 1,
            ..TrainConfig::default()
        };
        let run = match train_pipeline(&prep, &cfg) {
            Ok(r) => r,
            Err(e) => return Outcome::Fail(format!("{variant}: {e}")),
        };
        let params = run.best_params.unwrap();
        let z = predict_proba(&prep, &params, Head::None).unwrap();
        worst = worst.max(z.row_stochastic_deviation().2);
        if matches!(variant, Variant::Full | Variant::NoRl) {
            let z_hat = predict_proba(&prep, &params, Head::Consistency).unwrap();
            worst = worst.max(z_hat.row_stochastic_deviation().2);
        }
    }
    let bad = DenseMatrix::from_rows(&[vec![0.7, 0.7], vec![0.5, 0.5]]);
    let detects = lc_aggregate(&bad).is_err();
    verdict(
        worst <= ROW_SUM_TOL && detects,
        format!(
            "all 4 variants trained with per-pass checks, final max |row sum - 1| = {worst:.2e} (tol 1e-9), violation detected: {detects}"
        ),
    )
}

fn memory_bound() -> Outcome {
    let (n, m) = (19_717, 3);
    let z = random_stochastic(n, m, &mut rng_from_seed(7));
    let limit = 2 * n * m * std::mem::size_of::<f64>();
    let (out, largest) = largest_allocation(|| lc_aggregate(&z));
    if let Err(e) = out {
        return from_error(e);
    }
    // the probe must see an explicit n x n product when one is formed
    let small = random_stochastic(500, 3, &mut rng_from_seed(8));
    let (_, naive_largest) = largest_allocation(|| lc_aggregate_naive(&small));
    let probe_works = naive_largest >= 500 * 500 * 8;
    verdict(
        largest <= limit && probe_works,
        format!(
            "n={n}, m={m}: largest allocation {largest} B <= 2nm floats = {limit} B; probe sees naive n x n: {probe_works}"
        ),
    )
}

fn determinism() -> Outcome {
    let ds = PlantedPartition::small(12).generate().unwrap();
    let prep = Prepared::new(&ds);
    let cfg = TrainConfig {
        epochs: 80,
        pretrain_epochs: 40,
        seed: 42,
        ..TrainConfig::default()
    };
    let a = serde_json::to_string(&train_pipeline(&prep, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&train_pipeline(&prep, &cfg).unwrap()).unwrap();
    let quick = TrainConfig {
        epochs: 20,
        pretrain_epochs: 20,
        ..cfg
    };
    let c = run_ablation(&ds, &quick, &[1, 2], Some(1)).unwrap().to_json();
    let d = run_ablation(&ds, &quick, &[1, 2], Some(4)).unwrap().to_json();
    verdict(
        a == b && c == d,
        format!(
            "repeated run JSON identical: {} ({} bytes); 1 vs 4 threads identical: {}",
            a == b,
            a.len(),
            c == d
        ),
    )
}

// ---------------------------------------------------------------------------
// data-gated criteria

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("LC_GNN_DATA").map(PathBuf::from)
}

fn seeds() -> Vec<u64> {
    let n = std::env::var("LC_GNN_SEEDS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    (0..n).collect()
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn data_criteria(report: &mut Report) {
    const FULL_SPLIT: &str = "Full-split accuracy (Cora)";
    const ABLATION: &str = "Ablation ordering (Cora)";
    const SPARSE: &str = "Sparse labels (Citeseer and Cora, 5/class)";
    const CURVE: &str = "Consistency curve Spearman > 0 (Cora)";
    let Some(root) = data_dir() else {
        let why = "LC_GNN_DATA not set; needs the Cora/Citeseer datasets in canonical form".to_string();
        for name in [FULL_SPLIT, ABLATION, SPARSE, CURVE] {
            report.record(name, Outcome::Blocked(why.clone()));
        }
        return;
    };
    let seeds = seeds();
    let threads = threads_from_env();
    let cora = load_dataset(root.join("cora"));
    let citeseer = load_dataset(root.join("citeseer"));

    match &cora {
        Ok(cora) => {
            let cfg = TrainConfig::for_dataset("cora");
            let start = Instant::now();
            match run_ablation(cora, &cfg, &seeds, threads) {
                Ok(r) => {
                    let base = r.mean(Variant::BaseOnly).unwrap();
                    let full = r.mean(Variant::Full).unwrap();
                    let no_rl = r.mean(Variant::NoRl).unwrap();
                    let no_lc = r.mean(Variant::NoLcNoRl).unwrap();
                    let gap = 100.0 * (full - base);
                    report.record(
                        FULL_SPLIT,
                        verdict(
                            base >= 0.795 && full >= 0.815 && gap >= 0.5,
                            format!(
                                "{} seeds: GCN* {} (>= 79.5%), LC-GCN {} (>= 81.5%), gap {gap:+.2} (>= +0.5), {:.0} s total",
                                seeds.len(),
                                pct(base),
                                pct(full),
                                start.elapsed().as_secs_f64()
                            ),
                        ),
                    );
                    report.record(
                        ABLATION,
                        verdict(
                            full >= no_rl - 0.003 && no_rl >= no_lc + 0.005,
                            format!(
                                "full {} >= no_rl {} - 0.3; no_rl >= no_lc_no_rl {} + 0.5",
                                pct(full),
                                pct(no_rl),
                                pct(no_lc)
                            ),
                        ),
                    );
                }
                Err(e) => {
                    report.record(FULL_SPLIT, from_error(&e));
                    report.record(ABLATION, from_error(&e));
                }
            }
        }
        Err(e) => {
            report.record(FULL_SPLIT, from_error(e));
            report.record(ABLATION, from_error(e));
        }
    }

    let variants = [Variant::BaseOnly, Variant::Full];
    let sparse_gap = |ds: &lc_gnn::Dataset| -> Result<(f64, f64), lc_gnn::Error> {
        let cfg = TrainConfig::for_dataset(&ds.name);
        let r = run_sparse_experiment(ds, 5, &cfg, &seeds, &variants, threads)?;
        Ok((r.mean(Variant::BaseOnly).unwrap(), r.mean(Variant::Full).unwrap()))
    };
    match (&citeseer, &cora) {
        (Ok(cs), Ok(co)) => match (sparse_gap(cs), sparse_gap(co)) {
            (Ok((cb, cf)), Ok((ob, of))) => {
                let (g1, g2) = (100.0 * (cf - cb), 100.0 * (of - ob));
                report.record(
                    SPARSE,
                    verdict(
                        g1 >= 8.0 && g2 >= 2.0,
                        format!(
                            "Citeseer GCN {} vs LC-GCN {} gap {g1:+.2} (>= +8.0); Cora GCN {} vs LC-GCN {} gap {g2:+.2} (>= +2.0)",
                            pct(cb),
                            pct(cf),
                            pct(ob),
                            pct(of)
                        ),
                    ),
                );
            }
            (Err(e), _) | (_, Err(e)) => report.record(SPARSE, from_error(e)),
        },
        (Err(e), _) | (_, Err(e)) => report.record(SPARSE, from_error(e)),
    }

    match &cora {
        Ok(cora) => {
            let cfg = TrainConfig::for_dataset("cora");
            match consistency_analysis(cora, &cfg, 10) {
                Ok(r) => report.record(
                    CURVE,
                    verdict(
                        r.spearman.is_some_and(|s| s > 0.0),
                        format!("Spearman {:?} over 10 buckets", r.spearman),
                    ),
                ),
                Err(e) => report.record(CURVE, from_error(e)),
            }
        }
        Err(e) => report.record(CURVE, from_error(e)),
    }
}

fn main() {
    let mut report = Report { failed: 0 };
    report.record("Aggregation identity", aggregation_identity());
    report.record("Gradient correctness", gradient_correctness());
    report.record("Row-stochasticity", row_stochasticity());
    data_criteria(&mut report);
    report.record("Memory bound (n=19717)", memory_bound());
    report.record("Determinism", determinism());
    if report.failed > 0 {
        println!("{} criterion(s) failed", report.failed);
        std::process::exit(1);
    }
}
