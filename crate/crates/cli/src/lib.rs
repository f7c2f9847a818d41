//! Argument parsing and command execution for the `lc-gnn` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lc_gnn::experiment::{
    consistency_analysis, run_ablation, run_sparse_experiment, threads_from_env, with_threads,
};
use lc_gnn::fsutil::write_atomic;
use lc_gnn::selfcheck::{gradient_check, identity_check};
use lc_gnn::train::{evaluate, train_pipeline, Head, Prepared};
use lc_gnn::{checkpoint, load_dataset, Dataset, TrainConfig, Variant};

#[derive(Debug)]
pub enum CliError {
    /// `--help` or `--version` output; not a failure.
    Info(String),
    Usage(String),
    Run(lc_gnn::Error),
    /// A self-check or acceptance threshold was not met.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Run(_) | CliError::Check(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Info(s) => f.write_str(s.trim_end()),
            CliError::Usage(s) => f.write_str(s.trim_end()),
            CliError::Run(e) => write!(f, "error: {e}"),
            CliError::Check(s) => write!(f, "check failed: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lc_gnn::Error> for CliError {
    fn from(e: lc_gnn::Error) -> Self {
        CliError::Run(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lc-gnn", version, about = "Label-consistency GCN training and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Pretrain a GCN and train one variant on the dataset's split.
    Train(TrainArgs),
    /// Score a saved checkpoint on the dataset's split.
    Evaluate(EvalArgs),
    /// All four variants over several seeds.
    Ablate(MultiArgs),
    /// Variants on freshly sampled k-labels-per-class splits.
    Sparse(SparseArgs),
    /// Test accuracy of a plain GCN bucketed by neighbor label consistency.
    Consistency(ConsistencyArgs),
    /// Numerical checks of the aggregation identity and the gradients.
    Selftest,
}

#[derive(Debug, Clone, Args)]
struct Hyper {
    /// Regularization weight (default 2.0 for Cora, 1.0 otherwise).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long = "weight-decay", default_value_t = 5e-4)]
    weight_decay: f64,
    /// Epochs of the variant stage.
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Epochs of plain-GCN pretraining (0 starts from a fresh init).
    #[arg(long = "pretrain-epochs", default_value_t = 200)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Worker threads (default: LC_GNN_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Canonical dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory for result.json and model.ckpt.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "full")]
    variant: String,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Variant the checkpoint was trained as; selects the output head.
    #[arg(long, default_value = "full")]
    variant: String,
}

#[derive(Debug, Args)]
struct MultiArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds; `a..b` ranges are accepted.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Debug, Args)]
struct SparseArgs {
    #[command(flatten)]
    common: MultiArgs,
    #[arg(long = "labels-per-class", default_value_t = 5)]
    labels_per_class: usize,
    /// Comma-separated variants.
    #[arg(long, default_value = "base_only,full")]
    variants: String,
}

#[derive(Debug, Args)]
struct ConsistencyArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    buckets: usize,
    #[command(flatten)]
    hyper: Hyper,
}

/// A fully validated command.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Train {
        data: PathBuf,
        out: Option<PathBuf>,
        hyper: HyperSettings,
    },
    Evaluate {
        data: PathBuf,
        checkpoint: PathBuf,
        variant: Variant,
    },
    Ablate {
        data: PathBuf,
        out: Option<PathBuf>,
        seeds: Vec<u64>,
        hyper: HyperSettings,
    },
    Sparse {
        data: PathBuf,
        out: Option<PathBuf>,
        seeds: Vec<u64>,
        labels_per_class: usize,
        variants: Vec<Variant>,
        hyper: HyperSettings,
    },
    Consistency {
        data: PathBuf,
        out: Option<PathBuf>,
        buckets: usize,
        hyper: HyperSettings,
    },
    Selftest,
}

/// Hyperparameters before the dataset (and so the default λ) is known.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSettings {
    pub lambda: Option<f64>,
    pub base: TrainConfig,
    pub threads: Option<usize>,
}

impl HyperSettings {
    fn from_args(h: &Hyper, seed: u64, variant: Variant) -> CliResult<Self> {
        let base = TrainConfig {
            lr: h.lr,
            weight_decay: h.weight_decay,
            lambda: h.lambda.unwrap_or(1.0),
            epochs: h.epochs,
            pretrain_epochs: h.pretrain_epochs,
            hidden: h.hidden,
            dropout: h.dropout,
            seed,
            variant,
        };
        base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if h.threads == Some(0) {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        Ok(Self {
            lambda: h.lambda,
            base,
            threads: h.threads.or_else(threads_from_env),
        })
    }

    /// Config for a dataset, filling in its default λ when none was given.
    pub fn config_for(&self, dataset: &str) -> TrainConfig {
        TrainConfig {
            lambda: self
                .lambda
                .unwrap_or_else(|| lc_gnn::train::default_lambda(dataset)),
            ..self.base.clone()
        }
    }
}

fn require(opt: Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    opt.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn parse_variant(s: &str) -> CliResult<Variant> {
    s.trim().parse().map_err(|e: lc_gnn::Error| CliError::Usage(e.to_string()))
}

/// Parses `1,2,5..8` into `[1, 2, 5, 6, 7]`.
pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CliError::Usage(format!("bad seed list entry {part:?}"));
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a >= b {
                return Err(bad());
            }
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty seed list".into()));
    }
    Ok(out)
}

/// Parses command-line arguments (without the program name). Never panics.
pub fn parse_args<I, T>(args: I) -> CliResult<Command>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("lc-gnn")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => CliError::Info(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    })?;
    Ok(match cli.command {
        Cmd::Train(a) => {
            let variant = parse_variant(&a.variant)?;
            Command::Train {
                data: require(a.data, "data")?,
                out: a.out,
                hyper: HyperSettings::from_args(&a.hyper, a.seed, variant)?,
            }
        }
        Cmd::Evaluate(a) => Command::Evaluate {
            data: require(a.data, "data")?,
            checkpoint: require(a.checkpoint, "checkpoint")?,
            variant: parse_variant(&a.variant)?,
        },
        Cmd::Ablate(a) => Command::Ablate {
            data: require(a.data, "data")?,
            out: a.out,
            seeds: parse_seeds(&a.seeds)?,
            hyper: HyperSettings::from_args(&a.hyper, 0, Variant::Full)?,
        },
        Cmd::Sparse(a) => {
            if a.labels_per_class == 0 {
                return Err(CliError::Usage("--labels-per-class must be positive".into()));
            }
            let variants = a
                .variants
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(parse_variant)
                .collect::<CliResult<Vec<_>>>()?;
            if variants.is_empty() {
                return Err(CliError::Usage("--variants is empty".into()));
            }
            Command::Sparse {
                data: require(a.common.data, "data")?,
                out: a.common.out,
                seeds: parse_seeds(&a.common.seeds)?,
                labels_per_class: a.labels_per_class,
                variants,
                hyper: HyperSettings::from_args(&a.common.hyper, 0, Variant::Full)?,
            }
        }
        Cmd::Consistency(a) => {
            if a.buckets == 0 {
                return Err(CliError::Usage("--buckets must be at least 1".into()));
            }
            Command::Consistency {
                data: require(a.data, "data")?,
                out: a.out,
                buckets: a.buckets,
                hyper: HyperSettings::from_args(&a.hyper, a.seed, Variant::BaseOnly)?,
            }
        }
        Cmd::Selftest => Command::Selftest,
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| lc_gnn::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes())?;
    Ok(path)
}

fn load(data: &Path) -> CliResult<Dataset> {
    Ok(load_dataset(data)?)
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Runs a parsed command and returns the text for stdout.
pub fn run(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Train { data, out, hyper } => {
            let ds = load(&data)?;
            let cfg = hyper.config_for(&ds.name);
            let prep = Prepared::new(&ds);
            let run = with_threads(hyper.threads, || train_pipeline(&prep, &cfg))??;
            let mut text = format!(
                "{} {} seed {}: best epoch {}, val {}, train {}, test {}\n",
                ds.name,
                cfg.variant,
                cfg.seed,
                run.best_epoch,
                pct(run.best_val_acc),
                pct(run.train_acc),
                pct(run.test_acc)
            );
            if let Some(dir) = out {
                let json = serde_json::to_string_pretty(&run).expect("result serializes") + "\n";
                let r = write_out(&dir, "result.json", &json)?;
                let ck = dir.join("model.ckpt");
                checkpoint::save(run.best_params.as_ref().expect("trained params"), &ck)?;
                text.push_str(&format!("wrote {} and {}\n", r.display(), ck.display()));
            }
            Ok(text)
        }
        Command::Evaluate {
            data,
            checkpoint: path,
            variant,
        } => {
            let ds = load(&data)?;
            let params = checkpoint::load(&path)?;
            let acc = evaluate(&params, &ds, Head::from(variant))?;
            Ok(serde_json::to_string_pretty(&acc).expect("accuracy serializes") + "\n")
        }
        Command::Ablate {
            data,
            out,
            seeds,
            hyper,
        } => {
            let ds = load(&data)?;
            let cfg = hyper.config_for(&ds.name);
            let report = run_ablation(&ds, &cfg, &seeds, hyper.threads)?;
            let mut text = report.to_table();
            if let Some(dir) = out {
                let j = write_out(&dir, "ablation.json", &report.to_json())?;
                let t = write_out(&dir, "ablation.txt", &report.to_table())?;
                text.push_str(&format!("wrote {} and {}\n", j.display(), t.display()));
            }
            Ok(text)
        }
        Command::Sparse {
            data,
            out,
            seeds,
            labels_per_class,
            variants,
            hyper,
        } => {
            let ds = load(&data)?;
            let cfg = hyper.config_for(&ds.name);
            let report =
                run_sparse_experiment(&ds, labels_per_class, &cfg, &seeds, &variants, hyper.threads)?;
            let mut text = report.to_table();
            if let Some(dir) = out {
                let stem = format!("sparse_{labels_per_class}");
                let j = write_out(&dir, &format!("{stem}.json"), &report.to_json())?;
                let t = write_out(&dir, &format!("{stem}.txt"), &report.to_table())?;
                text.push_str(&format!("wrote {} and {}\n", j.display(), t.display()));
            }
            Ok(text)
        }
        Command::Consistency {
            data,
            out,
            buckets,
            hyper,
        } => {
            let ds = load(&data)?;
            let cfg = hyper.config_for(&ds.name);
            let report = with_threads(hyper.threads, || consistency_analysis(&ds, &cfg, buckets))??;
            let tsv = report.curve.to_tsv();
            let mut text = tsv.clone();
            match report.spearman {
                Some(s) => text.push_str(&format!("spearman\t{s:.4}\n")),
                None => text.push_str("spearman\tNA\n"),
            }
            if let Some(dir) = out {
                write_out(&dir, "consistency.tsv", &tsv)?;
                let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                write_out(&dir, "consistency.json", &json)?;
            }
            Ok(text)
        }
        Command::Selftest => {
            let identity = identity_check(100, 0, 1e-10)?;
            let grads = gradient_check(&[0, 1, 2, 3, 4], &[0.0, 1.0, 2.0], 1e-4)?;
            let mut text = String::new();
            let mut failed = Vec::new();
            for r in [&identity, &grads] {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!(
                    "{tag} {}: {} trials, max error {:.2e} (tol {:.0e})\n",
                    r.name, r.trials, r.max_error, r.tolerance
                ));
                if !r.passed {
                    failed.push(r.name.clone());
                }
            }
            if failed.is_empty() {
                Ok(text)
            } else {
                Err(CliError::Check(format!("{}\n{text}", failed.join(", "))))
            }
        }
    }
}
