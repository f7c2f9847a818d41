use std::path::Path;
use std::process::Command as Proc;

use lc_gnn::graph::synthetic::{two_cliques, PlantedPartition};
use lc_gnn::write_dataset;
use lc_gnn_cli::{parse_args, run, CliError, Command};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_lc-gnn"))
}

fn small_data(dir: &Path) {
    write_dataset(&PlantedPartition::small(2).generate().unwrap(), dir).unwrap();
}

#[test]
fn train_without_data_is_a_usage_error() {
    let err = parse_args(["train"]).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert!(err.to_string().contains("missing --data"), "{err}");
    assert!(parse_args(["evaluate", "--data", "d"])
        .unwrap_err()
        .to_string()
        .contains("missing --checkpoint"));
}

#[test]
fn parse_args_is_total() {
    let cases: &[&[&str]] = &[
        &[],
        &[""],
        &["train", "--data"],
        &["train", "--data", "d", "--lr", "nan"],
        &["train", "--data", "d", "--lr", "-1"],
        &["train", "--data", "d", "--dropout", "1.5"],
        &["train", "--data", "d", "--variant", "gat"],
        &["train", "--data", "d", "--epochs", "0"],
        &["train", "--data", "d", "--threads", "0"],
        &["ablate", "--data", "d", "--seeds", ",,"],
        &["ablate", "--data", "d", "--seeds", "9..2"],
        &["sparse", "--data", "d", "--labels-per-class", "0"],
        &["sparse", "--data", "d", "--variants", "full,nope"],
        &["consistency", "--data", "d", "--buckets", "0"],
        &["selftest", "--extra"],
        &["\u{0}\u{ffff}"],
    ];
    for args in cases {
        assert!(parse_args(args.iter().copied()).is_err(), "{args:?} should fail");
    }
    assert_eq!(parse_args(["selftest"]).unwrap(), Command::Selftest);
}

#[test]
fn flags_reach_the_config() {
    let cmd = parse_args([
        "train", "--data", "d", "--seed", "7", "--lambda", "0.25", "--lr", "0.05",
        "--weight-decay", "0", "--epochs", "3", "--pretrain-epochs", "2", "--hidden", "8",
        "--dropout", "0.1", "--variant", "no_rl",
    ])
    .unwrap();
    let Command::Train { hyper, .. } = cmd else { panic!("{cmd:?}") };
    let c = hyper.config_for("cora");
    assert_eq!(
        (c.seed, c.lambda, c.lr, c.weight_decay, c.epochs, c.pretrain_epochs, c.hidden, c.dropout),
        (7, 0.25, 0.05, 0.0, 3, 2, 8, 0.1)
    );
    assert_eq!(c.variant, lc_gnn::Variant::NoRl);
}

#[test]
fn train_then_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    small_data(&data);
    let d = data.to_str().unwrap();
    let o = out.to_str().unwrap();
    let text = run(parse_args([
        "train", "--data", d, "--out", o, "--epochs", "20", "--pretrain-epochs", "20",
    ])
    .unwrap())
    .unwrap();
    assert!(text.contains("test"), "{text}");
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let ck = out.join("model.ckpt");
    let eval = run(parse_args(["evaluate", "--data", d, "--checkpoint", ck.to_str().unwrap()]).unwrap()).unwrap();
    let acc: serde_json::Value = serde_json::from_str(&eval).unwrap();
    assert_eq!(acc["test"], result["test_acc"]);
    // no stray temp files from the atomic writes
    let names: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
}

#[test]
fn binary_reports_usage_errors_with_code_2() {
    let o = bin().arg("train").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing --data"));
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("selftest"));
}

#[test]
fn binary_reports_missing_dataset_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["train", "--data"])
        .arg(tmp.path().join("absent"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("meta.json"));
}

#[test]
fn selftest_passes() {
    let o = bin().arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2);
}

#[test]
fn ablate_and_sparse_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    let big = PlantedPartition {
        nodes: 1600,
        ..PlantedPartition::small(3)
    };
    write_dataset(&big.generate().unwrap(), &data).unwrap();
    let o = bin()
        .args(["ablate", "--seeds", "0,1", "--epochs", "5", "--pretrain-epochs", "5", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .env("LC_GNN_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("ablation.txt")).unwrap();
    for name in ["GCN*", "LC-GCN (w/o LC, w/o RL)", "LC-GCN (w/o RL)", "LC-GCN"] {
        assert!(table.contains(name), "{table}");
    }
    let o = bin()
        .args(["sparse", "--seeds", "3", "--labels-per-class", "5", "--epochs", "5", "--pretrain-epochs", "5", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sparse_5.json")).unwrap()).unwrap();
    assert_eq!(json["labels_per_class"], 5);
    assert_eq!(json["variants"].as_array().unwrap().len(), 2);
}

#[test]
fn consistency_writes_tsv() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_dataset(&two_cliques(), &data).unwrap();
    let out = tmp.path().join("out");
    let o = bin()
        .args(["consistency", "--buckets", "4", "--pretrain-epochs", "10", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tsv = std::fs::read_to_string(out.join("consistency.tsv")).unwrap();
    assert_eq!(tsv.lines().next().unwrap(), "bucket_lo\tbucket_hi\tcount\taccuracy");
    assert_eq!(tsv.lines().count(), 5);
}
