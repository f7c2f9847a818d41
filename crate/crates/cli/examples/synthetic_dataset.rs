//! Writes a generated dataset in the canonical on-disk format.
//!
//! ```text
//! cargo run -p lc-gnn-cli --example synthetic_dataset -- OUT_DIR [cora|small] [SEED]
//! ```

use lc_gnn::graph::synthetic::PlantedPartition;
use lc_gnn::write_dataset;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(out) = args.first() else {
        eprintln!("usage: synthetic_dataset OUT_DIR [cora|small] [SEED]");
        std::process::exit(2);
    };
    let seed = match args.get(2).map(|s| s.parse::<u64>()) {
        None => 0,
        Some(Ok(s)) => s,
        Some(Err(_)) => {
            eprintln!("seed must be an unsigned integer");
            std::process::exit(2);
        }
    };
    let spec = match args.get(1).map(String::as_str) {
        None | Some("cora") => PlantedPartition::cora_like(seed),
        Some("small") => PlantedPartition::small(seed),
        Some(other) => {
            eprintln!("unknown preset {other:?} (expected cora or small)");
            std::process::exit(2);
        }
    };
    let ds = spec.generate().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        std::process::exit(1);
    });
    if let Err(e) = write_dataset(&ds, out) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    println!(
        "wrote {} nodes, {} edges, {} features, {} classes to {out}",
        ds.num_nodes(),
        ds.num_edges(),
        ds.num_features(),
        ds.num_classes
    );
}
