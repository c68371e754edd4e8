//! Runs the mock sweep in `data/bench_mock.toml` and prints the summary.
//! Outputs land in `target/bench-mock`.

use std::path::Path;

use pruneplan::bench::{run_bench, RunSpec};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bench_mock.toml");
    let spec = RunSpec::load(&path).expect("spec");
    let report = run_bench(&spec).expect("bench");
    print!("{}", report.summary_table());
    println!("written to {}", spec.out_dir.display());
}
