//! Writes the trace and both SVG plots of a short adaptive run.
//!
//! ```text
//! cargo run --release --example plots -- out 10
//! ```

use std::path::PathBuf;

use pdgap::plot::{energy_plot, estimator_plot};
use pdgap::{run, AfemConfig, Problem};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let iters: usize = args.next().map_or(10, |s| s.parse().expect("iterations"));

    let mut cfg = AfemConfig::new(Problem::PDirichlet { p: 1.6 });
    cfg.max_iterations = iters;
    cfg.record_time = false;
    let outcome = run(&cfg).expect("valid configuration");
    std::fs::create_dir_all(&dir).expect("create output directory");
    outcome
        .trace
        .write_csv(dir.join("trace.csv"))
        .expect("write trace");
    std::fs::write(
        dir.join("estimator_vs_N.svg"),
        estimator_plot(&outcome.trace).to_svg(),
    )
    .expect("write plot");
    std::fs::write(
        dir.join("energies_vs_N.svg"),
        energy_plot(&outcome.trace).to_svg(),
    )
    .expect("write plot");
    println!(
        "wrote {} rows and two plots to {}",
        outcome.trace.rows.len(),
        dir.display()
    );
}
