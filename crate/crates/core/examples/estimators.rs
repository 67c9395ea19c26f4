//! Primal-dual and residual indicators under uniform refinement, with the
//! per-element breakdown of the last level written to CSV.
//!
//! ```text
//! cargo run --release --example estimators -- 1.6 indicators.csv
//! ```

use pdgap::afem::{run_with, AfemConfig};
use pdgap::estimators::write_indicators_csv;
use pdgap::Problem;

fn main() {
    let mut args = std::env::args().skip(1);
    let p: f64 = args.next().map_or(1.6, |s| s.parse().expect("p"));
    let out = args.next().unwrap_or_else(|| "indicators.csv".into());

    let mut cfg = AfemConfig::new(Problem::PDirichlet { p });
    cfg.uniform = true;
    cfg.max_iterations = 4;
    println!(
        "{:>7} {:>11} {:>11} {:>11} {:>8}",
        "N", "eta_hat^2", "eta^2", "eta_res^2", "ratio"
    );
    run_with(&cfg, |st| {
        let hat = st.indicators.total_eta_hat_sq();
        let res: f64 = st.residual.map_or(f64::NAN, |r| r.iter().sum());
        println!(
            "{:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>8.3}",
            st.mesh.n_vertices(),
            hat,
            st.indicators.total_eta_sq(),
            res,
            hat / res
        );
        if st.marked.is_empty() {
            write_indicators_csv(&out, st.indicators, st.residual).expect("write indicators");
        }
    })
    .expect("valid configuration");
    println!("wrote {out}");
}
