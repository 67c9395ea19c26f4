//! Adaptive optimal design run on the L-shape (mu1 = 1, mu2 = 2,
//! lambda = 0.0145, f = 1) with the gradient flow solver.
//!
//! ```text
//! cargo run --release --example optimal_design_afem -- 20
//! ```

use pdgap::afem::{run_with, AfemConfig};
use pdgap::estimators::aitken_extrapolate;
use pdgap::Problem;

fn main() {
    let iters: usize = std::env::args()
        .nth(1)
        .map_or(20, |s| s.parse().expect("iterations"));

    let mut cfg = AfemConfig::new(Problem::optimal_design_default());
    cfg.max_iterations = iters;
    let out = run_with(&cfg, |st| {
        eprintln!(
            "k={:2} flow steps={:4} mismatch={:.1e}",
            st.k,
            st.cr_report.iterations,
            st.mismatch.iter().copied().fold(0.0, f64::max)
        );
    })
    .expect("valid configuration");
    if let Some(f) = &out.failure {
        eprintln!("stopped early: {f}");
    }

    println!(
        "{:>3} {:>7} {:>11} {:>11} {:>14} {:>14} {:>11}",
        "k", "N", "eta_hat^2", "eta^2", "I(u_c)", "D(z)", "disc. gap"
    );
    for r in &out.trace.rows {
        println!(
            "{:>3} {:>7} {:>11.4e} {:>11.4e} {:>14.10} {:>14.10} {:>11.4e}",
            r.k, r.n, r.eta_hat_sq, r.eta_sq, r.i_primal, r.d_dual, r.discrete_gap
        );
    }
    if let Some(a) = aitken_extrapolate(&out.trace.column(|r| r.i_primal)) {
        println!("Aitken-extrapolated primal energy: {:.8}", a.value);
    }
}
