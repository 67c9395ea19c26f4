//! Adaptive p-Dirichlet run on the L-shape with the singular exact solution.
//!
//! ```text
//! cargo run --release --example p_dirichlet_afem -- 1.6 20 [order8]
//! ```
//!
//! The optional third argument evaluates the error with the order-8 rule.

use pdgap::afem::{run_with, AfemConfig};
use pdgap::fe::Quadrature;
use pdgap::trace::loglog_slope;
use pdgap::Problem;

fn main() {
    let mut args = std::env::args().skip(1);
    let p: f64 = args.next().map_or(1.6, |s| s.parse().expect("p"));
    let iters: usize = args.next().map_or(20, |s| s.parse().expect("iterations"));
    let order8 = args.next().is_some_and(|s| s == "order8");

    let mut cfg = AfemConfig::new(Problem::PDirichlet { p });
    cfg.max_iterations = iters;
    if order8 {
        cfg.rho_quadrature = Quadrature::Order8;
    }
    let out = run_with(&cfg, |st| {
        eprintln!(
            "k={:2} newton={:2} mismatch={:.1e}",
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
        "{:>3} {:>7} {:>11} {:>11} {:>11} {:>11} {:>12} {:>12} {:>10}",
        "k", "N", "eta_hat^2", "eta^2", "eta_res^2", "rho_F^2", "I(u_c)", "D(z)", "seconds"
    );
    for r in &out.trace.rows {
        println!(
            "{:>3} {:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>12.8} {:>12.8} {:>10.3}",
            r.k,
            r.n,
            r.eta_hat_sq,
            r.eta_sq,
            r.eta_res_sq,
            r.rho_sq,
            r.i_primal,
            r.d_dual,
            r.seconds
        );
    }
    let rows = &out.trace.rows;
    if rows.len() >= 8 {
        let tail = &rows[rows.len() - 8..];
        let n: Vec<f64> = tail.iter().map(|r| r.n as f64).collect();
        let e: Vec<f64> = tail.iter().map(|r| r.eta_hat_sq).collect();
        println!(
            "slope of eta_hat^2 over the last 8 iterations: {:.3}",
            loglog_slope(&n, &e)
        );
    }
}
