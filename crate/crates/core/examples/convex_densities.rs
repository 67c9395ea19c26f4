//! Energy densities, their conjugates and the Fenchel-Young residual.
//!
//! ```text
//! cargo run --release --example convex_densities
//! ```

use pdgap::energy::Density;

fn main() {
    let densities = [
        ("p = 1.2", Density::p_power(1.2).unwrap()),
        ("p = 1.6", Density::p_power(1.6).unwrap()),
        ("p = 3", Density::p_power(3.0).unwrap()),
        (
            "optimal design",
            Density::optimal_design(1.0, 2.0, 0.0145).unwrap(),
        ),
    ];
    for (name, d) in densities {
        println!("{name}");
        println!(
            "  {:>8} {:>12} {:>12} {:>12} {:>12}",
            "|a|", "phi(a)", "|Dphi(a)|", "phi*(Dphi a)", "FY residual"
        );
        for t in [0.0, 0.05, 0.12, 0.2, 0.5, 1.0, 2.0] {
            let a = [t, 0.0];
            let b = d.dphi(a);
            println!(
                "  {t:>8.3} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.3e}",
                d.phi(a),
                b[0].hypot(b[1]),
                d.phi_star(b),
                d.fenchel_young(a, b)
            );
        }
        if let Some(c) = d.cocoercivity_constant() {
            println!("  co-coercivity constant {c}");
        }
    }
}
