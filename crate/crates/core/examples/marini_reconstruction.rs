//! Marini reconstruction of a discrete flux and the resulting discrete
//! strong duality.
//!
//! ```text
//! cargo run --release --example marini_reconstruction -- 1.6
//! ```

use pdgap::fe::{project_pw_constant, Space};
use pdgap::problems::SingularSolution;
use pdgap::reconstruction::{duality_report, marini_reconstruct};
use pdgap::solvers::{newton, DiscreteProblem, NewtonOptions};
use pdgap::{Density, Mesh};

fn main() {
    let p: f64 = std::env::args()
        .nth(1)
        .map_or(1.6, |s| s.parse().expect("p"));
    let exact = SingularSolution::new(p);
    let d = Density::p_power(p).expect("p > 1");
    for n in [2, 4, 8, 16] {
        let mesh = Mesh::lshape(n);
        let load = project_pw_constant(&mesh, |x| exact.load(x));
        let prob =
            DiscreteProblem::new(&mesh, Space::Cr, d, load.clone()).expect("load matches mesh");
        let (u, _) = newton(
            &prob,
            prob.lift(|x| exact.value(x)),
            &NewtonOptions::default(),
        )
        .expect("newton");
        let u = prob.to_function(u);
        let rec = marini_reconstruct(&mesh, &d, &u, &load);
        let rep = duality_report(&mesh, &d, &u, &rec, &load);
        println!(
            "elements {:>5}: I = {:.12}  D = {:.12}  gap = {:.1e}  |Pi z - Dphi| = {:.1e}  div defect = {:.1e}  RT0 mismatch = {:.1e}",
            mesh.n_elements(),
            rep.primal,
            rep.dual,
            rep.gap(),
            rep.max_projection_error,
            rep.relative_divergence_defect,
            rep.max_mismatch
        );
    }
}
