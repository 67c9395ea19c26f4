//! Crouzeix-Raviart and P1 minimizers of the p-Dirichlet energy on uniform
//! L-shape meshes.
//!
//! ```text
//! cargo run --release --example cr_solve -- 1.6 5
//! ```

use pdgap::fe::{project_pw_constant, Space};
use pdgap::problems::SingularSolution;
use pdgap::solvers::{newton, DiscreteProblem, NewtonOptions};
use pdgap::{Density, Mesh};

fn main() {
    let mut args = std::env::args().skip(1);
    let p: f64 = args.next().map_or(1.6, |s| s.parse().expect("p"));
    let levels: u32 = args.next().map_or(5, |s| s.parse().expect("levels"));

    let exact = SingularSolution::new(p);
    let d = Density::p_power(p).expect("p > 1");
    println!(
        "{:>7} {:>6} {:>14} {:>6} {:>14} {:>6}",
        "h", "N", "I_cr", "its", "I_p1", "its"
    );
    for level in 0..levels {
        let n = 2usize.pow(level + 1);
        let mesh = Mesh::lshape(n);
        let load = project_pw_constant(&mesh, |x| exact.load(x));
        let mut row = format!("{:>7.4} {:>6}", 1.0 / n as f64, mesh.n_vertices());
        for space in [Space::Cr, Space::P1] {
            let prob =
                DiscreteProblem::new(&mesh, space, d, load.clone()).expect("load matches mesh");
            let (u, rep) = newton(
                &prob,
                prob.lift(|x| exact.value(x)),
                &NewtonOptions::default(),
            )
            .expect("newton");
            row += &format!(" {:>14.10} {:>6}", prob.energy(&u), rep.iterations);
        }
        println!("{row}");
    }
}
