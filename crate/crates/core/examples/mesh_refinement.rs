//! Repeated refinement toward the re-entrant corner of the L-shape.
//!
//! ```text
//! cargo run --release --example mesh_refinement -- 12 [interior] [out.mesh]
//! ```

use pdgap::mesh::{refine, RefineOptions};
use pdgap::Mesh;

fn main() {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(12, |s| s.parse().expect("steps"));
    let mut save = None;
    let mut opts = RefineOptions::default();
    for a in args {
        if a == "interior" {
            opts.interior_node = true;
        } else {
            save = Some(a);
        }
    }

    let mut mesh = Mesh::lshape(2);
    println!(
        "{:>4} {:>8} {:>8} {:>8} {:>10}",
        "step", "vertices", "elements", "marked", "min angle"
    );
    for step in 0..=steps {
        let marked: Vec<usize> = (0..mesh.n_elements())
            .filter(|&t| {
                mesh.element_vertices(t)
                    .iter()
                    .any(|v| v[0].hypot(v[1]) < 1e-12)
            })
            .collect();
        println!(
            "{step:>4} {:>8} {:>8} {:>8} {:>10.3}",
            mesh.n_vertices(),
            mesh.n_elements(),
            marked.len(),
            mesh.min_angle_degrees()
        );
        if step < steps {
            mesh = refine(&mesh, &marked, opts).mesh;
        }
    }
    println!("total area {:.15}", mesh.total_area());
    if let Some(path) = save {
        mesh.save(&path).expect("write mesh");
        println!("wrote {path}");
    }
}
