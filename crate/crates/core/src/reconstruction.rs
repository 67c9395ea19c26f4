//! Explicit Raviart-Thomas dual field from a Crouzeix-Raviart primal
//! solution and the discrete primal-dual energies.
//!
//! For a CR minimizer `u` of `sum |T| (phi(grad u) - f_T Pi u)` the field
//! `z|_T = Dphi(grad u|_T) - f_T (x - x_T) / 2` has continuous normal
//! components, divergence `-f_h` and projection `Dphi(grad u)`.
//!
//! Energies and defects take the element-wise form [`PwAffineField`]; an
//! RT0 field enters through [`Rt0Field::to_affine`]. The Marini field itself
//! has divergence `-f_h` on every element whether or not the solve converged,
//! and its inter-element normal mismatch is reported separately.

use crate::energy::Density;
use crate::fe::{dot, FeFunction, PwAffineField, Rt0Field, Space};
use crate::mesh::Mesh;

/// Default relative tolerance for the divergence constraint; see
/// [`divergence_defect`].
pub const DIV_TOL: f64 = 1e-6;

/// The element-wise affine field `Dphi(grad u) - f_T (x - x_T) / 2`.
pub fn marini_field(mesh: &Mesh, density: &Density, u: &FeFunction, load: &[f64]) -> PwAffineField {
    assert_eq!(u.space, Space::Cr, "reconstruction needs a CR function");
    let a = (0..mesh.n_elements())
        .map(|t| density.dphi(u.gradient(mesh, t)))
        .collect();
    let b = load.iter().map(|f| -0.5 * f).collect();
    PwAffineField { a, b }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// The element-wise Marini field.
    pub marini: PwAffineField,
    /// Its RT0 interpolation.
    pub field: Rt0Field,
    /// Normal flux disagreement between the two neighbours of every side,
    /// zero for an exact discrete minimizer.
    pub mismatch: Vec<f64>,
}

/// Raviart-Thomas interpolation of [`marini_field`]; the normal flux of
/// every side is read from its `minus` element.
pub fn marini_reconstruct(
    mesh: &Mesh,
    density: &Density,
    u: &FeFunction,
    load: &[f64],
) -> Reconstruction {
    let y = marini_field(mesh, density, u, load);
    let (field, mismatch) = Rt0Field::from_affine(mesh, &y);
    Reconstruction {
        marini: y,
        field,
        mismatch,
    }
}

/// Outward normal flux of `z|_T` through side `s` of `t`, times `|S|`.
fn side_flux(mesh: &Mesh, z: &PwAffineField, t: usize, s: usize) -> f64 {
    let n = mesh.side_normals()[s];
    mesh.side_sign(t, s)
        * dot(z.eval(mesh, t, mesh.side_midpoints()[s]), n)
        * mesh.side_lengths()[s]
}

/// Per-element `|div z + f_T|` and the relative defect
/// `max_T |div z + f_T| / (|f_T| + sum_{S in T} |z.n_S| |S| / |T|)`.
pub fn divergence_defect(mesh: &Mesh, z: &PwAffineField, load: &[f64]) -> (Vec<f64>, f64) {
    let div = z.divergence();
    let scale = divergence_scale(mesh, z, load);
    let mut abs = Vec::with_capacity(mesh.n_elements());
    let mut rel: f64 = 0.0;
    for t in 0..mesh.n_elements() {
        let d = (div[t] + load[t]).abs();
        abs.push(d);
        if d > 0.0 {
            rel = rel.max(d / scale[t]);
        }
    }
    (abs, rel)
}

/// Local magnitude `|f_T| + sum_{S in T} |z.n_S| |S| / |T|` against which
/// the divergence defect is measured.
pub fn divergence_scale(mesh: &Mesh, z: &PwAffineField, load: &[f64]) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|t| {
            load[t].abs()
                + mesh.element_sides()[t]
                    .iter()
                    .map(|&s| side_flux(mesh, z, t, s).abs())
                    .sum::<f64>()
                    / mesh.areas()[t]
        })
        .collect()
}

/// Boundary pairing `sum_{S on Dirichlet boundary} z.n_S |S| w(x_S)`, the
/// Dirichlet data entering through the trace of `w`.
pub fn boundary_pairing(mesh: &Mesh, z: &PwAffineField, w: &FeFunction) -> f64 {
    (0..mesh.n_sides())
        .filter(|&s| mesh.is_dirichlet_side(s))
        .map(|s| {
            let t = mesh.side_elements()[s].minus;
            side_flux(mesh, z, t, s) * w.eval(mesh, t, mesh.side_midpoints()[s])
        })
        .sum()
}

/// `I_h(u) = sum_T |T| (phi(grad u) - f_T Pi u)` for P1 or CR.
pub fn discrete_primal_energy(mesh: &Mesh, density: &Density, u: &FeFunction, load: &[f64]) -> f64 {
    (0..mesh.n_elements())
        .map(|t| {
            mesh.areas()[t]
                * (density.phi(u.gradient(mesh, t)) - load[t] * u.centroid_value(mesh, t))
        })
        .sum()
}

/// `D_h(z) = -sum_T |T| phi*(Pi z) + boundary pairing` when the relative
/// divergence defect is at most `div_tol`, and `-inf` otherwise. `trace`
/// carries the Dirichlet data.
pub fn discrete_dual_energy(
    mesh: &Mesh,
    density: &Density,
    z: &PwAffineField,
    load: &[f64],
    trace: &FeFunction,
    div_tol: f64,
) -> f64 {
    if divergence_defect(mesh, z, load).1 > div_tol {
        return f64::NEG_INFINITY;
    }
    let pz = z.projection();
    -(0..mesh.n_elements())
        .map(|t| mesh.areas()[t] * density.phi_star(pz[t]))
        .sum::<f64>()
        + boundary_pairing(mesh, z, trace)
}

/// `I_h(u) - D_h(z)`, `+inf` when the divergence constraint fails.
pub fn discrete_duality_gap(
    mesh: &Mesh,
    density: &Density,
    u: &FeFunction,
    z: &PwAffineField,
    load: &[f64],
    div_tol: f64,
) -> f64 {
    discrete_primal_energy(mesh, density, u, load)
        - discrete_dual_energy(mesh, density, z, load, u, div_tol)
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    /// `max_T |Pi z - Dphi(grad u)|`.
    pub max_projection_error: f64,
    /// `max_T |div z + f_T|`.
    pub max_divergence_defect: f64,
    /// Relative divergence defect, see [`divergence_defect`].
    pub relative_divergence_defect: f64,
    /// `phi(grad u) + phi*(Pi z) - Pi z . grad u` per element.
    pub fenchel_young: Vec<f64>,
    pub max_mismatch: f64,
    pub primal: f64,
    pub dual: f64,
}

impl DualityReport {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// Optimality diagnostics of the RT0 interpolation `rec.field`.
pub fn duality_report(
    mesh: &Mesh,
    density: &Density,
    u: &FeFunction,
    rec: &Reconstruction,
    load: &[f64],
) -> DualityReport {
    let z = &rec.field.to_affine(mesh);
    let pz = z.projection();
    let mut max_proj: f64 = 0.0;
    let mut fy = Vec::with_capacity(mesh.n_elements());
    for t in 0..mesh.n_elements() {
        let g = u.gradient(mesh, t);
        let d = density.dphi(g);
        max_proj = max_proj.max((pz[t][0] - d[0]).hypot(pz[t][1] - d[1]));
        fy.push(density.phi(g) + density.phi_star(pz[t]) - dot(pz[t], g));
    }
    let (abs, rel) = divergence_defect(mesh, z, load);
    DualityReport {
        max_projection_error: max_proj,
        max_divergence_defect: abs.iter().copied().fold(0.0, f64::max),
        relative_divergence_defect: rel,
        fenchel_young: fy,
        max_mismatch: rec.mismatch.iter().copied().fold(0.0, f64::max),
        primal: discrete_primal_energy(mesh, density, u, load),
        dual: discrete_dual_energy(mesh, density, z, load, u, f64::INFINITY),
    }
}
