//! A posteriori error estimators.
//!
//! The primal-dual gap estimator compares a conforming P1 function `u`
//! with an RT0 field `z` satisfying `div z = -f_h`:
//!
//! * `eta_A,T = |T| (phi(grad u) - Pi z . grad u + phi*(Pi z))`
//! * `eta_D,T = int_T phi*(z) - |T| phi*(Pi z)` (six-point quadrature)
//! * `eta^_D,T`, the same with the vertex rule in place of the integral.
//!
//! For a linear load the two load terms vanish identically.
//! The residual estimator for the p-Laplacian serves as a comparison.

use std::io;
use std::path::Path;

use crate::energy::{Density, PPower};
use crate::fe::{
    dot, norm, quad_points, sub, vertex_rule, FeFunction, PwAffineField, Quadrature, Space, Vec2,
};
use crate::mesh::Mesh;
use crate::reconstruction::{
    boundary_pairing, discrete_primal_energy, divergence_defect, divergence_scale,
};

/// Element-wise primal-dual gap contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct PdIndicators {
    pub eta_a: Vec<f64>,
    /// Load terms; zero when the divergence constraint holds, `+inf` on
    /// elements that violate it.
    pub eta_b: Vec<f64>,
    pub eta_c: Vec<f64>,
    pub eta_d: Vec<f64>,
    pub eta_d_hat: Vec<f64>,
}

impl PdIndicators {
    /// `eta^2_T = eta_A + eta_B + eta_C + eta_D` per element.
    pub fn eta_sq(&self) -> Vec<f64> {
        (0..self.eta_a.len())
            .map(|t| self.eta_a[t] + self.eta_b[t] + self.eta_c[t] + self.eta_d[t])
            .collect()
    }

    /// Trapezoidal variant `eta_A + eta_B + eta_C + eta^_D` per element.
    pub fn eta_hat_sq(&self) -> Vec<f64> {
        (0..self.eta_a.len())
            .map(|t| self.eta_a[t] + self.eta_b[t] + self.eta_c[t] + self.eta_d_hat[t])
            .collect()
    }

    pub fn total_eta_sq(&self) -> f64 {
        self.eta_sq().iter().sum()
    }

    pub fn total_eta_hat_sq(&self) -> f64 {
        self.eta_hat_sq().iter().sum()
    }
}

/// Primal-dual indicators for P1 `u` and RT0 `z`. Elements whose divergence
/// defect exceeds `div_tol` relative to the local flux scale get `eta_B =
/// +inf`.
pub fn pd_indicators(
    mesh: &Mesh,
    density: &Density,
    u: &FeFunction,
    z: &PwAffineField,
    load: &[f64],
    div_tol: f64,
) -> PdIndicators {
    assert_eq!(
        u.space,
        Space::P1,
        "primal-dual indicators need a P1 function"
    );
    let n = mesh.n_elements();
    let (defect, _) = divergence_defect(mesh, z, load);
    let scale = divergence_scale(mesh, z, load);
    let mut out = PdIndicators {
        eta_a: Vec::with_capacity(n),
        eta_b: Vec::with_capacity(n),
        eta_c: vec![0.0; n],
        eta_d: Vec::with_capacity(n),
        eta_d_hat: Vec::with_capacity(n),
    };
    for t in 0..n {
        let area = mesh.areas()[t];
        let g = u.gradient(mesh, t);
        let a = z.a[t];
        let zfun = |x: Vec2| z.eval(mesh, t, x);
        let star_mean = area * density.phi_star(a);
        out.eta_a
            .push(area * (density.phi(g) - dot(a, g) + density.phi_star(a)));
        out.eta_b.push(if defect[t] <= div_tol * scale[t] {
            0.0
        } else {
            f64::INFINITY
        });
        let exact: f64 = quad_points(mesh, t)
            .iter()
            .map(|&(x, w)| w * density.phi_star(zfun(x)))
            .sum();
        out.eta_d.push(exact - star_mean);
        out.eta_d_hat
            .push(vertex_rule(mesh, t, |x| density.phi_star(zfun(x))) - star_mean);
    }
    out
}

/// Primal energy `I(u) = sum_T |T| (phi(grad u) - f_T Pi u)` of a P1 function.
pub fn primal_energy(mesh: &Mesh, density: &Density, u: &FeFunction, load: &[f64]) -> f64 {
    discrete_primal_energy(mesh, density, u, load)
}

/// Dual energy `-sum_T int_T I_h[phi*(z)] + boundary pairing` with the
/// vertex rule, Dirichlet data taken from the trace of `trace`.
pub fn dual_energy(mesh: &Mesh, density: &Density, z: &PwAffineField, trace: &FeFunction) -> f64 {
    let bulk: f64 = (0..mesh.n_elements())
        .map(|t| vertex_rule(mesh, t, |x| density.phi_star(z.eval(mesh, t, x))))
        .sum();
    boundary_pairing(mesh, z, trace) - bulk
}

/// Dual energy with the six-point rule instead of the vertex rule.
pub fn dual_energy_quadrature(
    mesh: &Mesh,
    density: &Density,
    z: &PwAffineField,
    trace: &FeFunction,
) -> f64 {
    let bulk: f64 = (0..mesh.n_elements())
        .map(|t| {
            quad_points(mesh, t)
                .iter()
                .map(|&(x, w)| w * density.phi_star(z.eval(mesh, t, x)))
                .sum::<f64>()
        })
        .sum();
    boundary_pairing(mesh, z, trace) - bulk
}

fn residual_weight(p: &PPower, grad_norm: f64, h: f64, f: f64) -> f64 {
    let r = f.abs();
    if r == 0.0 {
        return 0.0;
    }
    let base = grad_norm.powf(p.p() - 1.0) + h * r;
    base.powf(p.p_conj() - 2.0) * h * h * r * r
}

/// Residual estimator per element for a P1 function `u`:
/// `eta_E,T + sum over interior sides of T of eta_J,S`, with
/// `eta_E,T = |T| (|grad u|^(p-1) + h_T |f_T|)^(p'-2) h_T^2 |f_T|^2` and
/// `eta_J,S = h_S |S| |F(grad u|plus) - F(grad u|minus)|^2`.
pub fn residual_indicators(mesh: &Mesh, p: &PPower, u: &FeFunction, load: &[f64]) -> Vec<f64> {
    let grads = u.gradients(mesh);
    let mut out: Vec<f64> = (0..mesh.n_elements())
        .map(|t| mesh.areas()[t] * residual_weight(p, norm(grads[t]), mesh.diameters()[t], load[t]))
        .collect();
    for s in 0..mesh.n_sides() {
        let se = mesh.side_elements()[s];
        if let Some(pl) = se.plus {
            let j = sub(p.f_map(grads[pl]), p.f_map(grads[se.minus]));
            let l = mesh.side_lengths()[s];
            let eta = l * l * dot(j, j);
            out[se.minus] += eta;
            out[pl] += eta;
        }
    }
    out
}

/// Jump contribution `eta_J,S` of every side (zero on the boundary).
pub fn jump_indicators(mesh: &Mesh, p: &PPower, u: &FeFunction) -> Vec<f64> {
    let grads = u.gradients(mesh);
    (0..mesh.n_sides())
        .map(|s| {
            let se = mesh.side_elements()[s];
            se.plus.map_or(0.0, |pl| {
                let j = sub(p.f_map(grads[pl]), p.f_map(grads[se.minus]));
                let l = mesh.side_lengths()[s];
                l * l * dot(j, j)
            })
        })
        .collect()
}

/// Data oscillation
/// `int_T (|grad u|^(p-1) + h_T |f - Pi f|)^(p'-2) h_T^2 |f - Pi f|^2`.
pub fn oscillation(mesh: &Mesh, p: &PPower, u: &FeFunction, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|t| {
            let q = quad_points(mesh, t);
            let mean = q.iter().map(|&(x, w)| w * f(x)).sum::<f64>() / mesh.areas()[t];
            let g = norm(u.gradient(mesh, t));
            let h = mesh.diameters()[t];
            q.iter()
                .map(|&(x, w)| w * residual_weight(p, g, h, f(x) - mean))
                .sum()
        })
        .collect()
}

/// `rho_F^2 = ||F(grad u) - F(grad u_h)||^2` against an exact gradient,
/// element-wise with the six-point rule.
pub fn rho_f_sq(
    mesh: &Mesh,
    p: &PPower,
    exact_grad: impl Fn(Vec2) -> Vec2,
    u: &FeFunction,
    rule: Quadrature,
) -> f64 {
    (0..mesh.n_elements())
        .map(|t| {
            let fh = p.f_map(u.gradient(mesh, t));
            rule.points(mesh, t)
                .iter()
                .map(|&(x, w)| {
                    let d = sub(p.f_map(exact_grad(x)), fh);
                    w * dot(d, d)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Aitken's delta-squared value of the last three terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aitken {
    pub value: f64,
    /// Set when the second difference vanishes and the last term is returned.
    pub degenerate: bool,
}

/// `s_n - (s_n - s_{n-1})^2 / (s_n - 2 s_{n-1} + s_{n-2})` on the last three
/// entries. Returns `None` for fewer than three terms.
pub fn aitken_extrapolate(seq: &[f64]) -> Option<Aitken> {
    if seq.len() < 3 {
        return None;
    }
    let n = seq.len();
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let d2 = c - 2.0 * b + a;
    if d2 == 0.0 || !d2.is_finite() {
        return Some(Aitken {
            value: c,
            degenerate: true,
        });
    }
    Some(Aitken {
        value: c - (c - b) * (c - b) / d2,
        degenerate: false,
    })
}

/// Refined gap bounds
/// `B_A = sum_T |T| (Dphi(grad u) - Dphi(grad u_cr)) . (grad u - grad u_cr)`
/// and `B_D = int (Dphi*(z) - Dphi*(Pi z)) . (z - Pi z)` (six-point rule).
pub fn refined_gap_bounds(
    mesh: &Mesh,
    density: &Density,
    u: &FeFunction,
    u_cr: &FeFunction,
    z: &PwAffineField,
) -> (f64, f64) {
    let mut ba = 0.0;
    let mut bd = 0.0;
    for t in 0..mesh.n_elements() {
        let g = u.gradient(mesh, t);
        let gc = u_cr.gradient(mesh, t);
        ba += mesh.areas()[t] * dot(sub(density.dphi(g), density.dphi(gc)), sub(g, gc));
        let a = z.a[t];
        let da = density.dphi_star(a);
        for (x, w) in quad_points(mesh, t) {
            let zx = z.eval(mesh, t, x);
            bd += w * dot(sub(density.dphi_star(zx), da), sub(zx, a));
        }
    }
    (ba, bd)
}

/// Writes `element_id,eta_sq,eta_A,eta_B,eta_C,eta_D_hat,eta_res_sq`.
pub fn write_indicators_csv(
    path: impl AsRef<Path>,
    ind: &PdIndicators,
    residual: Option<&[f64]>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "element_id",
        "eta_sq",
        "eta_A",
        "eta_B",
        "eta_C",
        "eta_D_hat",
        "eta_res_sq",
    ])?;
    let eta = ind.eta_sq();
    for t in 0..eta.len() {
        let res = residual.map_or(f64::NAN, |r| r[t]);
        w.write_record([
            t.to_string(),
            format!("{:.16e}", eta[t]),
            format!("{:.16e}", ind.eta_a[t]),
            format!("{:.16e}", ind.eta_b[t]),
            format!("{:.16e}", ind.eta_c[t]),
            format!("{:.16e}", ind.eta_d_hat[t]),
            format!("{res:.16e}"),
        ])?;
    }
    w.flush()
}
