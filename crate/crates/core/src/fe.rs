//! Finite element spaces on a [`Mesh`]: continuous P1, Crouzeix-Raviart,
//! lowest-order Raviart-Thomas and piecewise constants.

use std::io;
use std::path::Path;

use crate::mesh::Mesh;

pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn axpy(a: Vec2, s: f64, b: Vec2) -> Vec2 {
    [a[0] + s * b[0], a[1] + s * b[1]]
}

/// Symmetric order-4 rule with six points, in barycentric coordinates.
/// Weights sum to one; multiply by the element area.
pub const QUAD4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_9;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223_381_589_678_011_47;
    const A2: f64 = 0.091_576_213_509_770_74;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109_951_743_655_321_87;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// Symmetric order-8 rule with sixteen points, in barycentric coordinates.
pub const QUAD8: [([f64; 3], f64); 16] = {
    const W0: f64 = 0.144_315_607_677_787;
    const A1: f64 = 0.459_292_588_292_723;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.095_091_634_267_285;
    const A2: f64 = 0.170_569_307_751_760;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.103_217_370_534_718;
    const A3: f64 = 0.050_547_228_317_031;
    const B3: f64 = 1.0 - 2.0 * A3;
    const W3: f64 = 0.032_458_497_623_198;
    const C1: f64 = 0.008_394_777_409_958;
    const C2: f64 = 0.263_112_829_634_638;
    const C3: f64 = 1.0 - C1 - C2;
    const W4: f64 = 0.027_230_314_174_435;
    const T: f64 = 1.0 / 3.0;
    [
        ([T, T, T], W0),
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
        ([A3, A3, B3], W3),
        ([A3, B3, A3], W3),
        ([B3, A3, A3], W3),
        ([C1, C2, C3], W4),
        ([C1, C3, C2], W4),
        ([C2, C1, C3], W4),
        ([C2, C3, C1], W4),
        ([C3, C1, C2], W4),
        ([C3, C2, C1], W4),
    ]
};

/// Selects the element rule for non-polynomial integrands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Quadrature {
    #[default]
    Order4,
    Order8,
}

impl Quadrature {
    pub fn rule(self) -> &'static [([f64; 3], f64)] {
        match self {
            Quadrature::Order4 => &QUAD4,
            Quadrature::Order8 => &QUAD8,
        }
    }

    /// Physical points and weights on element `t`.
    pub fn points(self, mesh: &Mesh, t: usize) -> Vec<(Vec2, f64)> {
        let p = mesh.element_vertices(t);
        let area = mesh.areas()[t];
        self.rule()
            .iter()
            .map(|&(l, w)| (map_point(&p, l), w * area))
            .collect()
    }
}

fn map_point(p: &[Vec2; 3], l: [f64; 3]) -> Vec2 {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Physical quadrature points and weights of [`QUAD4`] on element `t`.
pub fn quad_points(mesh: &Mesh, t: usize) -> [(Vec2, f64); 6] {
    let p = mesh.element_vertices(t);
    let area = mesh.areas()[t];
    QUAD4.map(|(l, w)| (map_point(&p, l), w * area))
}

/// Gradients of the barycentric coordinates of element `t`.
pub fn barycentric_gradients(mesh: &Mesh, t: usize) -> [Vec2; 3] {
    let p = mesh.element_vertices(t);
    let two_area = 2.0 * mesh.areas()[t];
    std::array::from_fn(|i| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        [-(b[1] - a[1]) / two_area, (b[0] - a[0]) / two_area]
    })
}

/// Degree-of-freedom layout shared by the scalar spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// Continuous piecewise affine, one value per vertex.
    P1,
    /// Crouzeix-Raviart, one value per side midpoint.
    Cr,
}

impl Space {
    pub fn n_dofs(self, mesh: &Mesh) -> usize {
        match self {
            Space::P1 => mesh.n_vertices(),
            Space::Cr => mesh.n_sides(),
        }
    }

    pub fn local_dofs(self, mesh: &Mesh, t: usize) -> [usize; 3] {
        match self {
            Space::P1 => mesh.triangles()[t],
            Space::Cr => mesh.element_sides()[t],
        }
    }

    /// Gradients of the three local basis functions on `t`. Both spaces take
    /// the value `1/3` at the centroid for every local basis function.
    pub fn local_gradients(self, mesh: &Mesh, t: usize) -> [Vec2; 3] {
        let g = barycentric_gradients(mesh, t);
        match self {
            Space::P1 => g,
            Space::Cr => g.map(|v| [-2.0 * v[0], -2.0 * v[1]]),
        }
    }

    /// Location of every degree of freedom.
    pub fn dof_points(self, mesh: &Mesh) -> Vec<Vec2> {
        match self {
            Space::P1 => mesh.vertices().to_vec(),
            Space::Cr => mesh.side_midpoints().to_vec(),
        }
    }

    /// Degrees of freedom fixed by Dirichlet conditions.
    pub fn dirichlet_mask(self, mesh: &Mesh) -> Vec<bool> {
        match self {
            Space::P1 => mesh.dirichlet_vertices(),
            Space::Cr => (0..mesh.n_sides())
                .map(|s| mesh.is_dirichlet_side(s))
                .collect(),
        }
    }
}

/// A scalar finite element function in `P1` or `CR`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeFunction {
    pub space: Space,
    pub values: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(space: Space, mesh: &Mesh) -> Self {
        FeFunction {
            space,
            values: vec![0.0; space.n_dofs(mesh)],
        }
    }

    /// Nodal interpolation: vertex values for P1, midpoint values for CR.
    pub fn interpolate(space: Space, mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> Self {
        FeFunction {
            space,
            values: space.dof_points(mesh).into_iter().map(f).collect(),
        }
    }

    pub fn gradient(&self, mesh: &Mesh, t: usize) -> Vec2 {
        let dofs = self.space.local_dofs(mesh, t);
        let g = self.space.local_gradients(mesh, t);
        let mut out = [0.0; 2];
        for i in 0..3 {
            out = axpy(out, self.values[dofs[i]], g[i]);
        }
        out
    }

    /// Piecewise gradient on every element.
    pub fn gradients(&self, mesh: &Mesh) -> Vec<Vec2> {
        (0..mesh.n_elements())
            .map(|t| self.gradient(mesh, t))
            .collect()
    }

    /// Value at the centroid, which is the integral mean for affine functions.
    pub fn centroid_value(&self, mesh: &Mesh, t: usize) -> f64 {
        let d = self.space.local_dofs(mesh, t);
        (self.values[d[0]] + self.values[d[1]] + self.values[d[2]]) / 3.0
    }

    /// Piecewise integral mean.
    pub fn projection(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.n_elements())
            .map(|t| self.centroid_value(mesh, t))
            .collect()
    }

    /// Value of the restriction to `t`, extended affinely to any point `x`.
    pub fn eval(&self, mesh: &Mesh, t: usize, x: Vec2) -> f64 {
        self.centroid_value(mesh, t) + dot(self.gradient(mesh, t), sub(x, mesh.centroids()[t]))
    }

    /// Values of the restriction to `t` at its three vertices.
    pub fn vertex_values(&self, mesh: &Mesh, t: usize) -> [f64; 3] {
        let d = self.space.local_dofs(mesh, t);
        let u = d.map(|i| self.values[i]);
        match self.space {
            Space::P1 => u,
            Space::Cr => {
                let s = u[0] + u[1] + u[2];
                u.map(|v| s - 2.0 * v)
            }
        }
    }

    /// Jump `u|plus - u|minus` across side `s` evaluated at `x` on the side.
    /// Zero on boundary sides.
    pub fn jump(&self, mesh: &Mesh, s: usize, x: Vec2) -> f64 {
        let se = mesh.side_elements()[s];
        match se.plus {
            Some(p) => self.eval(mesh, p, x) - self.eval(mesh, se.minus, x),
            None => 0.0,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        write_dof_csv(path, &self.values)
    }
}

/// Writes `dof_id,value` rows.
pub fn write_dof_csv(path: impl AsRef<Path>, values: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dof_id", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:.16e}")])?;
    }
    w.flush()
}

/// Arithmetic mean of the element values at each vertex. Dirichlet vertices
/// take `boundary(x)`.
pub fn node_average(mesh: &Mesh, u: &FeFunction, boundary: impl Fn(Vec2) -> f64) -> FeFunction {
    let nv = mesh.n_vertices();
    let mut sum = vec![0.0; nv];
    let mut count = vec![0usize; nv];
    for t in 0..mesh.n_elements() {
        let vals = u.vertex_values(mesh, t);
        for (k, &v) in mesh.triangles()[t].iter().enumerate() {
            sum[v] += vals[k];
            count[v] += 1;
        }
    }
    let dir = mesh.dirichlet_vertices();
    let values = (0..nv)
        .map(|v| {
            if dir[v] {
                boundary(mesh.vertices()[v])
            } else {
                sum[v] / count[v] as f64
            }
        })
        .collect();
    FeFunction {
        space: Space::P1,
        values,
    }
}

/// Piecewise constant `L2` projection of `f` using [`QUAD4`].
pub fn project_pw_constant(mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|t| {
            let s: f64 = quad_points(mesh, t).iter().map(|&(x, w)| w * f(x)).sum();
            s / mesh.areas()[t]
        })
        .collect()
}

/// Integral of a function affine on every element sampled at the vertices,
/// i.e. the vertex (trapezoidal) rule `|T|/3 * sum g(vertices)`.
pub fn vertex_rule(mesh: &Mesh, t: usize, g: impl Fn(Vec2) -> f64) -> f64 {
    let p = mesh.element_vertices(t);
    mesh.areas()[t] / 3.0 * (g(p[0]) + g(p[1]) + g(p[2]))
}

/// Element-wise affine vector field `a_T + b_T (x - x_T)`. This is the shape
/// of every Raviart-Thomas function restricted to an element.
#[derive(Clone, Debug, PartialEq)]
pub struct PwAffineField {
    pub a: Vec<Vec2>,
    pub b: Vec<f64>,
}

impl PwAffineField {
    pub fn eval(&self, mesh: &Mesh, t: usize, x: Vec2) -> Vec2 {
        axpy(self.a[t], self.b[t], sub(x, mesh.centroids()[t]))
    }

    pub fn divergence(&self) -> Vec<f64> {
        self.b.iter().map(|b| 2.0 * b).collect()
    }

    /// Piecewise integral mean, which is the centroid value.
    pub fn projection(&self) -> &[Vec2] {
        &self.a
    }

    /// Normal jump `y|plus . n_plus + y|minus . n_minus` at `x` on side `s`.
    /// Zero on boundary sides.
    pub fn normal_jump(&self, mesh: &Mesh, s: usize, x: Vec2) -> f64 {
        let se = mesh.side_elements()[s];
        let n = mesh.side_normals()[s];
        match se.plus {
            Some(p) => dot(sub(self.eval(mesh, se.minus, x), self.eval(mesh, p, x)), n),
            None => 0.0,
        }
    }
}

/// Lowest-order Raviart-Thomas field: one normal flux per side, measured
/// against the side normal `n_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rt0Field {
    pub coeffs: Vec<f64>,
}

impl Rt0Field {
    pub fn zeros(mesh: &Mesh) -> Self {
        Rt0Field {
            coeffs: vec![0.0; mesh.n_sides()],
        }
    }

    /// Basis function of side `s` restricted to element `t`, as `(a, b)` in
    /// `a + b (x - x_T)`.
    pub fn basis_on(mesh: &Mesh, t: usize, s: usize) -> (Vec2, f64) {
        let i = mesh.local_side(t, s);
        let p = mesh.element_vertices(t)[i];
        let b = mesh.side_sign(t, s) * mesh.side_lengths()[s] / (2.0 * mesh.areas()[t]);
        let xt = mesh.centroids()[t];
        ([b * (xt[0] - p[0]), b * (xt[1] - p[1])], b)
    }

    /// Restriction to element `t` as `(a_T, b_T)`.
    pub fn local(&self, mesh: &Mesh, t: usize) -> (Vec2, f64) {
        let mut a = [0.0; 2];
        let mut b = 0.0;
        for &s in &mesh.element_sides()[t] {
            let (ai, bi) = Self::basis_on(mesh, t, s);
            a = axpy(a, self.coeffs[s], ai);
            b += self.coeffs[s] * bi;
        }
        (a, b)
    }

    pub fn to_affine(&self, mesh: &Mesh) -> PwAffineField {
        let (a, b) = (0..mesh.n_elements()).map(|t| self.local(mesh, t)).unzip();
        PwAffineField { a, b }
    }

    /// Interpolates a piecewise affine field by its normal component at side
    /// midpoints, read from the `minus` element of each side. Also returns the
    /// normal mismatch `|(y|minus - y|plus) . n_S|` at interior midpoints.
    pub fn from_affine(mesh: &Mesh, y: &PwAffineField) -> (Self, Vec<f64>) {
        let mut coeffs = Vec::with_capacity(mesh.n_sides());
        let mut mismatch = Vec::with_capacity(mesh.n_sides());
        for s in 0..mesh.n_sides() {
            let x = mesh.side_midpoints()[s];
            let se = mesh.side_elements()[s];
            let n = mesh.side_normals()[s];
            let cm = dot(y.eval(mesh, se.minus, x), n);
            coeffs.push(cm);
            mismatch.push(
                se.plus
                    .map_or(0.0, |p| (cm - dot(y.eval(mesh, p, x), n)).abs()),
            );
        }
        (Rt0Field { coeffs }, mismatch)
    }

    pub fn eval(&self, mesh: &Mesh, t: usize, x: Vec2) -> Vec2 {
        let (a, b) = self.local(mesh, t);
        axpy(a, b, sub(x, mesh.centroids()[t]))
    }

    pub fn divergence(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.n_elements())
            .map(|t| 2.0 * self.local(mesh, t).1)
            .collect()
    }

    pub fn projection(&self, mesh: &Mesh) -> Vec<Vec2> {
        (0..mesh.n_elements())
            .map(|t| self.local(mesh, t).0)
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        write_dof_csv(path, &self.coeffs)
    }
}

/// Residual of the discrete integration-by-parts formula
/// `sum_T |T| (grad v . Pi y + Pi v div y)` together with the magnitude scale
/// `sum_T |T| (|grad v| |Pi y| + |Pi v| |div y|)`. For `v` in CR vanishing at
/// Dirichlet midpoints and `y` in RT0 vanishing on Neumann sides, the
/// residual is zero up to rounding.
pub fn integration_by_parts_residual(mesh: &Mesh, v: &FeFunction, y: &Rt0Field) -> (f64, f64) {
    let mut r = 0.0;
    let mut scale = 0.0;
    for t in 0..mesh.n_elements() {
        let g = v.gradient(mesh, t);
        let pv = v.centroid_value(mesh, t);
        let (a, b) = y.local(mesh, t);
        let area = mesh.areas()[t];
        r += area * (dot(g, a) + pv * 2.0 * b);
        scale += area * (norm(g) * norm(a) + (pv * 2.0 * b).abs());
    }
    (r, scale)
}
