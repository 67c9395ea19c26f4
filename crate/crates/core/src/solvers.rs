//! Discrete energy minimization in P1 or CR with Dirichlet elimination.
//!
//! The discrete energy is `E(v) = sum_T |T| (phi(grad v|_T) - f_T v(x_T))`
//! with a piecewise constant load `f_T`. Dirichlet degrees of freedom keep
//! the values of the initial vector; only the free ones are updated.

use thiserror::Error;

use crate::energy::Density;
use crate::fe::{dot, norm, sub, FeFunction, Space, Vec2};
use crate::linalg::{CholeskyCache, CsrMatrix, LinalgError, LinearSolver};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("line search failed in iteration {0}")]
    LineSearch(usize),
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NotConverged { iters: usize, residual: f64 },
    #[error("load has {got} entries, mesh has {expected} elements")]
    LoadSize { got: usize, expected: usize },
}

/// Energy functional on a fixed mesh and space.
#[derive(Clone, Debug)]
pub struct DiscreteProblem<'m> {
    pub mesh: &'m Mesh,
    pub space: Space,
    pub density: Density,
    pub load: Vec<f64>,
    fixed: Vec<bool>,
    free_index: Vec<usize>,
    free: Vec<usize>,
    weights: Vec<f64>,
    pattern: Pattern,
}

/// CSR structure over the free degrees of freedom together with the slot of
/// every element-local entry, so repeated assembly only writes values.
#[derive(Clone, Debug)]
struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// `slots[t][3 i + j]`, `usize::MAX` when a dof is fixed.
    slots: Vec<[usize; 9]>,
}

impl Pattern {
    fn new(mesh: &Mesh, space: Space, free_index: &[usize], n_free: usize) -> Self {
        let mut entries = Vec::with_capacity(9 * mesh.n_elements());
        let mut slots = vec![[usize::MAX; 9]; mesh.n_elements()];
        for t in 0..mesh.n_elements() {
            let dofs = space.local_dofs(mesh, t);
            for i in 0..3 {
                for j in 0..3 {
                    let (fi, fj) = (free_index[dofs[i]], free_index[dofs[j]]);
                    if fi != usize::MAX && fj != usize::MAX {
                        entries.push((fi, fj, 9 * t + 3 * i + j));
                    }
                }
            }
        }
        entries.sort_unstable();
        let mut row_ptr = vec![0usize; n_free + 1];
        let mut cols = Vec::new();
        let mut last = None;
        for (fi, fj, slot) in entries {
            if last != Some((fi, fj)) {
                cols.push(fj);
                row_ptr[fi + 1] += 1;
                last = Some((fi, fj));
            }
            slots[slot / 9][slot % 9] = cols.len() - 1;
        }
        for i in 0..n_free {
            row_ptr[i + 1] += row_ptr[i];
        }
        Pattern {
            row_ptr,
            cols,
            slots,
        }
    }

    fn assemble(&self, local: impl Fn(usize) -> [[f64; 3]; 3]) -> CsrMatrix {
        let mut vals = vec![0.0; self.cols.len()];
        for (t, slots) in self.slots.iter().enumerate() {
            let k = local(t);
            for (n, &slot) in slots.iter().enumerate() {
                if slot != usize::MAX {
                    vals[slot] += k[n / 3][n % 3];
                }
            }
        }
        CsrMatrix {
            n: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals,
        }
    }
}

impl<'m> DiscreteProblem<'m> {
    pub fn new(
        mesh: &'m Mesh,
        space: Space,
        density: Density,
        load: Vec<f64>,
    ) -> Result<Self, SolverError> {
        if load.len() != mesh.n_elements() {
            return Err(SolverError::LoadSize {
                got: load.len(),
                expected: mesh.n_elements(),
            });
        }
        let fixed = space.dirichlet_mask(mesh);
        let mut free_index = vec![usize::MAX; fixed.len()];
        let mut free = Vec::new();
        for (i, &f) in fixed.iter().enumerate() {
            if !f {
                free_index[i] = free.len();
                free.push(i);
            }
        }
        let mut weights = vec![0.0; fixed.len()];
        for t in 0..mesh.n_elements() {
            for d in space.local_dofs(mesh, t) {
                weights[d] += mesh.areas()[t];
            }
        }
        for w in &mut weights {
            *w = w.sqrt();
        }
        let pattern = Pattern::new(mesh, space, &free_index, free.len());
        Ok(DiscreteProblem {
            mesh,
            space,
            density,
            load,
            fixed,
            free_index,
            free,
            weights,
            pattern,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.fixed.len()
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Vector with Dirichlet entries `g(dof point)` and zero elsewhere.
    pub fn lift(&self, g: impl Fn(Vec2) -> f64) -> Vec<f64> {
        self.space
            .dof_points(self.mesh)
            .into_iter()
            .zip(&self.fixed)
            .map(|(x, &f)| if f { g(x) } else { 0.0 })
            .collect()
    }

    /// Overwrites Dirichlet entries of `u` with `g(dof point)`.
    pub fn apply_boundary(&self, u: &mut [f64], g: impl Fn(Vec2) -> f64) {
        let pts = self.space.dof_points(self.mesh);
        for (i, &f) in self.fixed.iter().enumerate() {
            if f {
                u[i] = g(pts[i]);
            }
        }
    }

    fn local_gradient(&self, u: &[f64], t: usize) -> ([usize; 3], [Vec2; 3], Vec2) {
        let dofs = self.space.local_dofs(self.mesh, t);
        let g = self.space.local_gradients(self.mesh, t);
        let mut grad = [0.0; 2];
        for i in 0..3 {
            grad[0] += u[dofs[i]] * g[i][0];
            grad[1] += u[dofs[i]] * g[i][1];
        }
        (dofs, g, grad)
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        (0..self.mesh.n_elements())
            .map(|t| {
                let (dofs, _, grad) = self.local_gradient(u, t);
                let mean = (u[dofs[0]] + u[dofs[1]] + u[dofs[2]]) / 3.0;
                self.mesh.areas()[t] * (self.density.phi(grad) - self.load[t] * mean)
            })
            .sum()
    }

    /// Derivative of the energy with respect to every degree of freedom;
    /// Dirichlet entries are set to zero.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.n_elements() {
            let (dofs, g, grad) = self.local_gradient(u, t);
            let area = self.mesh.areas()[t];
            let sigma = self.density.dphi(grad);
            for i in 0..3 {
                out[dofs[i]] += area * (dot(sigma, g[i]) - self.load[t] / 3.0);
            }
        }
        for (o, &f) in out.iter_mut().zip(&self.fixed) {
            if f {
                *o = 0.0;
            }
        }
        out
    }

    /// Hessian restricted to the free degrees of freedom, in free numbering.
    pub fn hessian(&self, u: &[f64]) -> CsrMatrix {
        self.pattern.assemble(|t| {
            let (_, g, grad) = self.local_gradient(u, t);
            let area = self.mesh.areas()[t];
            let h = self.density.d2phi(grad);
            let mut k = [[0.0; 3]; 3];
            for i in 0..3 {
                let hg = [
                    h[0][0] * g[i][0] + h[0][1] * g[i][1],
                    h[1][0] * g[i][0] + h[1][1] * g[i][1],
                ];
                for j in 0..3 {
                    k[i][j] = area * dot(hg, g[j]);
                }
            }
            k
        })
    }

    /// Scaled maximum norm `max_i |g_i| / |supp phi_i|^(1/2)` over free
    /// degrees of freedom. For CR this is the normal flux mismatch of the
    /// discrete stress up to a shape factor, independent of the mesh size.
    pub fn residual_norm(&self, g: &[f64]) -> f64 {
        self.free
            .iter()
            .map(|&i| g[i].abs() / self.weights[i])
            .fold(0.0, f64::max)
    }

    /// Broken `L2` norm of the piecewise gradient of `v`.
    pub fn gradient_l2(&self, v: &[f64]) -> f64 {
        (0..self.mesh.n_elements())
            .map(|t| {
                let (_, _, grad) = self.local_gradient(v, t);
                self.mesh.areas()[t] * dot(grad, grad)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Solves the quadratic problem with `phi = |a|^2/2` and the same load and
    /// Dirichlet values as `u0`.
    pub fn linear_solve(&self, u0: &[f64], linear: LinearSolver) -> Result<Vec<f64>, SolverError> {
        let quad = DiscreteProblem {
            density: Density::p_power(2.0).expect("p = 2 is valid"),
            ..self.clone()
        };
        let mut u = u0.to_vec();
        let g = quad.gradient(&u);
        let h = quad.hessian(&u);
        let rhs: Vec<f64> = self.free.iter().map(|&i| -g[i]).collect();
        let d = h.solve(&rhs, linear)?;
        for (k, &i) in self.free.iter().enumerate() {
            u[i] += d[k];
        }
        Ok(u)
    }

    pub fn to_function(&self, u: Vec<f64>) -> FeFunction {
        FeFunction {
            space: self.space,
            values: u,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    pub linear: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol_abs: 1e-8,
            tol_rel: 1e-10,
            max_iter: 100,
            armijo: 1e-4,
            max_halvings: 40,
            linear: LinearSolver::Cholesky,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    /// Residual norm before every iteration and after the last one.
    pub residuals: Vec<f64>,
    /// Energy before every iteration and after the last one.
    pub energies: Vec<f64>,
}

/// Damped Newton method with Armijo backtracking.
pub fn newton(
    problem: &DiscreteProblem,
    u0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let mut u = u0;
    let mut e = problem.energy(&u);
    let mut g = problem.gradient(&u);
    let r0 = problem.residual_norm(&g);
    let tol = opts.tol_abs.max(opts.tol_rel * r0);
    let mut report = SolveReport {
        residuals: vec![r0],
        energies: vec![e],
        ..Default::default()
    };
    let mut r = r0;
    let mut cache = CholeskyCache::default();
    for iter in 0..opts.max_iter {
        if r <= tol {
            break;
        }
        let h = problem.hessian(&u);
        let rhs: Vec<f64> = problem.free.iter().map(|&i| -g[i]).collect();
        let d = h.solve_cached(&rhs, opts.linear, &mut cache)?;
        let slope: f64 = -rhs.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let mut step = 1.0;
        let mut trial = u.clone();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for (k, &i) in problem.free.iter().enumerate() {
                trial[i] = u[i] + step * d[k];
            }
            let et = problem.energy(&trial);
            // Rounding in the energy dominates once the predicted decrease is
            // below a few ulps of |E|.
            let noise = 16.0 * f64::EPSILON * e.abs().max(1.0);
            if et <= e + opts.armijo * step * slope + noise {
                e = et;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(SolverError::LineSearch(iter));
        }
        std::mem::swap(&mut u, &mut trial);
        g = problem.gradient(&u);
        r = problem.residual_norm(&g);
        report.iterations = iter + 1;
        report.residuals.push(r);
        report.energies.push(e);
    }
    if r > tol {
        return Err(SolverError::NotConverged {
            iters: report.iterations,
            residual: r,
        });
    }
    report.residual = r;
    report.energy = e;
    Ok((u, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub tau: f64,
    /// Stopping threshold for `||grad(u_new - u_old)|| / tau`; defaults to
    /// `hbar^2 / 20` with the average mesh size `hbar`.
    pub eps_stop: Option<f64>,
    pub max_iter: usize,
    pub linear: LinearSolver,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tau: 1.0,
            eps_stop: None,
            max_iter: 2000,
            linear: LinearSolver::Cholesky,
        }
    }
}

/// Semi-implicit gradient flow with lumped mass:
/// `(u_new - u_old, w)_h / tau + (mu(|grad u_old|) grad u_new, grad w) = (f_h, Pi w)`
/// with `mu(t) = psi'(t)/t`. The lumped pairing uses the vertices (P1) or the
/// side midpoints (CR) as quadrature points.
pub fn gradient_flow(
    problem: &DiscreteProblem,
    u0: Vec<f64>,
    opts: &FlowOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let mesh = problem.mesh;
    let eps = opts
        .eps_stop
        .unwrap_or_else(|| mesh.average_mesh_size().powi(2) / 20.0);
    let n_free = problem.free.len();
    let mut mass = vec![0.0; n_free];
    let mut load = vec![0.0; n_free];
    for t in 0..mesh.n_elements() {
        let area = mesh.areas()[t];
        for d in problem.space.local_dofs(mesh, t) {
            let fi = problem.free_index[d];
            if fi != usize::MAX {
                mass[fi] += area / 3.0;
                load[fi] += area * problem.load[t] / 3.0;
            }
        }
    }
    let mut u = u0;
    let mut report = SolveReport {
        energies: vec![problem.energy(&u)],
        ..Default::default()
    };
    let mut cache = CholeskyCache::default();
    for iter in 0..opts.max_iter {
        let mut rhs: Vec<f64> = (0..n_free)
            .map(|k| load[k] + mass[k] * u[problem.free[k]] / opts.tau)
            .collect();
        let coef: Vec<f64> = (0..mesh.n_elements())
            .map(|t| {
                mesh.areas()[t]
                    * problem
                        .density
                        .secant(norm(problem.local_gradient(&u, t).2))
            })
            .collect();
        let stiffness = |t: usize| {
            let g = problem.space.local_gradients(mesh, t);
            let mut k = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    k[i][j] = coef[t] * dot(g[i], g[j]);
                }
            }
            k
        };
        for t in 0..mesh.n_elements() {
            let dofs = problem.space.local_dofs(mesh, t);
            if dofs.iter().all(|&d| problem.free_index[d] != usize::MAX) {
                continue;
            }
            let k = stiffness(t);
            for i in 0..3 {
                let fi = problem.free_index[dofs[i]];
                if fi == usize::MAX {
                    continue;
                }
                for j in 0..3 {
                    if problem.free_index[dofs[j]] == usize::MAX {
                        rhs[fi] -= k[i][j] * u[dofs[j]];
                    }
                }
            }
        }
        let lumped = |t: usize| {
            let mut k = stiffness(t);
            for (i, row) in k.iter_mut().enumerate() {
                row[i] += mesh.areas()[t] / (3.0 * opts.tau);
            }
            k
        };
        let a = problem.pattern.assemble(lumped);
        let x = a.solve_cached(&rhs, opts.linear, &mut cache)?;
        let mut delta = vec![0.0; u.len()];
        for (k, &i) in problem.free.iter().enumerate() {
            delta[i] = x[k] - u[i];
            u[i] = x[k];
        }
        let change = problem.gradient_l2(&delta) / opts.tau;
        report.iterations = iter + 1;
        report.residuals.push(change);
        report.energies.push(problem.energy(&u));
        if change <= eps {
            report.residual = change;
            report.energy = *report.energies.last().unwrap();
            return Ok((u, report));
        }
    }
    Err(SolverError::NotConverged {
        iters: opts.max_iter,
        residual: *report.residuals.last().unwrap_or(&f64::INFINITY),
    })
}

/// Evaluates a P1 or CR function of the coarse mesh at the degrees of
/// freedom of the refined mesh. Points on a coarse side take the mean of
/// both coarse traces.
pub fn prolong(coarse: &Mesh, fine: &Mesh, parent: &[usize], u: &FeFunction) -> FeFunction {
    let n = u.space.n_dofs(fine);
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    let pts = u.space.dof_points(fine);
    for (c, &p) in parent.iter().enumerate() {
        for d in u.space.local_dofs(fine, c) {
            sum[d] += u.eval(coarse, p, pts[d]);
            count[d] += 1;
        }
    }
    FeFunction {
        space: u.space,
        values: sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect(),
    }
}

/// `L2` distance of piecewise gradients, used by tests and diagnostics.
pub fn gradient_distance(mesh: &Mesh, a: &[Vec2], b: &[Vec2]) -> f64 {
    (0..mesh.n_elements())
        .map(|t| {
            let d = sub(a[t], b[t]);
            mesh.areas()[t] * dot(d, d)
        })
        .sum::<f64>()
        .sqrt()
}
