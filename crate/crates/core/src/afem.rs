//! The adaptive solve-estimate-mark-refine loop.

use std::time::Instant;

use crate::energy::{Density, PPower};
use crate::estimators::{
    aitken_extrapolate, dual_energy, pd_indicators, primal_energy, residual_indicators, rho_f_sq,
    PdIndicators,
};
use crate::fe::{
    node_average, project_pw_constant, FeFunction, PwAffineField, Quadrature, Rt0Field, Space,
};
use crate::linalg::LinearSolver;
use crate::mesh::{refine, Mesh, RefineOptions};
use crate::problems::Problem;
use crate::reconstruction::{discrete_duality_gap, marini_reconstruct, DIV_TOL};
use crate::solvers::{
    gradient_flow, newton, prolong, DiscreteProblem, FlowOptions, NewtonOptions, SolveReport,
    SolverError,
};
use crate::trace::{Trace, TraceRow};

/// How the conforming approximation is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conforming {
    /// Minimize the energy over P1.
    Minimize,
    /// Node-average the CR solution.
    Average,
}

/// Indicators used for marking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkWith {
    /// Trapezoidal primal-dual indicators.
    PrimalDual,
    /// Residual indicators (p-power densities only).
    Residual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Newton,
    Flow,
}

#[derive(Clone, Debug)]
pub struct AfemConfig {
    pub problem: Problem,
    pub initial_mesh: Mesh,
    /// Dörfler parameter in `(0, 1)`.
    pub theta: f64,
    /// Stop once the total estimator is at most this value.
    pub eps_stop: f64,
    pub max_iterations: usize,
    /// Refine every element instead of marking.
    pub uniform: bool,
    pub conforming: Conforming,
    pub mark_with: MarkWith,
    pub solver: SolverKind,
    pub newton: NewtonOptions,
    pub flow: FlowOptions,
    pub refine: RefineOptions,
    /// Relative tolerance of the divergence constraint.
    pub div_tol: f64,
    /// Store wall-clock seconds in the trace; zero otherwise.
    pub record_time: bool,
    /// Element rule for the error against the exact solution.
    pub rho_quadrature: Quadrature,
}

impl AfemConfig {
    /// Defaults for `problem` on the uniform L-shape mesh with 96 elements:
    /// Newton for p-power problems, gradient flow for optimal design.
    pub fn new(problem: Problem) -> Self {
        let solver = match problem {
            Problem::OptimalDesign { .. } => SolverKind::Flow,
            _ => SolverKind::Newton,
        };
        AfemConfig {
            problem,
            initial_mesh: Mesh::lshape(4),
            theta: 0.5,
            eps_stop: 0.0,
            max_iterations: 20,
            uniform: false,
            conforming: Conforming::Minimize,
            mark_with: MarkWith::PrimalDual,
            solver,
            newton: NewtonOptions::default(),
            flow: FlowOptions::default(),
            refine: RefineOptions::default(),
            div_tol: DIV_TOL,
            record_time: true,
            rho_quadrature: Quadrature::Order4,
        }
    }

    pub fn linear_solver(mut self, linear: LinearSolver) -> Self {
        self.newton.linear = linear;
        self.flow.linear = linear;
        self
    }

    fn validate(&self) -> Result<Density, AfemError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(AfemError::Config("theta must lie in (0, 1)".into()));
        }
        if self.eps_stop.is_nan() || self.eps_stop < 0.0 {
            return Err(AfemError::Config("eps_stop must be non-negative".into()));
        }
        let density = self
            .problem
            .density()
            .map_err(|e| AfemError::Config(e.to_string()))?;
        if self.mark_with == MarkWith::Residual && !matches!(density, Density::PPower(_)) {
            return Err(AfemError::Config(
                "residual marking needs a p-power density".into(),
            ));
        }
        Ok(density)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AfemError {
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Everything computed in one iteration, handed to observers.
pub struct IterationState<'a> {
    pub k: usize,
    pub mesh: &'a Mesh,
    pub load: &'a [f64],
    pub u_cr: &'a FeFunction,
    pub u_c: &'a FeFunction,
    pub z: &'a Rt0Field,
    /// Element-wise Marini field used by the estimators.
    pub marini: &'a PwAffineField,
    pub mismatch: &'a [f64],
    pub indicators: &'a PdIndicators,
    pub residual: Option<&'a [f64]>,
    pub marked: &'a [usize],
    pub cr_report: &'a SolveReport,
}

#[derive(Debug)]
pub struct AfemOutcome {
    pub trace: Trace,
    pub mesh: Mesh,
    /// Set when a solver failed; the trace holds the completed iterations.
    pub failure: Option<String>,
}

/// Minimal set `M` with `sum_M v >= theta^2 sum v`, by descending value with
/// ties to the smaller id. Returns the ids in that order.
pub fn dorfler_mark(values: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let target = theta * theta * total;
    let mut acc = 0.0;
    let mut out = Vec::new();
    for i in order {
        if acc >= target {
            break;
        }
        acc += values[i];
        out.push(i);
    }
    out
}

fn solve(
    cfg: &AfemConfig,
    prob: &DiscreteProblem,
    u0: Vec<f64>,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    match cfg.solver {
        SolverKind::Newton => newton(prob, u0, &cfg.newton),
        SolverKind::Flow => gradient_flow(prob, u0, &cfg.flow),
    }
}

/// Runs the adaptive loop, calling `observe` after every estimate step.
pub fn run_with(
    cfg: &AfemConfig,
    mut observe: impl FnMut(&IterationState),
) -> Result<AfemOutcome, AfemError> {
    let density = cfg.validate()?;
    let problem = cfg.problem;
    let g = |x| problem.boundary(x);
    let exact = problem.exact();
    let p_power: Option<PPower> = match density {
        Density::PPower(p) => Some(p),
        Density::OptimalDesign(_) => None,
    };

    let mut trace = Trace {
        rows: Vec::new(),
        metadata: vec![
            ("problem".into(), format!("{problem:?}")),
            ("theta".into(), cfg.theta.to_string()),
            ("max_iterations".into(), cfg.max_iterations.to_string()),
            ("eps_stop".into(), cfg.eps_stop.to_string()),
            ("uniform".into(), cfg.uniform.to_string()),
            ("conforming".into(), format!("{:?}", cfg.conforming)),
            ("mark_with".into(), format!("{:?}", cfg.mark_with)),
            ("solver".into(), format!("{:?}", cfg.solver)),
            ("newton".into(), format!("{:?}", cfg.newton)),
            ("flow".into(), format!("{:?}", cfg.flow)),
            ("interior_node".into(), cfg.refine.interior_node.to_string()),
        ],
    };
    let mut mesh = cfg.initial_mesh.clone();
    let mut guess: Option<FeFunction> = None;
    let mut failure = None;

    for k in 0..cfg.max_iterations {
        let start = Instant::now();
        let load = project_pw_constant(&mesh, |x| problem.load(x));

        let cr = DiscreteProblem::new(&mesh, Space::Cr, density, load.clone())
            .expect("load matches mesh");
        let u0 = match guess.take() {
            Some(mut u) => {
                cr.apply_boundary(&mut u.values, g);
                u.values
            }
            None => {
                let lifted = cr.lift(g);
                if cfg.solver == SolverKind::Newton {
                    match cr.linear_solve(&lifted, cfg.newton.linear) {
                        Ok(u) => u,
                        Err(e) => {
                            failure = Some(format!("iteration {k}: {e}"));
                            break;
                        }
                    }
                } else {
                    lifted
                }
            }
        };
        let (u_cr, cr_report) = match solve(cfg, &cr, u0) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(format!("iteration {k}: CR solve: {e}"));
                break;
            }
        };
        let u_cr = cr.to_function(u_cr);

        let rec = marini_reconstruct(&mesh, &density, &u_cr, &load);
        let averaged = node_average(&mesh, &u_cr, g);
        let u_c = match cfg.conforming {
            Conforming::Average => averaged,
            Conforming::Minimize => {
                let p1 = DiscreteProblem::new(&mesh, Space::P1, density, load.clone())
                    .expect("load matches mesh");
                match solve(cfg, &p1, averaged.values) {
                    Ok((u, _)) => p1.to_function(u),
                    Err(e) => {
                        failure = Some(format!("iteration {k}: P1 solve: {e}"));
                        break;
                    }
                }
            }
        };

        let ind = pd_indicators(&mesh, &density, &u_c, &rec.marini, &load, cfg.div_tol);
        let eta_hat = ind.eta_hat_sq();
        let residual = p_power.map(|p| residual_indicators(&mesh, &p, &u_c, &load));
        let rho_sq = match (exact, p_power) {
            (Some(ex), Some(p)) => {
                rho_f_sq(&mesh, &p, |x| ex.gradient(x), &u_c, cfg.rho_quadrature)
            }
            _ => f64::NAN,
        };
        let i_primal = primal_energy(&mesh, &density, &u_c, &load);
        let d_dual = if ind.eta_b.iter().all(|v| v.is_finite()) {
            dual_energy(&mesh, &density, &rec.marini, &u_c)
        } else {
            f64::NEG_INFINITY
        };
        let discrete_gap =
            discrete_duality_gap(&mesh, &density, &u_cr, &rec.marini, &load, cfg.div_tol);
        let total_hat: f64 = eta_hat.iter().sum();

        let stop = total_hat <= cfg.eps_stop || k + 1 == cfg.max_iterations;
        let marked: Vec<usize> = if stop {
            Vec::new()
        } else if cfg.uniform {
            (0..mesh.n_elements()).collect()
        } else {
            let values: Vec<f64> = match (cfg.mark_with, &residual) {
                (MarkWith::Residual, Some(r)) => r.clone(),
                _ => eta_hat.clone(),
            };
            let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
            dorfler_mark(&clipped, cfg.theta)
        };

        observe(&IterationState {
            k,
            mesh: &mesh,
            load: &load,
            u_cr: &u_cr,
            u_c: &u_c,
            z: &rec.field,
            marini: &rec.marini,
            mismatch: &rec.mismatch,
            indicators: &ind,
            residual: residual.as_deref(),
            marked: &marked,
            cr_report: &cr_report,
        });

        trace.rows.push(TraceRow {
            k,
            n: mesh.n_vertices(),
            elements: mesh.n_elements(),
            eta_hat_sq: total_hat,
            eta_sq: ind.total_eta_sq(),
            eta_res_sq: residual.as_ref().map_or(f64::NAN, |r| r.iter().sum()),
            rho_sq,
            i_primal,
            d_dual,
            discrete_gap,
            seconds: if cfg.record_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });

        if stop || marked.is_empty() {
            break;
        }
        let r = refine(&mesh, &marked, cfg.refine);
        guess = Some(prolong(&mesh, &r.mesh, &r.parent, &u_cr));
        mesh = r.mesh;
    }

    if exact.is_none() {
        // Without an exact solution the error quantity is I(u_k) - I_ref with
        // I_ref extrapolated from the primal energies.
        let energies = trace.column(|r| r.i_primal);
        if let Some(a) = aitken_extrapolate(&energies) {
            for r in &mut trace.rows {
                r.rho_sq = r.i_primal - a.value;
            }
            trace
                .metadata
                .push(("reference_energy".into(), format!("{:.16e}", a.value)));
        }
    }
    if let Some(f) = &failure {
        trace.metadata.push(("failure".into(), f.clone()));
    }
    Ok(AfemOutcome {
        trace,
        mesh,
        failure,
    })
}

/// Runs the adaptive loop without observing intermediate states.
pub fn run(cfg: &AfemConfig) -> Result<AfemOutcome, AfemError> {
    run_with(cfg, |_| {})
}
