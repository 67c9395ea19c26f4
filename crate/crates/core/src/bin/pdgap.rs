//! Command-line driver for the adaptive loop.
//!
//! ```text
//! pdgap run --problem p-dirichlet --p 1.6 --iters 20 --theta 0.5 --out-dir out
//! ```

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pdgap::afem::{run_with, AfemConfig, Conforming, MarkWith, SolverKind};
use pdgap::estimators::write_indicators_csv;
use pdgap::fe::Quadrature;
use pdgap::linalg::LinearSolver;
use pdgap::plot::{energy_plot, estimator_plot};
use pdgap::{Mesh, Problem};

#[derive(Parser)]
#[command(
    name = "pdgap",
    version,
    about = "Adaptive primal-dual gap finite element runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the adaptive (or uniform) loop and writes the trace and plots.
    Run(Box<RunArgs>),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    PDirichlet,
    OptimalDesign,
    ConstantLoad,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Lshape,
    Square,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConformingArg {
    Minimize,
    Average,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarkArg {
    Pd,
    Residual,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Newton,
    Flow,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinearArg {
    Cholesky,
    Cg,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "p-dirichlet")]
    problem: ProblemArg,
    /// Exponent of the p-power density.
    #[arg(long, default_value_t = 1.6)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    mu1: f64,
    #[arg(long, default_value_t = 2.0)]
    mu2: f64,
    #[arg(long, default_value_t = 0.0145)]
    lambda: f64,
    /// Constant load of the `constant-load` problem.
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Stop once the total estimator is at most this value.
    #[arg(long, default_value_t = 0.0)]
    eps_stop: f64,
    /// Refine all elements instead of marking.
    #[arg(long)]
    uniform: bool,
    #[arg(long, value_enum, default_value = "minimize")]
    conforming: ConformingArg,
    #[arg(long, value_enum, default_value = "pd")]
    mark_with: MarkArg,
    /// Defaults to gradient flow for optimal design and Newton otherwise.
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, value_enum, default_value = "cholesky")]
    linear: LinearArg,
    #[arg(long)]
    tol_abs: Option<f64>,
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Gradient flow step size.
    #[arg(long)]
    tau: Option<f64>,
    /// Gradient flow stopping threshold; defaults to h^2/20.
    #[arg(long)]
    flow_eps: Option<f64>,
    /// Iteration limit of the nonlinear solver.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Initial mesh file; overrides `--domain`.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lshape")]
    domain: DomainArg,
    /// Subdivisions per unit length of the built-in domain.
    #[arg(long, default_value_t = 4)]
    mesh_n: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Recorded in the metadata; the loop itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-element indicators of every iteration.
    #[arg(long)]
    dump_indicators: bool,
    /// Write the RT0 flux coefficients of every iteration.
    #[arg(long)]
    dump_flux: bool,
    /// Write the CR and conforming degrees of freedom of every iteration.
    #[arg(long)]
    dump_fields: bool,
    /// Add an interior node to marked elements.
    #[arg(long)]
    interior_node: bool,
    /// Evaluate the error against the exact solution with the order-8 rule.
    #[arg(long)]
    rho_order8: bool,
    /// Write zero instead of wall time, for byte-identical traces.
    #[arg(long)]
    no_time: bool,
}

fn config(a: &RunArgs) -> Result<AfemConfig, String> {
    let problem = match a.problem {
        ProblemArg::PDirichlet => Problem::PDirichlet { p: a.p },
        ProblemArg::OptimalDesign => Problem::OptimalDesign {
            mu1: a.mu1,
            mu2: a.mu2,
            lambda: a.lambda,
        },
        ProblemArg::ConstantLoad => Problem::ConstantLoad { p: a.p, f: a.f },
    };
    let mut cfg = AfemConfig::new(problem);
    cfg.initial_mesh = match &a.mesh {
        Some(path) => Mesh::load(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => match a.domain {
            DomainArg::Lshape => Mesh::lshape(a.mesh_n),
            DomainArg::Square => Mesh::unit_square(a.mesh_n, false),
        },
    };
    cfg.theta = a.theta;
    cfg.eps_stop = a.eps_stop;
    cfg.max_iterations = a.iters;
    cfg.uniform = a.uniform;
    cfg.conforming = match a.conforming {
        ConformingArg::Minimize => Conforming::Minimize,
        ConformingArg::Average => Conforming::Average,
    };
    cfg.mark_with = match a.mark_with {
        MarkArg::Pd => MarkWith::PrimalDual,
        MarkArg::Residual => MarkWith::Residual,
    };
    if let Some(s) = a.solver {
        cfg.solver = match s {
            SolverArg::Newton => SolverKind::Newton,
            SolverArg::Flow => SolverKind::Flow,
        };
    }
    if let Some(v) = a.tol_abs {
        cfg.newton.tol_abs = v;
    }
    if let Some(v) = a.tol_rel {
        cfg.newton.tol_rel = v;
    }
    if let Some(v) = a.tau {
        cfg.flow.tau = v;
    }
    if a.flow_eps.is_some() {
        cfg.flow.eps_stop = a.flow_eps;
    }
    if let Some(v) = a.max_iter {
        cfg.newton.max_iter = v;
        cfg.flow.max_iter = v;
    }
    cfg.refine.interior_node = a.interior_node;
    cfg.record_time = !a.no_time;
    if a.rho_order8 {
        cfg.rho_quadrature = Quadrature::Order8;
    }
    let linear = match a.linear {
        LinearArg::Cholesky => LinearSolver::Cholesky,
        LinearArg::Cg => LinearSolver::Cg {
            tol: 1e-12,
            max_iter: 100_000,
        },
    };
    Ok(cfg.linear_solver(linear))
}

fn run(a: &RunArgs) -> Result<(), String> {
    let cfg = config(a)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| format!("{}: {e}", a.out_dir.display()))?;
    let out_dir = &a.out_dir;
    let mut io_error = None;
    let outcome = run_with(&cfg, |st| {
        eprintln!(
            "k={:2} N={:6} solver iterations={}",
            st.k,
            st.mesh.n_vertices(),
            st.cr_report.iterations
        );
        let write = || -> std::io::Result<()> {
            if a.dump_indicators {
                write_indicators_csv(
                    out_dir.join(format!("indicators_{:02}.csv", st.k)),
                    st.indicators,
                    st.residual,
                )?;
            }
            if a.dump_flux {
                st.z.write_csv(out_dir.join(format!("flux_{:02}.csv", st.k)))?;
            }
            if a.dump_fields {
                st.u_cr
                    .write_csv(out_dir.join(format!("u_cr_{:02}.csv", st.k)))?;
                st.u_c
                    .write_csv(out_dir.join(format!("u_c_{:02}.csv", st.k)))?;
            }
            Ok(())
        };
        if let Err(e) = write() {
            io_error.get_or_insert(e.to_string());
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = io_error {
        return Err(format!("writing dumps: {e}"));
    }

    let mut trace = outcome.trace;
    trace.metadata.push(("seed".into(), a.seed.to_string()));
    trace.metadata.push((
        "initial_elements".into(),
        cfg.initial_mesh.n_elements().to_string(),
    ));
    let write_err = |e: std::io::Error| e.to_string();
    trace
        .write_csv(out_dir.join("trace.csv"))
        .map_err(|e| e.to_string())?;
    trace
        .write_metadata(out_dir.join("metadata.txt"))
        .map_err(|e| e.to_string())?;
    fs::write(
        out_dir.join("estimator_vs_N.svg"),
        estimator_plot(&trace).to_svg(),
    )
    .map_err(write_err)?;
    fs::write(
        out_dir.join("energies_vs_N.svg"),
        energy_plot(&trace).to_svg(),
    )
    .map_err(write_err)?;
    for r in &trace.rows {
        println!(
            "k={:2} N={:7} eta_hat^2={:.4e} rho^2={:.4e} I={:.10} D={:.10}",
            r.k, r.n, r.eta_hat_sq, r.rho_sq, r.i_primal, r.d_dual
        );
    }
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
