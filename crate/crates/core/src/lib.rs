//! Primal-dual gap error estimation for convex minimization problems with
//! Crouzeix-Raviart and Raviart-Thomas elements in two dimensions.
//!
//! A Crouzeix-Raviart minimizer of the discrete energy yields, through an
//! explicit element-wise formula, a Raviart-Thomas field that maximizes the
//! discrete dual energy. Together with a conforming P1 approximation this
//! gives a fully computable upper bound for the energy error, which drives
//! an adaptive solve-estimate-mark-refine loop.
//!
//! Modules, bottom up:
//!
//! * [`mesh`]: triangulations, side topology and red-green-blue refinement
//! * [`fe`]: P1, CR and RT0 spaces, quadrature, node averaging
//! * [`energy`]: the p-power and optimal design densities and conjugates
//! * [`linalg`], [`solvers`]: Newton and gradient flow minimization
//! * [`reconstruction`]: the dual field and discrete duality checks
//! * [`estimators`]: primal-dual and residual estimators
//! * [`afem`], [`trace`], [`plot`]: the adaptive loop and its outputs
//!
//! Runnable walkthroughs live in `examples/`; the `pdgap` binary exposes the
//! adaptive loop on the command line.

#![allow(clippy::needless_range_loop)]

pub mod afem;
pub mod energy;
pub mod estimators;
pub mod fe;
pub mod linalg;
pub mod mesh;
pub mod plot;
pub mod problems;
pub mod reconstruction;
pub mod solvers;
pub mod trace;

pub use afem::{dorfler_mark, run, AfemConfig, AfemOutcome, Conforming, MarkWith, SolverKind};
pub use energy::Density;
pub use fe::{FeFunction, Rt0Field, Space};
pub use mesh::Mesh;
pub use problems::Problem;
pub use trace::{Trace, TraceRow};
