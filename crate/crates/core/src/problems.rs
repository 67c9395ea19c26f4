//! Model problems on the L-shaped domain.

use crate::energy::{Density, InvalidParameter};
use crate::fe::Vec2;

/// Polar angle in `[0, 2 pi)`.
pub fn polar_angle(x: Vec2) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Singular solution `u = r^delta sin(delta theta)`, `delta = 6/5 (1 - 1/p)`,
/// of the p-Laplace equation with the matching load on the L-shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularSolution {
    pub p: f64,
    pub delta: f64,
}

impl SingularSolution {
    pub fn new(p: f64) -> Self {
        SingularSolution {
            p,
            delta: 1.2 * (1.0 - 1.0 / p),
        }
    }

    pub fn value(&self, x: Vec2) -> f64 {
        let r = x[0].hypot(x[1]);
        r.powf(self.delta) * (self.delta * polar_angle(x)).sin()
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return [f64::NAN; 2];
        }
        let th = polar_angle(x);
        let c = self.delta * r.powf(self.delta - 1.0);
        let a = (self.delta - 1.0) * th;
        [c * a.sin(), c * a.cos()]
    }

    /// `f = -div(|grad u|^(p-2) grad u)`.
    pub fn load(&self, x: Vec2) -> f64 {
        let (p, d) = (self.p, self.delta);
        let r = x[0].hypot(x[1]);
        let e = (d - 1.0) * (p - 1.0) - 1.0;
        -(2.0 - p) * d.powf(p - 1.0) * (1.0 - d) * r.powf(e) * (d * polar_angle(x)).sin()
    }
}

/// A model problem: energy density, load and Dirichlet data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem {
    /// p-Laplace with the singular exact solution as Dirichlet data.
    PDirichlet { p: f64 },
    /// Optimal design with unit load and homogeneous Dirichlet data.
    OptimalDesign { mu1: f64, mu2: f64, lambda: f64 },
    /// p-Laplace with constant load `f` and homogeneous Dirichlet data.
    ConstantLoad { p: f64, f: f64 },
}

impl Problem {
    pub fn optimal_design_default() -> Self {
        Problem::OptimalDesign {
            mu1: 1.0,
            mu2: 2.0,
            lambda: 0.0145,
        }
    }

    pub fn density(&self) -> Result<Density, InvalidParameter> {
        match *self {
            Problem::PDirichlet { p } => Density::p_power(p),
            Problem::OptimalDesign { mu1, mu2, lambda } => {
                Density::optimal_design(mu1, mu2, lambda)
            }
            Problem::ConstantLoad { p, .. } => Density::p_power(p),
        }
    }

    pub fn exact(&self) -> Option<SingularSolution> {
        match *self {
            Problem::PDirichlet { p } => Some(SingularSolution::new(p)),
            _ => None,
        }
    }

    pub fn load(&self, x: Vec2) -> f64 {
        match self {
            Problem::PDirichlet { p } => SingularSolution::new(*p).load(x),
            Problem::OptimalDesign { .. } => 1.0,
            Problem::ConstantLoad { f, .. } => *f,
        }
    }

    pub fn boundary(&self, x: Vec2) -> f64 {
        match self {
            Problem::PDirichlet { p } => SingularSolution::new(*p).value(x),
            _ => 0.0,
        }
    }
}
