//! Convex radial energy densities `phi(a) = psi(|a|)` and their conjugates.

use crate::fe::{dot, norm, Vec2};

/// Regularization of `|a|` in second derivatives of the p-power density.
pub const HESSIAN_KAPPA: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvalidParameter(pub &'static str);

impl std::fmt::Display for InvalidParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid parameter: {}", self.0)
    }
}

impl std::error::Error for InvalidParameter {}

/// `phi(a) = |a|^p / p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PPower {
    p: f64,
}

impl PPower {
    pub fn new(p: f64) -> Result<Self, InvalidParameter> {
        if p > 1.0 && p.is_finite() {
            Ok(PPower { p })
        } else {
            Err(InvalidParameter("p must be finite and > 1"))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `F(a) = |a|^((p-2)/2) a`.
    pub fn f_map(&self, a: Vec2) -> Vec2 {
        let r = norm(a);
        if r == 0.0 {
            return [0.0; 2];
        }
        let s = r.powf((self.p - 2.0) / 2.0);
        [s * a[0], s * a[1]]
    }
}

/// Three-phase relaxed optimal design density with parameters
/// `0 < mu1 < mu2` and `lambda > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalDesign {
    mu1: f64,
    mu2: f64,
    t1: f64,
    t2: f64,
}

impl OptimalDesign {
    pub fn new(mu1: f64, mu2: f64, lambda: f64) -> Result<Self, InvalidParameter> {
        if !(mu1 > 0.0 && mu2 > mu1 && lambda > 0.0 && mu2.is_finite() && lambda.is_finite()) {
            return Err(InvalidParameter("need 0 < mu1 < mu2 and lambda > 0"));
        }
        Ok(OptimalDesign {
            mu1,
            mu2,
            t1: (2.0 * lambda * mu1 / mu2).sqrt(),
            t2: (2.0 * lambda * mu2 / mu1).sqrt(),
        })
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn mu(&self) -> (f64, f64) {
        (self.mu1, self.mu2)
    }

    fn psi_t2(&self) -> f64 {
        self.mu2 * self.t1 * self.t1 / 2.0 + self.mu2 * self.t1 * (self.t2 - self.t1)
    }
}

/// A convex radial density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    PPower(PPower),
    OptimalDesign(OptimalDesign),
}

impl Density {
    pub fn p_power(p: f64) -> Result<Self, InvalidParameter> {
        PPower::new(p).map(Density::PPower)
    }

    pub fn optimal_design(mu1: f64, mu2: f64, lambda: f64) -> Result<Self, InvalidParameter> {
        OptimalDesign::new(mu1, mu2, lambda).map(Density::OptimalDesign)
    }

    /// Radial profile `psi(t)`, `t >= 0`.
    pub fn psi(&self, t: f64) -> f64 {
        match self {
            Density::PPower(d) => t.powf(d.p) / d.p,
            Density::OptimalDesign(d) => {
                if t <= d.t1 {
                    d.mu2 * t * t / 2.0
                } else if t <= d.t2 {
                    d.mu2 * d.t1 * d.t1 / 2.0 + d.mu2 * d.t1 * (t - d.t1)
                } else {
                    d.psi_t2() + d.mu1 * (t * t - d.t2 * d.t2) / 2.0
                }
            }
        }
    }

    /// `psi'(t)`.
    pub fn dpsi(&self, t: f64) -> f64 {
        match self {
            Density::PPower(d) => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(d.p - 1.0)
                }
            }
            Density::OptimalDesign(d) => {
                if t <= d.t1 {
                    d.mu2 * t
                } else if t <= d.t2 {
                    d.mu2 * d.t1
                } else {
                    d.mu1 * t
                }
            }
        }
    }

    /// `psi'(t) / t`, extended continuously to `t = 0` where possible. For
    /// the p-power density `t` is regularized by [`HESSIAN_KAPPA`].
    pub fn secant(&self, t: f64) -> f64 {
        match self {
            Density::PPower(d) => (t * t + HESSIAN_KAPPA * HESSIAN_KAPPA)
                .sqrt()
                .powf(d.p - 2.0),
            Density::OptimalDesign(d) => {
                if t <= d.t1 {
                    d.mu2
                } else if t <= d.t2 {
                    d.mu2 * d.t1 / t
                } else {
                    d.mu1
                }
            }
        }
    }

    /// `psi''(t)` (one-sided at kinks).
    fn d2psi(&self, t: f64) -> f64 {
        match self {
            Density::PPower(d) => {
                (d.p - 1.0)
                    * (t * t + HESSIAN_KAPPA * HESSIAN_KAPPA)
                        .sqrt()
                        .powf(d.p - 2.0)
            }
            Density::OptimalDesign(d) => {
                if t < d.t1 {
                    d.mu2
                } else if t < d.t2 {
                    0.0
                } else {
                    d.mu1
                }
            }
        }
    }

    /// Conjugate profile `psi*(s)`, `s >= 0`.
    pub fn psi_star(&self, s: f64) -> f64 {
        match self {
            Density::PPower(d) => {
                let q = d.p_conj();
                s.powf(q) / q
            }
            Density::OptimalDesign(d) => {
                let kink = d.mu2 * d.t1;
                if s <= kink {
                    s * s / (2.0 * d.mu2)
                } else {
                    s * s / (2.0 * d.mu1) - d.psi_t2() + d.mu1 * d.t2 * d.t2 / 2.0
                }
            }
        }
    }

    /// `(psi*)'(s)`; at the optimal design kink the midpoint of the
    /// subdifferential is returned.
    pub fn dpsi_star(&self, s: f64) -> f64 {
        match self {
            Density::PPower(d) => {
                if s == 0.0 {
                    0.0
                } else {
                    s.powf(d.p_conj() - 1.0)
                }
            }
            Density::OptimalDesign(d) => {
                let kink = d.mu2 * d.t1;
                if s < kink {
                    s / d.mu2
                } else if s > kink {
                    s / d.mu1
                } else {
                    (d.t1 + d.t2) / 2.0
                }
            }
        }
    }

    pub fn phi(&self, a: Vec2) -> f64 {
        self.psi(norm(a))
    }

    pub fn dphi(&self, a: Vec2) -> Vec2 {
        radial_derivative(norm(a), a, self.dpsi(norm(a)))
    }

    /// Hessian `psi''(|a|) e e^T + psi'(|a|)/|a| (I - e e^T)`, `e = a/|a|`.
    pub fn d2phi(&self, a: Vec2) -> [[f64; 2]; 2] {
        let r = norm(a);
        let tang = self.secant(r);
        if r == 0.0 {
            let c = self.d2psi(0.0);
            return [[c, 0.0], [0.0, c]];
        }
        let rad = self.d2psi(r);
        let e = [a[0] / r, a[1] / r];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                h[i][j] = rad * e[i] * e[j] + tang * (id - e[i] * e[j]);
            }
        }
        h
    }

    pub fn phi_star(&self, b: Vec2) -> f64 {
        self.psi_star(norm(b))
    }

    pub fn dphi_star(&self, b: Vec2) -> Vec2 {
        radial_derivative(norm(b), b, self.dpsi_star(norm(b)))
    }

    /// Fenchel-Young residual `phi(a) + phi*(b) - a.b`, non-negative.
    pub fn fenchel_young(&self, a: Vec2, b: Vec2) -> f64 {
        self.phi(a) + self.phi_star(b) - dot(a, b)
    }

    /// Constant `c` in `|Dphi(a) - Dphi(b)|^2 / c <= phi(a) - phi(b) -
    /// Dphi(b).(a - b)` where it is known (`2 mu2` for optimal design).
    pub fn cocoercivity_constant(&self) -> Option<f64> {
        match self {
            Density::PPower(_) => None,
            Density::OptimalDesign(d) => Some(2.0 * d.mu2),
        }
    }
}

fn radial_derivative(r: f64, a: Vec2, d: f64) -> Vec2 {
    if r == 0.0 {
        [0.0; 2]
    } else {
        [d * a[0] / r, d * a[1] / r]
    }
}

/// Linear load potential `psi_h(t) = -f t` on one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadPotential {
    pub f: f64,
}

impl LoadPotential {
    pub fn psi(&self, t: f64) -> f64 {
        -self.f * t
    }

    /// Conjugate: zero at `s = -f` and `+inf` elsewhere. `tol` is the
    /// absolute tolerance for the constraint.
    pub fn psi_star(&self, s: f64, tol: f64) -> f64 {
        if (s + self.f).abs() <= tol {
            0.0
        } else {
            f64::INFINITY
        }
    }
}
