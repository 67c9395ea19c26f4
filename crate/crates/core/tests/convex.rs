use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;

use pdgap::energy::{Density, LoadPotential, OptimalDesign, PPower};
use pdgap::fe::{dot, norm, sub, Vec2};
use pdgap::problems::SingularSolution;

fn design() -> Density {
    Density::optimal_design(1.0, 2.0, 0.0145).unwrap()
}

fn densities() -> Vec<Density> {
    vec![
        Density::p_power(1.2).unwrap(),
        Density::p_power(1.6).unwrap(),
        Density::p_power(2.0).unwrap(),
        Density::p_power(3.5).unwrap(),
        design(),
    ]
}

fn vec_in(radius: f64) -> impl Strategy<Value = Vec2> {
    (0.0..radius, 0.0..std::f64::consts::TAU)
        .prop_map(|(r, a): (f64, f64)| [r * a.cos(), r * a.sin()])
}

/// `sup_{t in [0, 10]} s t - psi(t)` by dense sampling and golden refinement.
fn grid_conjugate(d: &Density, s: f64) -> f64 {
    let n = 200_000;
    let f = |t: f64| s * t - d.psi(t);
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=n {
        let t = 10.0 * i as f64 / n as f64;
        if f(t) > best {
            best = f(t);
            arg = t;
        }
    }
    let (mut lo, mut hi) = ((arg - 1e-4).max(0.0), (arg + 1e-4).min(10.0));
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

#[test]
fn p_power_examples() {
    let d = Density::p_power(2.0).unwrap();
    assert_abs_diff_eq!(d.phi([1.0, 0.0]), 0.5);
    assert_eq!(d.dphi([1.0, 0.0]), [1.0, 0.0]);
    assert_abs_diff_eq!(d.phi_star([1.0, 0.0]), 0.5);
    let d = Density::p_power(1.6).unwrap();
    assert_abs_diff_eq!(d.phi_star([0.6, 0.8]), 0.375, epsilon = 1e-15);
    assert_eq!(d.dphi([0.0, 0.0]), [0.0, 0.0]);
    assert!(PPower::new(1.0).is_err());
    assert!(PPower::new(0.5).is_err());
    assert_eq!(d.fenchel_young([0.0, 0.0], [0.0, 0.0]), 0.0);
}

#[test]
fn optimal_design_examples() {
    let Density::OptimalDesign(od) = design() else {
        unreachable!()
    };
    let (t1, t2) = od.thresholds();
    assert_abs_diff_eq!(t1, 0.1204159, epsilon = 1e-7);
    assert_abs_diff_eq!(t2, 0.2408319, epsilon = 1e-7);
    let d = design();
    assert_abs_diff_eq!(d.dpsi(t1), 2.0 * t1, epsilon = 1e-15);
    assert_abs_diff_eq!(d.dpsi(t2), 1.0 * t2, epsilon = 1e-15);
    assert_abs_diff_eq!(d.dpsi(t1 * (1.0 - 1e-12)), d.dpsi(t1), epsilon = 1e-12);
    assert_abs_diff_eq!(d.dpsi(t2 * (1.0 + 1e-12)), d.dpsi(t2), epsilon = 1e-12);
    assert_eq!(d.psi(0.0), 0.0);
    assert_abs_diff_eq!(d.psi_star(0.1), 0.0025, epsilon = 1e-16);
    assert!(OptimalDesign::new(2.0, 1.0, 0.0145).is_err());
    assert!(OptimalDesign::new(1.0, 2.0, 0.0).is_err());
}

#[test]
fn conjugates_match_grid_supremum() {
    let d = design();
    for &s in &[0.0, 0.05, 0.1, 0.2408, 0.3, 1.0, 3.0, 8.0] {
        assert_abs_diff_eq!(d.psi_star(s), grid_conjugate(&d, s), epsilon = 1e-6);
    }
    // Maximizers |s|^(1/(p-1)) stay inside [0, 10] for these slopes.
    for p in [1.6, 2.0, 3.0] {
        let d = Density::p_power(p).unwrap();
        for &s in &[0.0, 0.3, 1.0, 2.0] {
            assert_abs_diff_eq!(d.psi_star(s), grid_conjugate(&d, s), epsilon = 1e-6);
        }
    }
}

#[test]
fn conjugate_kink_selects_midpoint() {
    let d = design();
    let Density::OptimalDesign(od) = d else {
        unreachable!()
    };
    let (t1, t2) = od.thresholds();
    let kink = 2.0 * t1;
    assert_abs_diff_eq!(d.dpsi_star(kink), 0.5 * (t1 + t2), epsilon = 1e-15);
}

#[test]
fn f_map_examples() {
    let id = PPower::new(2.0).unwrap();
    assert_eq!(id.f_map([0.3, -0.4]), [0.3, -0.4]);
    let p4 = PPower::new(4.0).unwrap();
    assert_eq!(p4.f_map([1.0, 0.0]), [1.0, 0.0]);
    assert_eq!(p4.f_map([2.0, 0.0]), [4.0, 0.0]);
    for p in [1.2, 1.6, 3.0] {
        assert_eq!(PPower::new(p).unwrap().f_map([0.0, 0.0]), [0.0, 0.0]);
    }
}

#[test]
fn singular_exponents() {
    assert_relative_eq!(SingularSolution::new(1.6).delta, 0.45, max_relative = 1e-14);
    assert_relative_eq!(SingularSolution::new(1.2).delta, 0.2, max_relative = 1e-14);
    let lin = SingularSolution::new(2.0);
    for x in [[0.3, 0.1], [-0.5, -0.5], [0.01, 0.9]] {
        assert_eq!(lin.load(x), 0.0);
    }
}

#[test]
fn load_potential_conjugate_is_exact_indicator() {
    let l = LoadPotential { f: 1.5 };
    assert_eq!(l.psi(2.0), -3.0);
    assert_eq!(l.psi_star(-1.5, 0.0), 0.0);
    assert_eq!(l.psi_star(-1.5 + 1e-15, 0.0), f64::INFINITY);
    assert_eq!(l.psi_star(1.5, 0.0), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn fenchel_young_inequality(a in vec_in(10.0), b in vec_in(10.0)) {
        for d in densities() {
            let r = d.fenchel_young(a, b);
            prop_assert!(r.is_finite());
            prop_assert!(r >= -1e-12 * (1.0 + d.phi(a) + d.phi_star(b)), "{:?} a={:?} b={:?} r={}", d, a, b, r);
        }
    }

    #[test]
    fn fenchel_young_identity_and_round_trip(a in vec_in(10.0)) {
        for d in densities() {
            let b = d.dphi(a);
            let scale = 1.0 + d.phi(a) + d.phi_star(b);
            prop_assert!(d.fenchel_young(a, b).abs() <= 1e-9 * scale);
            // Gradients on the flat interval [t1, t2] all map to the conjugate kink.
            let kink = match d {
                Density::OptimalDesign(od) => {
                    let (t1, _) = od.thresholds();
                    (norm(b) - od.mu().1 * t1).abs() < 1e-12
                }
                Density::PPower(_) => false,
            };
            if !kink && norm(a) > 1e-6 {
                let back = d.dphi_star(b);
                prop_assert!(norm(sub(back, a)) <= 1e-10 * norm(a), "{:?} a={:?} back={:?}", d, a, back);
            }
        }
    }

    #[test]
    fn midpoint_convexity(a in vec_in(10.0), b in vec_in(10.0)) {
        for d in densities() {
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            prop_assert!(d.phi(m) <= 0.5 * (d.phi(a) + d.phi(b)) + 1e-12 * (1.0 + d.phi(a) + d.phi(b)));
            prop_assert!(d.phi_star(m) <= 0.5 * (d.phi_star(a) + d.phi_star(b)) + 1e-12 * (1.0 + d.phi_star(a) + d.phi_star(b)));
        }
    }

    #[test]
    fn optimal_design_cocoercivity(a in vec_in(1.0), b in vec_in(1.0)) {
        let d = design();
        let c = d.cocoercivity_constant().unwrap();
        let da = d.dphi(a);
        let db = d.dphi(b);
        let lhs = dot(sub(da, db), sub(da, db)) / c;
        let rhs = d.phi(a) - d.phi(b) - dot(db, sub(a, b));
        prop_assert!(lhs <= rhs + 1e-10, "lhs={} rhs={}", lhs, rhs);
    }

    #[test]
    fn p_power_homogeneity(a in vec_in(10.0), lambda in 0.01f64..10.0, p in 1.05f64..4.0) {
        let d = Density::p_power(p).unwrap();
        let scaled = [lambda * a[0], lambda * a[1]];
        prop_assert!((d.phi(scaled) - lambda.powf(p) * d.phi(a)).abs() <= 1e-12 * (1.0 + d.phi(scaled)));
    }
}
