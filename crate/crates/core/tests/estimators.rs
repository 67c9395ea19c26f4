#![allow(clippy::needless_range_loop)]

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use pdgap::energy::{Density, PPower};
use pdgap::estimators::{
    aitken_extrapolate, dual_energy, jump_indicators, oscillation, pd_indicators,
    refined_gap_bounds, residual_indicators, rho_f_sq,
};
use pdgap::fe::{dot, project_pw_constant, sub, FeFunction, PwAffineField, Quadrature, Space};
use pdgap::mesh::refine::{refine, RefineOptions};
use pdgap::problems::SingularSolution;
use pdgap::reconstruction::{marini_field, DIV_TOL};
use pdgap::solvers::{newton, DiscreteProblem, NewtonOptions};
use pdgap::Mesh;

fn reference() -> Mesh {
    Mesh::parse("3 1 0\n0 0\n1 0\n0 1\n0 1 2\n").unwrap()
}

fn minimizer(
    m: &Mesh,
    space: Space,
    d: Density,
    load: &[f64],
    g: impl Fn([f64; 2]) -> f64,
) -> FeFunction {
    let prob = DiscreteProblem::new(m, space, d, load.to_vec()).unwrap();
    let (u, _) = newton(&prob, prob.lift(g), &NewtonOptions::default()).unwrap();
    prob.to_function(u)
}

fn refine_all(m: &Mesh) -> (Mesh, Vec<usize>) {
    let all: Vec<usize> = (0..m.n_elements()).collect();
    let r = refine(m, &all, RefineOptions::default());
    (r.mesh, r.parent)
}

#[test]
fn trapezoidal_dual_term_on_reference_triangle() {
    let r = reference();
    let d = Density::p_power(2.0).unwrap();
    // z(x) = x, written as x_T + (x - x_T).
    let z = PwAffineField {
        a: vec![r.centroids()[0]],
        b: vec![1.0],
    };
    let u = FeFunction::zeros(Space::P1, &r);
    let ind = pd_indicators(&r, &d, &u, &z, &[-2.0], DIV_TOL);
    assert_abs_diff_eq!(ind.eta_d_hat[0], 1.0 / 9.0, epsilon = 1e-15);
    assert_abs_diff_eq!(ind.eta_d[0], 1.0 / 36.0, epsilon = 1e-15);
    assert_eq!(ind.eta_b[0], 0.0);

    let constant = PwAffineField {
        a: vec![[0.4, -0.2]],
        b: vec![0.0],
    };
    let ind = pd_indicators(&r, &d, &u, &constant, &[0.0], DIV_TOL);
    assert_abs_diff_eq!(ind.eta_d_hat[0], 0.0, epsilon = 1e-16);
    assert_abs_diff_eq!(ind.eta_d[0], 0.0, epsilon = 1e-16);
}

#[test]
fn gradient_pair_gives_zero_estimator() {
    let m = Mesh::lshape(2);
    let g = |x: [f64; 2]| 0.4 * x[0] - 0.9 * x[1];
    for d in [
        Density::p_power(1.6).unwrap(),
        Density::optimal_design(1.0, 2.0, 0.0145).unwrap(),
    ] {
        let load = vec![0.0; m.n_elements()];
        let u = minimizer(&m, Space::P1, d, &load, g);
        let z = PwAffineField {
            a: (0..m.n_elements())
                .map(|t| d.dphi(u.gradient(&m, t)))
                .collect(),
            b: vec![0.0; m.n_elements()],
        };
        let ind = pd_indicators(&m, &d, &u, &z, &load, DIV_TOL);
        assert!(ind.total_eta_sq().abs() < 1e-14);
        assert!(ind.total_eta_hat_sq().abs() < 1e-14);
    }
}

#[test]
fn residual_estimator_examples() {
    let m = Mesh::lshape(2);
    let p2 = PPower::new(2.0).unwrap();
    let affine = FeFunction::interpolate(Space::P1, &m, |x| 1.0 + x[0] - 3.0 * x[1]);
    let zero = vec![0.0; m.n_elements()];
    assert!(residual_indicators(&m, &p2, &affine, &zero)
        .iter()
        .all(|v| v.abs() < 1e-24));

    // p = 2: eta_E = h^2 f^2 |T| and eta_J = h_S |S| |[grad u]|^2.
    let u = FeFunction::interpolate(Space::P1, &m, |x| x[0] * x[1] + x[0] * x[0]);
    let load: Vec<f64> = (0..m.n_elements()).map(|t| (t % 5) as f64 - 2.0).collect();
    let res = residual_indicators(&m, &p2, &u, &load);
    let jumps = jump_indicators(&m, &p2, &u);
    for t in 0..m.n_elements() {
        let h = m.diameters()[t];
        let mut expected = h * h * load[t] * load[t] * m.areas()[t];
        for &s in &m.element_sides()[t] {
            let se = m.side_elements()[s];
            if let Some(pl) = se.plus {
                let j = sub(u.gradient(&m, pl), u.gradient(&m, se.minus));
                let l = m.side_lengths()[s];
                assert_abs_diff_eq!(jumps[s], l * l * dot(j, j), epsilon = 1e-14);
                expected += jumps[s];
            }
        }
        assert_abs_diff_eq!(res[t], expected, epsilon = 1e-12);
    }

    // Two elements sharing a unit side with gradients (0, 0) and (1, 0).
    let pair = Mesh::parse("4 2 0\n0 0\n0 1\n-1 0\n1 0\n0 1 2\n0 3 1\n").unwrap();
    let v = FeFunction {
        space: Space::P1,
        values: vec![0.0, 0.0, 0.0, 1.0],
    };
    let j = jump_indicators(&pair, &p2, &v);
    let s = (0..pair.n_sides())
        .find(|&s| pair.side_elements()[s].plus.is_some())
        .unwrap();
    assert_abs_diff_eq!(j[s], 1.0, epsilon = 1e-15);
}

#[test]
fn oscillation_examples() {
    let p2 = PPower::new(2.0).unwrap();
    let r = reference();
    let u = FeFunction::zeros(Space::P1, &r);
    assert!(oscillation(&r, &p2, &u, |_| 3.0)[0].abs() < 1e-28);
    // h_T^2 int_T (x - 1/3)^2 = 2 / 36.
    assert_abs_diff_eq!(
        oscillation(&r, &p2, &u, |x| x[0])[0],
        1.0 / 18.0,
        epsilon = 1e-15
    );

    let m = Mesh::lshape(4);
    let exact = SingularSolution::new(1.6);
    let p = PPower::new(1.6).unwrap();
    let load = project_pw_constant(&m, |x| exact.load(x));
    let uc = minimizer(&m, Space::P1, Density::PPower(p), &load, |x| exact.value(x));
    let osc = oscillation(&m, &p, &uc, |x| exact.load(x));
    for t in 0..m.n_elements() {
        if m.element_vertices(t)
            .iter()
            .any(|x| x[0].hypot(x[1]) < 1e-14)
        {
            assert!(osc[t] > 0.0);
        }
    }
}

#[test]
fn rho_examples() {
    let m = Mesh::lshape(2);
    let p = PPower::new(1.6).unwrap();
    let u = FeFunction::interpolate(Space::P1, &m, |x| 2.0 * x[0] + x[1]);
    assert!(rho_f_sq(&m, &p, |_| [2.0, 1.0], &u, Quadrature::Order4) < 1e-28);

    let p2 = PPower::new(2.0).unwrap();
    let exact = |x: [f64; 2]| [x[1].cos(), x[0] * x[0]];
    let direct: f64 = (0..m.n_elements())
        .map(|t| {
            let g = u.gradient(&m, t);
            Quadrature::Order4
                .points(&m, t)
                .iter()
                .map(|&(x, w)| {
                    let d = sub(exact(x), g);
                    w * dot(d, d)
                })
                .sum::<f64>()
        })
        .sum();
    assert_abs_diff_eq!(
        rho_f_sq(&m, &p2, exact, &u, Quadrature::Order4),
        direct,
        epsilon = 1e-14
    );
}

#[test]
fn dual_energy_examples() {
    let m = Mesh::lshape(2);
    let d = Density::p_power(2.0).unwrap();
    let trace = FeFunction::zeros(Space::P1, &m);
    let ne = m.n_elements();
    let zero = PwAffineField {
        a: vec![[0.0; 2]; ne],
        b: vec![0.0; ne],
    };
    assert_eq!(dual_energy(&m, &d, &zero, &trace), 0.0);
    let constant = PwAffineField {
        a: vec![[0.3, 0.4]; ne],
        b: vec![0.0; ne],
    };
    assert_abs_diff_eq!(
        dual_energy(&m, &d, &constant, &trace),
        -3.0 * 0.25 / 2.0,
        epsilon = 1e-14
    );
}

#[test]
fn aitken_examples() {
    let geometric: Vec<f64> = (0..6).map(|k| 1.0 + 0.5f64.powi(k)).collect();
    let a = aitken_extrapolate(&geometric).unwrap();
    assert!(!a.degenerate);
    assert_abs_diff_eq!(a.value, 1.0, epsilon = 1e-14);
    let c = aitken_extrapolate(&[2.5, 2.5, 2.5]).unwrap();
    assert!(c.degenerate);
    assert_eq!(c.value, 2.5);
    assert!(aitken_extrapolate(&[1.0, 2.0]).is_none());
}

#[test]
fn refined_bounds() {
    let m = Mesh::lshape(4);
    let exact = SingularSolution::new(1.6);
    let d = Density::p_power(1.6).unwrap();
    let load = project_pw_constant(&m, |x| exact.load(x));
    let u_cr = minimizer(&m, Space::Cr, d, &load, |x| exact.value(x));
    let u_c = minimizer(&m, Space::P1, d, &load, |x| exact.value(x));
    let z = marini_field(&m, &d, &u_cr, &load);
    let (ba, bd) = refined_gap_bounds(&m, &d, &u_c, &u_cr, &z);
    let ind = pd_indicators(&m, &d, &u_c, &z, &load, DIV_TOL);
    let sa: f64 = ind.eta_a.iter().sum();
    let sd: f64 = ind.eta_d.iter().sum();
    assert!(sa <= ba + 1e-10 * ba.abs());
    assert!(sd <= bd + 1e-10 * bd.abs());

    // A conforming CR function is its own P1 interpolant.
    let p1 = FeFunction::interpolate(Space::P1, &m, |x| x[0] - x[1] * x[1]);
    let as_cr = FeFunction {
        space: Space::Cr,
        values: m
            .sides()
            .iter()
            .map(|&[i, j]| 0.5 * (p1.values[i] + p1.values[j]))
            .collect(),
    };
    assert!(refined_gap_bounds(&m, &d, &p1, &as_cr, &z).0.abs() < 1e-14);

    // p = 2 with Pi z = grad u_cr: eta_A = B_A / 2.
    let d2 = Density::p_power(2.0).unwrap();
    let ucr2 = minimizer(&m, Space::Cr, d2, &vec![1.0; m.n_elements()], |_| 0.0);
    let uc2 = minimizer(&m, Space::P1, d2, &vec![1.0; m.n_elements()], |_| 0.0);
    let z2 = marini_field(&m, &d2, &ucr2, &vec![1.0; m.n_elements()]);
    let (ba2, _) = refined_gap_bounds(&m, &d2, &uc2, &ucr2, &z2);
    let ind2 = pd_indicators(&m, &d2, &uc2, &z2, &vec![1.0; m.n_elements()], DIV_TOL);
    assert_abs_diff_eq!(ind2.eta_a.iter().sum::<f64>(), ba2 / 2.0, epsilon = 1e-14);
}

#[test]
fn unit_square_overkill_reliability() {
    let coarse = refine_all(&Mesh::unit_square(1, false)).0;
    let d = Density::p_power(2.0).unwrap();
    let load = vec![1.0; coarse.n_elements()];
    let u_cr = minimizer(&coarse, Space::Cr, d, &load, |_| 0.0);
    let u_c = minimizer(&coarse, Space::P1, d, &load, |_| 0.0);
    let z = marini_field(&coarse, &d, &u_cr, &load);
    let ind = pd_indicators(&coarse, &d, &u_c, &z, &load, DIV_TOL);
    assert!(ind.eta_a.iter().all(|&v| v >= 0.0));

    let mut fine = coarse.clone();
    let mut ancestor: Vec<usize> = (0..fine.n_elements()).collect();
    for _ in 0..6 {
        let (m, parent) = refine_all(&fine);
        ancestor = parent.iter().map(|&p| ancestor[p]).collect();
        fine = m;
    }
    let reference = minimizer(&fine, Space::P1, d, &vec![1.0; fine.n_elements()], |_| 0.0);
    let rho: f64 = (0..fine.n_elements())
        .map(|t| {
            let e = sub(
                reference.gradient(&fine, t),
                u_c.gradient(&coarse, ancestor[t]),
            );
            fine.areas()[t] * dot(e, e)
        })
        .sum();
    let eta = ind.total_eta_sq();
    // For p = 2, I(u_c) - I(u) = rho_F^2 / 2, so weak duality alone gives eta^2 >= rho_F^2 / 2.
    assert!(
        eta >= rho,
        "eta^2 {eta:.6e} < rho_F^2 {rho:.6e} (rho_F^2 / 2 = {:.6e})",
        rho / 2.0
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicators_are_nonnegative_and_ordered(
        uvals in prop::collection::vec(-1.0f64..1.0, 21),
        avals in prop::collection::vec(-2.0f64..2.0, 48),
        f in -3.0f64..3.0,
        which in 0usize..3,
    ) {
        let m = Mesh::lshape(2);
        let d = [
            Density::p_power(2.0).unwrap(),
            Density::p_power(1.6).unwrap(),
            Density::optimal_design(1.0, 2.0, 0.0145).unwrap(),
        ][which];
        let u = FeFunction {
            space: Space::P1,
            values: (0..m.n_vertices()).map(|i| uvals[i % uvals.len()]).collect(),
        };
        let z = PwAffineField {
            a: (0..m.n_elements()).map(|t| [avals[(2 * t) % avals.len()], avals[(2 * t + 1) % avals.len()]]).collect(),
            b: vec![-0.5 * f; m.n_elements()],
        };
        let load = vec![f; m.n_elements()];
        let ind = pd_indicators(&m, &d, &u, &z, &load, DIV_TOL);
        let eta = ind.eta_sq();
        let hat = ind.eta_hat_sq();
        for t in 0..m.n_elements() {
            let scale = m.areas()[t] * (1.0 + d.phi(u.gradient(&m, t)) + d.phi_star(z.a[t]));
            prop_assert!(ind.eta_a[t] >= -1e-12 * scale);
            prop_assert!(ind.eta_d_hat[t] >= -1e-12 * scale);
            prop_assert!(eta[t] >= -1e-12 * scale, "element {}: eta {}", t, eta[t]);
            // The order-4 rule is exact for p = 2 and accurate to a few ulps otherwise.
            prop_assert!(hat[t] >= eta[t] - 1e-9 * scale, "element {}: hat {} eta {}", t, hat[t], eta[t]);
        }
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences(a in -5.0f64..5.0, c in 0.1f64..5.0, q in -0.9f64..0.9) {
        prop_assume!(q.abs() > 0.05);
        let s: Vec<f64> = (0..5).map(|k| a + c * q.powi(k)).collect();
        let r = aitken_extrapolate(&s).unwrap();
        prop_assert!((r.value - a).abs() <= 1e-9 * (1.0 + a.abs() + c));
    }
}
