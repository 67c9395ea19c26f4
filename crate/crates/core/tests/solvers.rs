#![allow(clippy::needless_range_loop)]

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdgap::energy::Density;
use pdgap::fe::{dot, FeFunction, Quadrature, Space};
use pdgap::linalg::{CsrMatrix, LinearSolver};
use pdgap::problems::SingularSolution;
use pdgap::solvers::{gradient_flow, newton, DiscreteProblem, FlowOptions, NewtonOptions};
use pdgap::Mesh;

const CG: LinearSolver = LinearSolver::Cg {
    tol: 1e-12,
    max_iter: 10_000,
};

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_state(prob: &DiscreteProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..prob.n_dofs())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect()
}

#[test]
fn identity_system() {
    let a = CsrMatrix::from_triplets(5, (0..5).map(|i| (i, i, 1.0)).collect());
    let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
    for solver in [LinearSolver::Cholesky, CG] {
        let x = a.solve(&b, solver).unwrap();
        for (p, q) in x.iter().zip(&b) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-14);
        }
    }
}

#[test]
fn tridiagonal_matches_dense_oracle() {
    let n = 40;
    let mut trip = Vec::new();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        trip.push((i, i, 2.0));
        dense[i][i] = 2.0;
        if i + 1 < n {
            trip.push((i, i + 1, -1.0));
            trip.push((i + 1, i, -1.0));
            dense[i][i + 1] = -1.0;
            dense[i + 1][i] = -1.0;
        }
    }
    let a = CsrMatrix::from_triplets(n, trip);
    let b: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let oracle = dense_solve(dense, b.clone());
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for solver in [LinearSolver::Cholesky, CG] {
        let x = a.solve(&b, solver).unwrap();
        for (p, q) in x.iter().zip(&oracle) {
            assert!(
                (p - q).abs() <= 1e-12 * scale.max(1.0) * n as f64,
                "{solver:?}: {p} vs {q}"
            );
        }
    }
}

#[test]
fn random_spd_residual() {
    let n = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let m: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut v: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
            if i == j {
                v += 1.0;
            }
            trip.push((i, j, v));
        }
    }
    let a = CsrMatrix::from_triplets(n, trip);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert!(residual(&a, &a.solve(&b, LinearSolver::Cholesky).unwrap(), &b) <= 1e-12);
    assert!(residual(&a, &a.solve(&b, CG).unwrap(), &b) <= 1e-11);
}

#[test]
fn indefinite_matrix_is_rejected() {
    let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
    assert!(a.solve(&[1.0, 1.0], LinearSolver::Cholesky).is_err());
}

#[test]
fn energy_examples() {
    let m = Mesh::unit_square(4, false);
    let d = Density::p_power(2.0).unwrap();
    for space in [Space::P1, Space::Cr] {
        let prob = DiscreteProblem::new(&m, space, d, vec![0.0; m.n_elements()]).unwrap();
        assert_eq!(prob.energy(&vec![0.0; prob.n_dofs()]), 0.0);
        let x1 = FeFunction::interpolate(space, &m, |x| x[0]);
        assert_abs_diff_eq!(prob.energy(&x1.values), 0.5, epsilon = 1e-14);
    }
}

#[test]
fn energy_matches_quadrature() {
    let m = Mesh::lshape(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [
        Density::p_power(1.6).unwrap(),
        Density::optimal_design(1.0, 2.0, 0.0145).unwrap(),
    ] {
        for space in [Space::P1, Space::Cr] {
            let load: Vec<f64> = (0..m.n_elements())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let prob = DiscreteProblem::new(&m, space, d, load.clone()).unwrap();
            let u = FeFunction {
                space,
                values: random_state(&prob, &mut rng),
            };
            let quad: f64 = (0..m.n_elements())
                .map(|t| {
                    let g = u.gradient(&m, t);
                    Quadrature::Order4
                        .points(&m, t)
                        .iter()
                        .map(|&(x, w)| w * (d.phi(g) - load[t] * u.eval(&m, t, x)))
                        .sum::<f64>()
                })
                .sum();
            let e = prob.energy(&u.values);
            assert!((e - quad).abs() <= 1e-12 * (1.0 + e.abs()), "{e} vs {quad}");
        }
    }
}

#[test]
fn quadratic_hessian_is_stiffness_matrix() {
    let m = Mesh::lshape(2);
    let d = Density::p_power(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for space in [Space::P1, Space::Cr] {
        let load: Vec<f64> = (0..m.n_elements())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let prob = DiscreteProblem::new(&m, space, d, load.clone()).unwrap();
        let n = prob.n_dofs();
        let mut k = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for t in 0..m.n_elements() {
            let dofs = space.local_dofs(&m, t);
            let g = space.local_gradients(&m, t);
            let area = m.areas()[t];
            for i in 0..3 {
                b[dofs[i]] += area * load[t] / 3.0;
                for j in 0..3 {
                    k[dofs[i]][dofs[j]] += area * dot(g[i], g[j]);
                }
            }
        }
        let u = random_state(&prob, &mut rng);
        let h = prob.hessian(&u);
        let free = prob.free_dofs();
        for (a, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                assert_abs_diff_eq!(h.get(a, c), k[i][j], epsilon = 1e-12);
            }
        }
        let g = prob.gradient(&u);
        for &i in free {
            let ku: f64 = (0..n).map(|j| k[i][j] * u[j]).sum();
            assert_abs_diff_eq!(g[i], ku - b[i], epsilon = 1e-12);
        }
    }
}

#[test]
fn finite_difference_checks() {
    let m = Mesh::lshape(2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    for d in [
        Density::p_power(1.2).unwrap(),
        Density::p_power(1.6).unwrap(),
        Density::p_power(2.0).unwrap(),
        Density::optimal_design(1.0, 2.0, 0.0145).unwrap(),
    ] {
        for space in [Space::P1, Space::Cr] {
            let load: Vec<f64> = (0..m.n_elements())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let prob = DiscreteProblem::new(&m, space, d, load).unwrap();
            for _ in 0..20 {
                let u = random_state(&prob, &mut rng);
                let w: Vec<f64> = (0..prob.n_dofs())
                    .map(|i| {
                        if prob.fixed()[i] {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect();
                let at =
                    |s: f64| -> Vec<f64> { u.iter().zip(&w).map(|(a, b)| a + s * b).collect() };
                let gw: f64 = prob.gradient(&u).iter().zip(&w).map(|(a, b)| a * b).sum();
                let fd = (prob.energy(&at(h)) - prob.energy(&at(-h))) / (2.0 * h);
                assert!(
                    (fd - gw).abs() <= 1e-5 * gw.abs(),
                    "{d:?} {space:?}: {fd} vs {gw}"
                );

                let free = prob.free_dofs();
                let wf: Vec<f64> = free.iter().map(|&i| w[i]).collect();
                let hw = prob.hessian(&u).mul(&wf);
                let (gp, gm) = (prob.gradient(&at(h)), prob.gradient(&at(-h)));
                let err: f64 = free
                    .iter()
                    .zip(&hw)
                    .map(|(&i, v)| ((gp[i] - gm[i]) / (2.0 * h) - v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = hw.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(err <= 1e-5 * norm, "{d:?} {space:?}: Hessian error {err:e}");
            }
        }
    }
}

#[test]
fn newton_descends_and_beats_interpolant() {
    let m = Mesh::lshape(4);
    let exact = SingularSolution::new(1.6);
    let d = Density::p_power(1.6).unwrap();
    let load = pdgap::fe::project_pw_constant(&m, |x| exact.load(x));
    let prob = DiscreteProblem::new(&m, Space::P1, d, load).unwrap();
    let (u, rep) = newton(
        &prob,
        prob.lift(|x| exact.value(x)),
        &NewtonOptions::default(),
    )
    .unwrap();
    for w in rep.energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0));
    }
    let interp = FeFunction::interpolate(Space::P1, &m, |x| exact.value(x));
    assert!(prob.energy(&u) <= prob.energy(&interp.values));

    let (_, again) = newton(&prob, u.clone(), &NewtonOptions::default()).unwrap();
    assert_eq!(again.iterations, 0);
    let (u2, _) = newton(
        &prob,
        prob.lift(|x| exact.value(x)),
        &NewtonOptions::default(),
    )
    .unwrap();
    assert_eq!(u, u2);
}

#[test]
fn cr_minimum_is_below_p1_minimum() {
    let m = Mesh::lshape(4);
    for p in [1.2, 1.6, 2.0] {
        let exact = SingularSolution::new(p);
        let d = Density::p_power(p).unwrap();
        let load = pdgap::fe::project_pw_constant(&m, |x| exact.load(x));
        let mut min = Vec::new();
        for space in [Space::P1, Space::Cr] {
            let prob = DiscreteProblem::new(&m, space, d, load.clone()).unwrap();
            let (_, rep) = newton(
                &prob,
                prob.lift(|x| exact.value(x)),
                &NewtonOptions::default(),
            )
            .unwrap();
            min.push(rep.energy);
        }
        assert!(min[1] <= min[0], "p={p}: CR {} vs P1 {}", min[1], min[0]);
    }
}

#[test]
fn quadratic_flow_reaches_linear_solve() {
    let m = Mesh::lshape(2);
    let d = Density::p_power(2.0).unwrap();
    for space in [Space::P1, Space::Cr] {
        let prob = DiscreteProblem::new(&m, space, d, vec![1.0; m.n_elements()]).unwrap();
        let direct = prob
            .linear_solve(&prob.lift(|_| 0.0), LinearSolver::Cholesky)
            .unwrap();
        let opts = FlowOptions {
            eps_stop: Some(1e-11),
            ..Default::default()
        };
        let (u, rep) = gradient_flow(&prob, prob.lift(|_| 0.0), &opts).unwrap();
        for (a, b) in u.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-9, "{space:?}: {a} vs {b}");
        }
        for w in rep.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0));
        }
        let (_, rep) = gradient_flow(&prob, direct, &opts).unwrap();
        assert_eq!(rep.iterations, 1);
    }
}

#[test]
fn optimal_design_flow_descends() {
    let m = Mesh::lshape(4);
    let d = Density::optimal_design(1.0, 2.0, 0.0145).unwrap();
    let prob = DiscreteProblem::new(&m, Space::Cr, d, vec![1.0; m.n_elements()]).unwrap();
    let (_, rep) = gradient_flow(&prob, prob.lift(|_| 0.0), &FlowOptions::default()).unwrap();
    assert!(rep.iterations > 1);
    for w in rep.energies.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0),
            "{} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn cg_and_cholesky_newton_agree() {
    let m = Mesh::lshape(4);
    let exact = SingularSolution::new(1.6);
    let d = Density::p_power(1.6).unwrap();
    let load = pdgap::fe::project_pw_constant(&m, |x| exact.load(x));
    let prob = DiscreteProblem::new(&m, Space::Cr, d, load).unwrap();
    let u0 = prob.lift(|x| exact.value(x));
    let (a, _) = newton(&prob, u0.clone(), &NewtonOptions::default()).unwrap();
    let opts = NewtonOptions {
        linear: CG,
        ..Default::default()
    };
    let (b, _) = newton(&prob, u0, &opts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-7);
    }
}
