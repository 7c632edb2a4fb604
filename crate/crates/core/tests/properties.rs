use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

use proptest::prelude::*;
use semilinear::driver::{dorfler_mark, interplay_test};
use semilinear::estimator::element_indicators;
use semilinear::fespace::{discrete_residual, energy_norm, prolongate, Linearization};
use semilinear::linsolve::{factor_solve, SparseMatrix};
use semilinear::newton::{newton_step, StepSizeStrategy, TransformSolver};
use semilinear::{Action, FeFunction, Mesh, Problem};

/// Refines `mesh` `rounds` times, marking elements selected by `picks`.
fn refine_randomly(mut mesh: Mesh, picks: &[usize], rounds: usize) -> Mesh {
    for r in 0..rounds {
        let ne = mesh.num_elements();
        let marked: Vec<usize> = picks.iter().skip(r).step_by(rounds.max(1)).map(|p| p % ne).collect();
        mesh = mesh.refine(&marked).unwrap().0;
    }
    mesh
}

/// Gaussian elimination with partial pivoting on a dense copy.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_preserves_measure_and_conformity(picks in prop::collection::vec(0usize..10_000, 1..40), rounds in 1usize..6, n in 1usize..5) {
        let mesh = refine_randomly(Mesh::uniform_square(n).unwrap(), &picks, rounds);
        prop_assert!((mesh.total_measure() - 1.0).abs() < 1e-12);
        // Every edge lies on the boundary or is shared by exactly two triangles.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for el in mesh.elements() {
            for (a, b) in [(el[0], el[1]), (el[1], el[2]), (el[2], el[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let interior = edges.values().filter(|&&c| c == 2).count();
        prop_assert!(edges.values().all(|&c| c == 1 || c == 2));
        prop_assert_eq!(interior, mesh.interior_facets().len());
        // Euler characteristic of a disc.
        prop_assert_eq!(mesh.num_nodes() as i64 - edges.len() as i64 + mesh.num_elements() as i64, 1);
        for (&(a, b), &c) in &edges {
            if c == 1 {
                prop_assert!(mesh.is_boundary(a) && mesh.is_boundary(b));
            }
        }
    }

    #[test]
    fn newest_vertex_bisection_keeps_angles(picks in prop::collection::vec(0usize..10_000, 1..40), rounds in 1usize..7) {
        let mesh = refine_randomly(Mesh::uniform_square(2).unwrap(), &picks, rounds);
        prop_assert!(mesh.min_angle().unwrap() >= FRAC_PI_4 - 1e-12);
    }

    #[test]
    fn interval_refinement_preserves_length(picks in prop::collection::vec(0usize..10_000, 1..30), rounds in 1usize..8) {
        let mesh = refine_randomly(Mesh::uniform_interval(-1.0, 2.0, 3).unwrap(), &picks, rounds);
        prop_assert!((mesh.total_measure() - 3.0).abs() < 1e-12);
        prop_assert_eq!(mesh.num_elements(), mesh.num_nodes() - 1);
    }

    #[test]
    fn prolongation_reproduces_affine_functions(picks in prop::collection::vec(0usize..10_000, 1..20), a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let mesh = refine_randomly(Mesh::uniform_square(2).unwrap(), &picks, 2);
        let marked: Vec<usize> = picks.iter().map(|p| p % mesh.num_elements()).collect();
        let (fine, map) = mesh.refine(&marked).unwrap();
        let g = |p: [f64; 2]| a + b * p[0] + c * p[1];
        let v = prolongate(&FeFunction::interpolate(&mesh, g), &map).unwrap();
        let exact = FeFunction::interpolate(&fine, g);
        prop_assert!(v.add_scaled(-1.0, &exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn prolongation_keeps_energy_norm(values in prop::collection::vec(-2.0f64..2.0, 9), picks in prop::collection::vec(0usize..100, 1..8)) {
        let mesh = Mesh::uniform_interval(0.0, 1.0, 8).unwrap();
        let v = FeFunction::new(&mesh, values).unwrap();
        let marked: Vec<usize> = picks.iter().map(|p| p % 8).collect();
        let (fine, map) = mesh.refine(&marked).unwrap();
        let w = prolongate(&v, &map).unwrap();
        let (a, b) = (energy_norm(&mesh, &v, 0.1).unwrap(), energy_norm(&fine, &w, 0.1).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn sparse_solver_matches_dense_oracle(n in 1usize..50, seed in prop::collection::vec(-1.0f64..1.0, 2500), rhs in prop::collection::vec(-1.0f64..1.0, 50)) {
        let mut entries = Vec::new();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let v = seed[i * 50 + j];
                // Sparse pattern plus a dominant, sign-varying diagonal.
                if i == j || v.abs() > 0.7 {
                    let v = if i == j { v.signum() * (n as f64 + 1.0) + v } else { v };
                    entries.push((i, j, v));
                    dense[i][j] = v;
                }
            }
        }
        let a = SparseMatrix::from_triplets(n, entries).unwrap();
        let x = factor_solve(&a, &rhs[..n]).unwrap();
        let y = dense_solve(dense, rhs[..n].to_vec());
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((xi - yi).abs() <= 1e-10 * (1.0 + yi.abs()));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(values in prop::collection::vec(-1.0f64..1.0, 25)) {
        let p = Problem::ginzburg_landau(0.05).unwrap();
        let mesh = Mesh::uniform_square(4).unwrap();
        let mut values = values;
        for node in mesh.boundary_nodes() {
            values[node] = 0.0;
        }
        let u = FeFunction::new(&mesh, values.clone()).unwrap();
        let jac = Linearization::assemble(&mesh, &p, &u).unwrap().matrix;
        let scale = jac.max_abs();
        for (j, &node) in mesh.free_nodes().iter().enumerate() {
            let h = 1e-5;
            let mut plus = values.clone();
            let mut minus = values.clone();
            plus[node] += h;
            minus[node] -= h;
            let rp = discrete_residual(&mesh, &p, &FeFunction::new(&mesh, plus).unwrap()).unwrap();
            let rm = discrete_residual(&mesh, &p, &FeFunction::new(&mesh, minus).unwrap()).unwrap();
            for i in 0..rp.len() {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                prop_assert!((jac.get(i, j) - fd).abs() <= 1e-6 * scale);
            }
        }
        prop_assert!(jac.asymmetry() < 1e-14);
    }

    #[test]
    fn step_sizes_lie_in_unit_interval(values in prop::collection::vec(-1.0f64..1.5, 21), tau in 1e-3f64..1.0, improved in any::<bool>()) {
        let p = Problem::fisher(0.02, 0.0, 0.0).unwrap();
        let mesh = Mesh::uniform_interval(0.0, 1.0, 20).unwrap();
        let mut values = values;
        values[0] = 0.0;
        values[20] = 0.0;
        let u = FeFunction::new(&mesh, values).unwrap();
        let strategy = if improved { StepSizeStrategy::improved(tau, 0.5) } else { StepSizeStrategy::simple(tau) }.unwrap();
        let solver = TransformSolver::new(&mesh, &p);
        if let Ok(state) = newton_step(&solver, &strategy, &u) {
            prop_assert!(state.step > 0.0 && state.step <= 1.0);
        }
    }

    #[test]
    fn indicators_are_consistent(values in prop::collection::vec(-1.0f64..1.0, 13), next in prop::collection::vec(-1.0f64..1.0, 13), t in 0.01f64..1.0) {
        let p = Problem::fisher(1e-3, 0.0, 0.0).unwrap();
        let mesh = Mesh::uniform_interval(0.0, 1.0, 12).unwrap();
        let (mut a, mut b) = (values, next);
        for v in [&mut a, &mut b] {
            v[0] = 0.0;
            v[12] = 0.0;
        }
        let (u, w) = (FeFunction::new(&mesh, a).unwrap(), FeFunction::new(&mesh, b).unwrap());
        let ind = element_indicators(&mesh, &p, &u, &w, t).unwrap();
        prop_assert!(ind.eta_sq.iter().chain(&ind.delta_sq).chain(&ind.oscillation_sq).all(|&v| v >= 0.0));
        prop_assert_eq!(ind.total_sq, ind.delta_omega_sq + ind.eta_sum_sq);
        prop_assert_eq!(ind.delta_omega_sq, ind.delta_sq.iter().sum::<f64>());
    }

    #[test]
    fn dorfler_set_is_minimal(eta in prop::collection::vec(0.0f64..10.0, 1..60), theta in 0.05f64..0.95) {
        let marked = dorfler_mark(&eta, theta);
        let total: f64 = eta.iter().sum();
        let sum: f64 = marked.iter().map(|&e| eta[e]).sum();
        prop_assert!(marked.windows(2).all(|w| w[0] < w[1]));
        if total > 0.0 {
            prop_assert!(sum >= theta * total);
            let smallest = marked.iter().map(|&e| eta[e]).fold(f64::INFINITY, f64::min);
            prop_assert!(sum - smallest < theta * total);
            let unmarked_max = (0..eta.len()).filter(|e| !marked.contains(e)).map(|e| eta[e]).fold(0.0, f64::max);
            prop_assert!(unmarked_max <= smallest);
        }
    }

    #[test]
    fn interplay_is_monotone(d in 0.0f64..1.0, s in 0.0f64..1.0, theta in 0.01f64..2.0) {
        let action = interplay_test(d, s, theta);
        prop_assert_eq!(action == Action::Refine, d <= theta * s);
        if action == Action::Refine {
            prop_assert_eq!(interplay_test(d * 0.5, s, theta), Action::Refine);
        }
    }
}
