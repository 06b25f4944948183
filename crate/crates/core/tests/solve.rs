use subdiv_iga::assembly::{Assembler, Operator, SparseSymMatrix};
use subdiv_iga::harness::{
    consistency_study, error_rules, generate_spherical_3_4, generate_spherical_5_12, generate_torus, Problem, Rhs,
    TORUS_DEFAULT,
};
use subdiv_iga::quadrature::RuleSpec;
use subdiv_iga::solve::{
    consistency_error, dense_generalized_eigenvalues, eigen_solve, solve_zero_mean, ConstrainedSystem,
};
use subdiv_iga::{ControlMesh, Error};

fn meshes() -> Vec<(&'static str, ControlMesh)> {
    vec![
        ("torus", generate_torus(TORUS_DEFAULT).unwrap()),
        ("spherical-3-4", generate_spherical_3_4().subdivide_n(2)),
        ("spherical-5-12", generate_spherical_5_12().subdivide()),
    ]
}

fn system(mesh: &ControlMesh, op: Operator) -> (SparseSymMatrix, Vec<f64>) {
    let asm = Assembler::new(mesh).unwrap();
    let rules = RuleSpec::Gauss.cell_rules(6).unwrap();
    (asm.matrix(op, &rules).unwrap(), asm.rhs(&error_rules(), &|_| 1.0).unwrap())
}

#[test]
fn zero_load_gives_zero_solution() {
    let (s, m) = system(&meshes()[0].1, Operator::Laplace);
    let out = solve_zero_mean(ConstrainedSystem { s: &s, b: &vec![0.0; m.len()], m: &m }, 1e-10, 1000).unwrap();
    assert_eq!(out.iterations, 0);
    assert!(out.u.iter().all(|&x| x == 0.0));
}

#[test]
fn manufactured_coefficients_are_recovered() {
    for (name, mesh) in meshes() {
        for op in [Operator::Laplace, Operator::BiLaplace] {
            let (s, m) = system(&mesh, op);
            let n = m.len();
            let mut w: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
            subdiv_iga::solve::project_zero_mean(&mut w, &m);
            let b = s.mul_vec(&w);
            let u = solve_zero_mean(ConstrainedSystem { s: &s, b: &b, m: &m }, 1e-13, 100_000).unwrap().u;
            let err = u.iter().zip(&w).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(err < 1e-7, "{name} {op:?}: max error {err:e}");
        }
    }
}

#[test]
fn unattainable_tolerance_is_a_solver_failure() {
    let (s, m) = system(&meshes()[2].1, Operator::BiLaplace);
    let b: Vec<f64> = (0..m.len()).map(|i| (i as f64).sin()).collect();
    let err = solve_zero_mean(ConstrainedSystem { s: &s, b: &b, m: &m }, 1e-10, 3).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }), "{err}");
    assert!(err.is_solver_failure());
}

#[test]
fn eigenpairs_match_dense_solver() {
    for (name, mesh) in meshes() {
        assert!(mesh.num_vertices() <= 600);
        let (s, _) = system(&mesh, Operator::Laplace);
        let (mass, _) = system(&mesh, Operator::Mass);
        let dense = dense_generalized_eigenvalues(&s, &mass).unwrap();
        assert!(dense[0].abs() < 1e-8 * dense[1], "{name}: constant mode {}", dense[0]);
        let k = 8;
        let res = eigen_solve(&s, &mass, k, 1e-10).unwrap();
        for (i, (a, b)) in res.values.iter().zip(&dense[1..=k]).enumerate() {
            assert!((a - b).abs() < 1e-6 * b, "{name} eigenvalue {i}: {a} vs {b}");
        }
        for (i, v) in res.vectors.iter().enumerate() {
            let sv = s.mul_vec(v);
            let mv = mass.mul_vec(v);
            let r: f64 = sv.iter().zip(&mv).map(|(a, b)| (a - res.values[i] * b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = sv.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(r <= 1e-6 * norm, "{name} pair {i}: residual {r:e}");
            for (j, w) in res.vectors.iter().enumerate() {
                let g = mass.bilinear(v, w);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-8, "{name}: M-inner product ({i},{j}) = {g}");
            }
        }
    }
}

#[test]
fn consistency_vanishes_for_identical_forms() {
    let mesh = generate_spherical_5_12().subdivide();
    let (s, m) = system(&mesh, Operator::Laplace);
    let u: Vec<f64> = (0..m.len()).map(|i| (i as f64 * 0.3).cos()).collect();
    assert_eq!(consistency_error(&s, &s, &u, &m, 1e-10).unwrap(), 0.0);
}

#[test]
fn midedge_consistency_decreases_under_refinement() {
    let base = generate_torus(TORUS_DEFAULT).unwrap();
    for problem in [Problem::Laplace, Problem::BiLaplace] {
        let report = consistency_study(&base, problem, &[RuleSpec::MidEdge], &[0, 1, 2], Rhs::Torus, 1e-11).unwrap();
        let e = &report.errors[0];
        assert!(e[0] > e[1] && e[1] > e[2], "{problem}: {e:?}");
    }
}
