//! The edge iterator with lookup tables must reproduce the cell loop with the
//! three-point mid-edge rule.

use subdiv_iga::assembly::{assemble_midedge, assemble_midedge_rhs, assemble_rhs, Assembler, Operator};
use subdiv_iga::harness::{generate_spherical_3_4, generate_spherical_5_12, generate_torus, Rhs, TORUS_DEFAULT};
use subdiv_iga::quadrature::{midedge_rule, CellRules};
use subdiv_iga::{ControlMesh, Point3};

fn meshes() -> Vec<(&'static str, ControlMesh)> {
    vec![
        ("torus", generate_torus(TORUS_DEFAULT).unwrap()),
        ("spherical-3-4", generate_spherical_3_4().subdivide()),
        ("spherical-5-12", generate_spherical_5_12().subdivide()),
    ]
}

#[test]
fn matrices_match_cell_loop() {
    let rules = CellRules::uniform(midedge_rule());
    for (name, mesh) in meshes() {
        let asm = Assembler::new(&mesh).unwrap();
        for op in [Operator::Mass, Operator::Laplace, Operator::BiLaplace] {
            let generic = asm.matrix(op, &rules).unwrap();
            let edges = assemble_midedge(&mesh, op).unwrap();
            assert!(edges.is_symmetric());
            let diff = generic.max_abs_diff(&edges);
            assert!(diff < 1e-12, "{name} {op:?}: {diff:e}");
        }
    }
}

#[test]
fn loads_match_cell_loop() {
    let rules = CellRules::uniform(midedge_rule());
    for (name, mesh) in meshes() {
        let f = |y: &Point3| Rhs::Sphere.eval(y);
        let generic = assemble_rhs(&mesh, &rules, &f).unwrap();
        let edges = assemble_midedge_rhs(&mesh, &f).unwrap();
        let diff = generic.iter().zip(&edges).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{name}: {diff:e}");
    }
}

#[test]
fn edge_assembly_is_deterministic_across_modes() {
    let mesh = generate_spherical_5_12().subdivide_n(2);
    let parallel = Assembler::new(&mesh).unwrap().midedge_matrix(Operator::BiLaplace).unwrap();
    let sequential = Assembler::new(&mesh).unwrap().sequential().midedge_matrix(Operator::BiLaplace).unwrap();
    assert_eq!(parallel.values(), sequential.values());
}
