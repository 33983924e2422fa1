use std::f64::consts::PI;

use super::*;
use crate::geometry::{generate_mesh, GeometrySpec, Mesh, Shape};

fn square(n: usize) -> Mesh {
    Mesh::structured_rectangle(0.0, 0.0, 1.0, 1.0, n, n)
}

fn laplace(mesh: &Mesh) -> CsrMatrix {
    assemble_stiffness(mesh, &vec![1.0; mesh.num_inclusions + 1], None).unwrap()
}

#[test]
fn linear_boundary_data_is_reproduced() {
    let mesh = square(6);
    let k = laplace(&mesh);
    let bnd = mesh.outer_boundary_nodes();
    let vals: Vec<f64> = bnd.iter().map(|&n| mesh.nodes[n][0]).collect();
    let u = solve_dirichlet(&k, &vec![0.0; mesh.num_nodes()], &bnd, &vals, DEFAULT_SOLVER_TOL).unwrap();
    for (p, v) in mesh.nodes.iter().zip(&u) {
        assert!((v - p[0]).abs() < 1e-13);
    }
    let consts = vec![2.5; bnd.len()];
    let c = solve_dirichlet(&k, &vec![0.0; mesh.num_nodes()], &bnd, &consts, DEFAULT_SOLVER_TOL).unwrap();
    assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-13));
}

fn manufactured_errors(n: usize) -> (f64, f64, f64) {
    let mesh = square(n);
    let k = laplace(&mesh);
    let m = assemble_mass(&mesh, None).unwrap();
    let exact = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
    let f = |p: [f64; 2]| 2.0 * PI * PI * exact(p);
    let load = assemble_load(&mesh, f, None).unwrap();
    let bnd = mesh.outer_boundary_nodes();
    let u = solve_dirichlet(&k, &load, &bnd, &vec![0.0; bnd.len()], DEFAULT_SOLVER_TOL).unwrap();
    let interp: Vec<f64> = mesh.nodes.iter().map(|&p| exact(p)).collect();
    let err: Vec<f64> = u.iter().zip(&interp).map(|(a, b)| a - b).collect();
    let norms = field_norms(&err, &m, &k, &k).unwrap();
    // energy error against the exact solution: |u|² - |u_h|² by Galerkin orthogonality
    let energy_err = (PI * PI / 2.0 - k.bilinear(&u, &u).unwrap()).max(0.0).sqrt();
    (norms.l2, norms.h1_semi, energy_err)
}

#[test]
fn manufactured_solution_converges() {
    let errs: Vec<(f64, f64, f64)> = [8, 16, 32, 64].iter().map(|&n| manufactured_errors(n)).collect();
    for w in errs.windows(2) {
        let l2_order = (w[0].0 / w[1].0).log2();
        let energy_order = (w[0].2 / w[1].2).log2();
        assert!(l2_order >= 1.9, "L2 order {l2_order}");
        assert!(energy_order >= 0.95, "energy order {energy_order}");
        assert!(w[1].2 <= w[0].2, "energy error increased under refinement");
    }
}

#[test]
fn interpolant_seminorm_approaches_exact_value() {
    let mesh = square(32);
    let k = laplace(&mesh);
    let u: Vec<f64> = mesh.nodes.iter().map(|p| (PI * p[0]).sin() * (PI * p[1]).sin()).collect();
    let semi2 = k.bilinear(&u, &u).unwrap();
    assert!((semi2 - PI * PI / 2.0).abs() < 0.02 * PI * PI / 2.0);
}

#[test]
fn norms_of_simple_fields() {
    let mesh = square(4);
    let k = laplace(&mesh);
    let m = assemble_mass(&mesh, None).unwrap();
    let ones = vec![1.0; mesh.num_nodes()];
    let n1 = field_norms(&ones, &m, &k, &k).unwrap();
    assert!((n1.l2 - 1.0).abs() < 1e-14 && n1.h1_semi < 1e-7);
    let x: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
    let nx = field_norms(&x, &m, &k, &k).unwrap();
    assert!((nx.h1_semi - 1.0).abs() < 1e-14);
    assert!(field_norms(&[1.0], &m, &k, &k).is_err());
}

#[test]
fn stiffness_is_positive_semidefinite() {
    let mesh = square(5);
    let k = laplace(&mesh);
    // a shifted Cholesky succeeds iff the smallest eigenvalue exceeds -shift
    let n = mesh.num_nodes();
    let shift = CsrMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1e-12 * k.max_abs())).collect());
    assert!(SpdFactor::new(k.add_scaled(1.0, &shift).unwrap(), 1e-10).is_ok());
}

fn one_inclusion_mesh() -> Mesh {
    generate_mesh(&GeometrySpec::new(Shape::disk(0.0, 0.0, 1.0), vec![Shape::disk(0.1, 0.0, 0.3)], 0.08)).unwrap()
}

fn inclusion_neumann(mesh: &Mesh) -> (NeumannSolver, Vec<usize>, CsrMatrix, Vec<f64>) {
    let closure = mesh.inclusion_closure_nodes()[0].clone();
    let k1 = assemble_stiffness(mesh, &[0.0, 1.0], Some(&[1])).unwrap().restrict(&closure);
    let lumped = lumped_mass(mesh, Some(&[1])).unwrap();
    let w: Vec<f64> = closure.iter().map(|&n| lumped[n]).collect();
    let solver = NeumannSolver::new(&k1, vec![vec![1.0; closure.len()]], &w, DEFAULT_SOLVER_TOL).unwrap();
    (solver, closure, k1, w)
}

#[test]
fn neumann_zero_rhs() {
    let mesh = one_inclusion_mesh();
    let (solver, closure, _, _) = inclusion_neumann(&mesh);
    let sol = solver.solve(&vec![0.0; closure.len()]).unwrap();
    assert!(sol.u.iter().all(|&v| v == 0.0));
    assert!(sol.multipliers.iter().all(|&v| v == 0.0));
}

#[test]
fn neumann_constant_source_is_fully_absorbed_by_the_multiplier() {
    let mesh = one_inclusion_mesh();
    let (solver, closure, k1, w) = inclusion_neumann(&mesh);
    let mass = assemble_mass(&mesh, Some(&[1])).unwrap().restrict(&closure);
    let rhs = mass.matvec(&vec![1.0; closure.len()]).unwrap();
    let sol = solver.solve(&rhs).unwrap();
    // lumped-mean zero
    assert!(dot(&w, &sol.u).abs() <= 1e-10 * norm2(&sol.u).max(1.0));
    // K u = rhs - C λ, and here rhs == C so λ == 1 and u == 0
    let ku = k1.matvec(&sol.u).unwrap();
    for i in 0..closure.len() {
        assert!((ku[i] - (rhs[i] - w[i] * sol.multipliers[0])).abs() < 1e-12);
    }
    assert!((sol.multipliers[0] - 1.0).abs() < 1e-12);
    assert!(!sol.is_compatible(1e-8));
}

#[test]
fn neumann_compatible_rhs() {
    let mesh = one_inclusion_mesh();
    let (solver, closure, k1, w) = inclusion_neumann(&mesh);
    // rhs = K v for a non-constant v is compatible
    let v: Vec<f64> = closure.iter().map(|&n| mesh.nodes[n][0] * mesh.nodes[n][1] + mesh.nodes[n][0]).collect();
    let rhs = k1.matvec(&v).unwrap();
    let sol = solver.solve(&rhs).unwrap();
    assert!(sol.is_compatible(1e-12));
    assert!(dot(&w, &sol.u).abs() <= 1e-10 * norm2(&sol.u));
    let ku = k1.matvec(&sol.u).unwrap();
    let res: f64 = ku.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(res <= 1e-10 * norm2(&rhs));
}

#[test]
fn flux_of_constant_vanishes_and_balances() {
    let mesh = one_inclusion_mesh();
    let k0 = assemble_stiffness(&mesh, &[1.0, 0.0], Some(&[0])).unwrap();
    let iface = mesh.interface_nodes(1);
    let outer = mesh.outer_boundary_nodes();
    let c = vec![3.0; mesh.num_nodes()];
    assert!(discrete_flux(&k0, &c, &iface).unwrap().iter().all(|v| v.abs() < 1e-12));

    // harmonic in the annulus: 1 on the interface, 0 outside
    let mut fixed = outer.clone();
    fixed.extend(mesh.inclusion_closure_nodes()[0].iter().copied());
    let mut vals = vec![0.0; mesh.num_nodes()];
    for &n in &mesh.inclusion_closure_nodes()[0] {
        vals[n] = 1.0;
    }
    let u = DirichletSolver::new(&k0, &fixed, DEFAULT_SOLVER_TOL).unwrap().solve(&vec![0.0; mesh.num_nodes()], &vals).unwrap();
    let inner: f64 = discrete_flux(&k0, &u, &iface).unwrap().iter().sum();
    let outer_sum: f64 = discrete_flux(&k0, &u, &outer).unwrap().iter().sum();
    assert!(inner > 0.0);
    assert!((inner + outer_sum).abs() < 1e-10 * inner);
}

#[test]
fn dense_helpers() {
    let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
    let x = dense_spd_solve(&a, &[1.0, 2.0]).unwrap();
    assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14 && (x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    assert!(is_spd(&a));
    assert!(!is_spd(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
    assert!(matches!(dense_spd_solve(&[vec![-1.0]], &[1.0]), Err(Error::Internal(_))));
}

#[test]
fn singular_system_is_a_solver_error() {
    let mesh = square(3);
    let k = laplace(&mesh);
    // pure Neumann Laplacian with an incompatible load has no solution
    let outcome = DirichletSolver::new(&k, &[], 1e-10)
        .and_then(|s| s.solve(&vec![1.0; mesh.num_nodes()], &vec![0.0; mesh.num_nodes()]));
    assert!(matches!(outcome, Err(Error::Solver(_))), "{:?}", outcome.err());
}
