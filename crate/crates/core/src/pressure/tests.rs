use super::*;
use crate::fem::{is_spd, DEFAULT_SOLVER_TOL};
use crate::geometry::{generate_mesh, GeometrySpec, Shape};

fn one_inclusion(h: f64) -> Mesh {
    generate_mesh(&GeometrySpec::new(Shape::disk(0.0, 0.0, 1.0), vec![Shape::disk(0.1, 0.05, 0.3)], h)).unwrap()
}

fn problem(source: ScalarFunction, boundary: ScalarFunction) -> PressureProblem {
    PressureProblem { source, boundary }
}

fn solver(mesh: Mesh, source: ScalarFunction, boundary: ScalarFunction) -> PressureSolver {
    PressureSolver::new(mesh, problem(source, boundary), DEFAULT_SOLVER_TOL).unwrap()
}

fn unit_source() -> PressureSolver {
    solver(one_inclusion(0.08), ScalarFunction::constant(1.0), ScalarFunction::zero())
}

#[test]
fn characteristic_obeys_maximum_principle_and_boundary_values() {
    let s = unit_source();
    let chi = &s.characteristics()[0];
    assert!(chi.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    for &d in &s.mesh().inclusion_closure_nodes()[0] {
        assert_eq!(chi[d], 1.0);
    }
    for d in s.mesh().outer_boundary_nodes() {
        assert_eq!(chi[d], 0.0);
    }
    assert!(s.gram()[0][0] > 0.0);
}

#[test]
fn far_apart_inclusions_have_weak_coupling() {
    let spec = GeometrySpec::new(
        Shape::rectangle(0.0, 0.0, 4.0, 1.0),
        vec![Shape::disk(0.5, 0.5, 0.2), Shape::disk(3.5, 0.5, 0.2)],
        0.05,
    );
    let s = solver(generate_mesh(&spec).unwrap(), ScalarFunction::constant(1.0), ScalarFunction::zero());
    let a = s.gram();
    assert!(is_spd(a));
    assert!((a[0][1] - a[1][0]).abs() <= 1e-13 * a[0][0]);
    assert!(a[0][1].abs() < 1e-3 * a[0][0], "coupling {} vs {}", a[0][1], a[0][0]);
}

#[test]
fn background_part_cases() {
    let mesh = one_inclusion(0.1);
    let zero = solver(mesh.clone(), ScalarFunction::zero(), ScalarFunction::zero());
    assert!(zero.compute_u00().unwrap().iter().all(|&v| v == 0.0));

    let c = solver(mesh.clone(), ScalarFunction::zero(), ScalarFunction::constant(2.0));
    let u00 = c.compute_u00().unwrap();
    for d in mesh.outer_boundary_nodes() {
        assert_eq!(u00[d], 2.0);
    }
    for &d in &mesh.inclusion_closure_nodes()[0] {
        assert_eq!(u00[d], 0.0);
    }

    let f = solver(mesh, ScalarFunction::constant(1.0), ScalarFunction::zero());
    assert!(f.compute_u00().unwrap().iter().all(|&v| v >= -1e-14));
}

#[test]
fn constant_boundary_data_gives_a_constant_series() {
    let s = solver(one_inclusion(0.1), ScalarFunction::zero(), ScalarFunction::constant(3.0));
    let series = s.expand(3).unwrap();
    assert!(series.terms[0].iter().all(|v| (v - 3.0).abs() < 1e-12));
    assert!((series.constants[0][0] - 3.0).abs() < 1e-12);
    for t in &series.terms[1..] {
        assert!(t.iter().all(|v| v.abs() < 1e-12));
    }
    let direct = s.solve_direct(1e3).unwrap();
    assert!(direct.iter().all(|v| (v - 3.0).abs() < 1e-12));
}

#[test]
fn leading_term_invariants() {
    let s = solver(one_inclusion(0.08), ScalarFunction::constant(1.0), ScalarFunction::X1PlusX2Squared);
    let (u0, c) = s.compute_u0().unwrap();
    assert!(s.inclusion_constancy(&u0) <= 1e-12);
    let d = s.mesh().inclusion_closure_nodes()[0][0];
    assert!((u0[d] - c[0]).abs() <= 1e-12);
    assert!(s.galerkin_residual(&u0).unwrap() <= 1e-10);
}

#[test]
fn terms_are_balanced() {
    let s = unit_source();
    let series = s.expand(5).unwrap();
    assert_eq!(series.terms.len(), 6);
    for (j, t) in series.terms.iter().enumerate().skip(1) {
        assert!(series.flux_residuals[j] <= 1e-9, "term {j}: {}", series.flux_residuals[j]);
        for d in s.mesh().outer_boundary_nodes() {
            assert_eq!(t[d], 0.0);
        }
    }
}

#[test]
fn terms_do_not_depend_on_the_contrast() {
    let a = unit_source().expand(3).unwrap();
    let b = unit_source().expand(3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unit_contrast_reduces_to_poisson() {
    let mesh = one_inclusion(0.1);
    let p = problem(ScalarFunction::constant(1.0), ScalarFunction::X1);
    let s = PressureSolver::new(mesh.clone(), p.clone(), DEFAULT_SOLVER_TOL).unwrap();
    let direct = s.solve_direct(1.0).unwrap();
    let plain = plain_solve(&mesh, &p, DEFAULT_SOLVER_TOL).unwrap();
    for (a, b) in direct.iter().zip(&plain) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(s.solve_direct(0.0).is_err());
}

#[test]
fn partial_sums_converge_geometrically() {
    let s = unit_source();
    let series = s.expand(8).unwrap();
    let rows = s.truncation_report(&series, &[10.0, 100.0], 8).unwrap();
    for eta in [10.0, 100.0] {
        let errs: Vec<f64> = rows.iter().filter(|r| r.eta == eta).map(|r| r.rel_error).collect();
        for w in errs.windows(2) {
            if w[0] > 1e-10 {
                assert!(w[1] / w[0] < 3.0 / eta, "eta {eta}: {errs:?}");
            }
        }
    }
    let needed = terms_needed(&rows, 1e-8);
    assert!(needed[0].terms.unwrap() >= needed[1].terms.unwrap());
    let strict = terms_needed(&rows, 0.0);
    assert!(strict[0].terms.is_none() && strict[0].floor > 0.0);
}

#[test]
fn energy_expansion_remainder_is_second_order() {
    let s = unit_source();
    let series = s.expand(1).unwrap();
    let coeffs = s.energy_coefficients(&series).unwrap();
    assert!(coeffs.orthogonality <= 1e-9, "{}", coeffs.orthogonality);
    let remainders: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&eta| {
            let u = s.solve_direct(eta).unwrap();
            (s.energy(eta, &u).unwrap() - coeffs.e0 - coeffs.e1 / eta).abs()
        })
        .collect();
    assert!(remainders[0] >= 50.0 * remainders[1], "{remainders:?}");
    assert!(remainders[1] >= 50.0 * remainders[2], "{remainders:?}");

    let zero = solver(one_inclusion(0.1), ScalarFunction::zero(), ScalarFunction::zero());
    let c = zero.energy_coefficients(&zero.expand(1).unwrap()).unwrap();
    assert_eq!((c.e0, c.e1), (0.0, 0.0));

    let g = solver(one_inclusion(0.1), ScalarFunction::constant(1.0), ScalarFunction::X1);
    assert!(matches!(g.energy_coefficients(&g.expand(1).unwrap()), Err(Error::Unsupported(_))));
}

#[test]
fn no_inclusions_returns_the_plain_solve() {
    let mesh = generate_mesh(&GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![], 0.1)).unwrap();
    let p = problem(ScalarFunction::constant(1.0), ScalarFunction::X1);
    let s = PressureSolver::new(mesh.clone(), p.clone(), DEFAULT_SOLVER_TOL).unwrap();
    let series = s.expand(4).unwrap();
    assert_eq!(series.terms.len(), 1);
    let plain = plain_solve(&mesh, &p, DEFAULT_SOLVER_TOL).unwrap();
    for (a, b) in series.terms[0].iter().zip(&plain) {
        assert!((a - b).abs() < 1e-12);
    }
}
