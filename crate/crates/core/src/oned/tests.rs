use super::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn values(u: &ExactPiecewiseLinear) -> Vec<BigRational> {
    u.values.clone()
}

#[test]
fn closed_form_matches_the_worked_example() {
    let u = exact_solution_1d(&Interval1DSpec::worked_example(10.0)).unwrap();
    // breakpoints -2, -1, 1, 2
    assert_eq!(u.eval(&q(0, 1)), q(2, 1));
    assert_eq!(u.eval(&q(1, 1)), q(24, 11));
    for eta in [2.0, 7.0, 1e6] {
        let u = exact_solution_1d(&Interval1DSpec::worked_example(eta)).unwrap();
        assert_eq!(u.eval(&q(0, 1)), q(2, 1));
    }
    let far = exact_solution_1d(&Interval1DSpec::worked_example(1e12)).unwrap().to_f64();
    for (x, limit) in [(-1.5, 1.0), (0.3, 2.0), (1.5, 3.0)] {
        assert!((far.eval(x) - limit).abs() < 1e-10);
    }
}

#[test]
fn worked_example_terms() {
    let s = expansion_terms_1d(&Interval1DSpec::worked_example(10.0), 4).unwrap();
    // values at -2, -1, 1, 2 of {2(x+2), 2, 2x}, {-2(x+2), 2x, -2(x-2)}, {2(x+2), -2x, 2(x-2)}
    assert_eq!(values(&s.terms[0]), vec![q(0, 1), q(2, 1), q(2, 1), q(4, 1)]);
    assert_eq!(values(&s.terms[1]), vec![q(0, 1), q(-2, 1), q(2, 1), q(0, 1)]);
    assert_eq!(values(&s.terms[2]), vec![q(0, 1), q(2, 1), q(-2, 1), q(0, 1)]);
    assert_eq!(s.constants[0], q(2, 1));
    assert!(s.constants[1].is_zero() && s.constants[2].is_zero());
    for j in 2..4 {
        let neg: Vec<BigRational> = s.terms[j].values.iter().map(|v| -v).collect();
        assert_eq!(s.terms[j + 1].values, neg);
    }
    assert!(s.compatibility.iter().all(Zero::is_zero));
}

#[test]
fn equal_end_values_give_a_constant() {
    let spec = Interval1DSpec { left: 1.5, right: 1.5, ..Interval1DSpec::worked_example(5.0) };
    let s = expansion_terms_1d(&spec, 3).unwrap();
    assert!(s.terms[0].values.iter().all(|v| *v == q(3, 2)));
    assert!(s.terms[1..].iter().all(|t| t.values.iter().all(Zero::is_zero)));
}

#[test]
fn partial_sum_errors_shrink_by_the_contrast() {
    let rows = compare_1d(&Interval1DSpec::worked_example(10.0), 10, &[2.0, 10.0, 100.0]).unwrap();
    let first = rows.iter().find(|r| r.eta == 10.0 && r.order == 0).unwrap();
    assert!((first.max_error - 2.0 / 11.0).abs() < 1e-15);
    for r in rows.iter().filter(|r| r.order > 0) {
        assert!((r.ratio - 1.0 / r.eta).abs() <= 1e-12, "{r:?}");
    }
}

#[test]
fn exact_path_rejects_sources_and_bad_intervals() {
    let spec = Interval1DSpec::centered(0.3, 10.0, ScalarFunction::constant(1.0));
    assert!(matches!(exact_solution_1d(&spec), Err(Error::Unsupported(_))));
    let bad = Interval1DSpec { p: 1.5, ..Interval1DSpec::worked_example(10.0) };
    assert!(bad.validate().is_err());
    let weak = Interval1DSpec::worked_example(0.5);
    assert!(weak.validate().is_err());
}

#[test]
fn grid_path_reproduces_the_exact_terms() {
    let spec = Interval1DSpec::worked_example(10.0);
    let grid = grid_with_breakpoints(&spec, 8);
    let g = expand_on_grid(&spec, &grid, 4).unwrap();
    let e = expansion_terms_1d(&spec, 4).unwrap();
    for j in 0..=4 {
        let exact_term = e.terms[j].to_f64();
        for (x, v) in grid.iter().zip(&g.terms[j]) {
            assert!((exact_term.eval(*x) - v).abs() <= 1e-12, "term {j} at {x}");
        }
    }
    let closed = exact_solution_1d(&spec).unwrap().to_f64();
    for (x, v) in grid.iter().zip(&g.direct) {
        assert!((closed.eval(*x) - v).abs() <= 1e-12);
    }
    assert!((g.constants[0] - 2.0).abs() < 1e-12 && g.constants[1].abs() < 1e-12);
}

#[test]
fn grid_leading_constant_with_a_source() {
    // f = 1 on (-1, 1), zero end values: c_0 = (1 - δ)/2 · ∫ f χ = (1 - δ²)/2
    for delta in [0.2, 0.5] {
        let spec = Interval1DSpec::centered(delta, 10.0, ScalarFunction::constant(1.0));
        let grid = grid_with_breakpoints(&spec, 20);
        let g = expand_on_grid(&spec, &grid, 3).unwrap();
        assert!((g.constants[0] - (1.0 - delta * delta) / 2.0).abs() < 1e-12, "{}", g.constants[0]);
        let mut prev = f64::INFINITY;
        for order in 0..=3 {
            let s = g.partial_sum(order, 10.0);
            let err = s.iter().zip(&g.direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < prev || prev < 1e-13, "order {order}: {err} after {prev}");
            prev = err;
        }
    }
}

#[test]
fn piecewise_evaluation() {
    let u = PiecewiseLinear1D { breakpoints: vec![0.0, 1.0, 3.0], values: vec![0.0, 2.0, 0.0] };
    assert_eq!(u.eval(0.5), 1.0);
    assert_eq!(u.eval(2.0), 1.0);
    assert_eq!(u.eval(-1.0), 0.0);
    assert_eq!(u.eval(3.0), 0.0);
}
