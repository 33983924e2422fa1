//! One-dimensional bar with a single high-conductivity segment.
//!
//! With zero source every term of the expansion is piecewise linear, so the exact
//! path carries breakpoint values as rationals and the oracles hold without rounding.
//! A P1 grid path handles general sources through the shared stiff-inclusion engine.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, DEFAULT_SOLVER_TOL};
use crate::functions::ScalarFunction;
use crate::series::{partial_sum, StiffEngine, StiffSystem};

/// Bar `(a, b)` with conductivity `eta` on `(p, q)` and 1 elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval1DSpec {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub eta: f64,
    /// Source as a function of `x1`.
    #[serde(default = "ScalarFunction::zero")]
    pub source: ScalarFunction,
    pub left: f64,
    pub right: f64,
}

impl Interval1DSpec {
    /// Bar `(-2, 2)` with inclusion `(-1, 1)`, `u(-2) = 0`, `u(2) = 4` and no source.
    pub fn worked_example(eta: f64) -> Self {
        Self { a: -2.0, b: 2.0, p: -1.0, q: 1.0, eta, source: ScalarFunction::zero(), left: 0.0, right: 4.0 }
    }

    /// Bar `(-1, 1)` with inclusion `(-half_width, half_width)` and zero end values.
    pub fn centered(half_width: f64, eta: f64, source: ScalarFunction) -> Self {
        Self { a: -1.0, b: 1.0, p: -half_width, q: half_width, eta, source, left: 0.0, right: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.p, self.q, self.eta, self.left, self.right];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("interval data must be finite"));
        }
        if !(self.a < self.p && self.p < self.q && self.q < self.b) {
            return Err(Error::validation(format!(
                "need a < p < q < b, got {} {} {} {}",
                self.a, self.p, self.q, self.b
            )));
        }
        if self.eta <= 1.0 {
            return Err(Error::validation(format!("contrast must exceed 1, got {}", self.eta)));
        }
        Ok(())
    }
}

/// Continuous piecewise-linear function given by its breakpoint values.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear1D {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear1D {
    /// Linear interpolation; constant extrapolation outside the breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if x <= self.breakpoints[0] {
            return self.values[0];
        }
        if x >= self.breakpoints[n - 1] {
            return self.values[n - 1];
        }
        let i = self.breakpoints.partition_point(|&b| b <= x).max(1) - 1;
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Exact piecewise-linear function with rational breakpoints and values.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPiecewiseLinear {
    pub breakpoints: Vec<BigRational>,
    pub values: Vec<BigRational>,
}

impl ExactPiecewiseLinear {
    pub fn to_f64(&self) -> PiecewiseLinear1D {
        PiecewiseLinear1D { breakpoints: self.breakpoints.iter().map(to_f64).collect(), values: self.values.iter().map(to_f64).collect() }
    }

    /// Slope on each piece.
    pub fn slopes(&self) -> Vec<BigRational> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (&v[1] - &v[0]) / (&x[1] - &x[0]))
            .collect()
    }

    /// Value at a breakpoint-aligned or interior point, exactly.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        let n = self.breakpoints.len();
        if x <= &self.breakpoints[0] {
            return self.values[0].clone();
        }
        for i in 0..n - 1 {
            if x <= &self.breakpoints[i + 1] {
                let t = (x - &self.breakpoints[i]) / (&self.breakpoints[i + 1] - &self.breakpoints[i]);
                return &self.values[i] + t * (&self.values[i + 1] - &self.values[i]);
            }
        }
        self.values[n - 1].clone()
    }

    fn combine(&self, other: &Self, scale: &BigRational) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + scale * b).collect();
        Self { breakpoints: self.breakpoints.clone(), values }
    }
}

/// Exact terms `u_0..u_J` and balancing constants for a source-free bar.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSeries1D {
    pub terms: Vec<ExactPiecewiseLinear>,
    /// Value of each term on the inclusion's midpoint after balancing; for `u_0` the
    /// constant inclusion value.
    pub constants: Vec<BigRational>,
    /// Net flux into the inclusion left by each term before the next step; zero
    /// exactly when the balancing constant was chosen correctly.
    pub compatibility: Vec<BigRational>,
}

struct Breaks {
    a: BigRational,
    p: BigRational,
    q: BigRational,
    b: BigRational,
}

impl Breaks {
    fn of(spec: &Interval1DSpec) -> Result<Self> {
        Ok(Self { a: exact(spec.a)?, p: exact(spec.p)?, q: exact(spec.q)?, b: exact(spec.b)? })
    }

    fn points(&self) -> Vec<BigRational> {
        vec![self.a.clone(), self.p.clone(), self.q.clone(), self.b.clone()]
    }
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::validation(format!("{x} is not finite")))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn require_no_source(spec: &Interval1DSpec) -> Result<()> {
    if !spec.source.is_zero() {
        return Err(Error::Unsupported("the exact path needs a zero source; use the grid path".into()));
    }
    Ok(())
}

/// Closed-form solution `u(x) = u(a) + α ∫_a^x 1/κ` for a source-free bar.
pub fn exact_solution_1d(spec: &Interval1DSpec) -> Result<ExactPiecewiseLinear> {
    spec.validate()?;
    require_no_source(spec)?;
    let br = Breaks::of(spec)?;
    let eta = exact(spec.eta)?;
    let (left, right) = (exact(spec.left)?, exact(spec.right)?);
    let resistances = [&br.p - &br.a, (&br.q - &br.p) / &eta, &br.b - &br.q];
    let total: BigRational = resistances.iter().fold(BigRational::zero(), |s, r| s + r);
    let alpha = (&right - &left) / total;
    let mut values = vec![left.clone()];
    let mut acc = left;
    for r in &resistances {
        acc += &alpha * r;
        values.push(acc.clone());
    }
    Ok(ExactPiecewiseLinear { breakpoints: br.points(), values })
}

/// Constant `c` making the outer pieces' slopes agree when the inclusion carries
/// `tilde + c`, with end values `left` and `right`.
fn balance(br: &Breaks, tilde_p: &BigRational, tilde_q: &BigRational, left: &BigRational, right: &BigRational) -> BigRational {
    let wl = (&br.p - &br.a).recip();
    let wr = (&br.b - &br.q).recip();
    // (tilde_p + c - left) wl = (right - tilde_q - c) wr
    (right * &wr + left * &wl - tilde_p * &wl - tilde_q * &wr) / (wl + wr)
}

fn outer_slopes(u: &ExactPiecewiseLinear) -> (BigRational, BigRational) {
    let s = u.slopes();
    (s[0].clone(), s[2].clone())
}

/// Exact terms `u_0..u_order` of a source-free bar.
pub fn expansion_terms_1d(spec: &Interval1DSpec, order: usize) -> Result<ExactSeries1D> {
    spec.validate()?;
    require_no_source(spec)?;
    let br = Breaks::of(spec)?;
    let (left, right) = (exact(spec.left)?, exact(spec.right)?);
    let zero = BigRational::zero();
    let two = BigRational::from_integer(BigInt::from(2));
    let mid = (&br.p + &br.q) / &two;

    let c0 = balance(&br, &zero, &zero, &left, &right);
    let u0 = ExactPiecewiseLinear { breakpoints: br.points(), values: vec![left, c0.clone(), c0.clone(), right] };
    let mut terms = vec![u0];
    let mut constants = vec![c0];
    let mut compatibility = Vec::new();
    for _ in 0..order {
        let prev = terms.last().expect("at least u_0");
        let (sl, sr) = outer_slopes(prev);
        // net flux into the inclusion; the Neumann step needs it to vanish
        let net = &sr - &sl;
        compatibility.push(net.clone());
        if !net.is_zero() {
            return Err(Error::Internal(format!("inclusion flux does not balance: {}", to_f64(&net))));
        }
        // flux continuity: the next term's inclusion slope equals the outer slope
        let tilde_p = &sl * (&br.p - &mid);
        let tilde_q = &sl * (&br.q - &mid);
        let c = balance(&br, &tilde_p, &tilde_q, &zero, &zero);
        let values = vec![zero.clone(), &tilde_p + &c, &tilde_q + &c, zero.clone()];
        terms.push(ExactPiecewiseLinear { breakpoints: br.points(), values });
        constants.push(c);
    }
    let last = terms.last().expect("at least u_0");
    let (sl, sr) = outer_slopes(last);
    compatibility.push(&sr - &sl);
    Ok(ExactSeries1D { terms, constants, compatibility })
}

/// Exact partial sum `Σ_{j≤order} η^{-j} u_j`.
pub fn exact_partial_sum(series: &ExactSeries1D, order: usize, eta: &BigRational) -> ExactPiecewiseLinear {
    let inv = eta.recip();
    let mut acc = series.terms[0].clone();
    let mut weight = BigRational::one();
    for t in series.terms.iter().take(order + 1).skip(1) {
        weight = &weight * &inv;
        acc = acc.combine(t, &weight);
    }
    acc
}

/// Error of one partial sum against the closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Error1D {
    pub eta: f64,
    pub order: usize,
    /// Maximum pointwise error, attained at a breakpoint.
    pub max_error: f64,
    /// `H¹` seminorm of the error.
    pub h1_error: f64,
    /// `max_error(order) / max_error(order - 1)`; `NaN` for order 0.
    pub ratio: f64,
}

/// Errors of the partial sums against the exact solution for each contrast.
pub fn compare_1d(spec: &Interval1DSpec, max_order: usize, etas: &[f64]) -> Result<Vec<Error1D>> {
    let mut rows = Vec::new();
    for &eta in etas {
        let at = Interval1DSpec { eta, ..spec.clone() };
        let exact_u = exact_solution_1d(&at)?;
        let series = expansion_terms_1d(&at, max_order + 1)?;
        let eta_q = exact(eta)?;
        let mut prev: Option<BigRational> = None;
        for order in 0..=max_order {
            let approx = exact_partial_sum(&series, order, &eta_q);
            let diff = exact_u.combine(&approx, &-BigRational::one());
            let max_err = diff.values.iter().map(|v| v.abs()).max().unwrap_or_else(BigRational::zero);
            let h1_sq = diff
                .slopes()
                .iter()
                .zip(diff.breakpoints.windows(2))
                .fold(BigRational::zero(), |s, (g, x)| s + g * g * (&x[1] - &x[0]));
            let ratio = match &prev {
                Some(p) if !p.is_zero() => to_f64(&(&max_err / p)),
                _ => f64::NAN,
            };
            rows.push(Error1D { eta, order, max_error: to_f64(&max_err), h1_error: to_f64(&h1_sq).sqrt(), ratio });
            prev = Some(max_err);
        }
    }
    Ok(rows)
}

/// Expansion computed with P1 elements on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSeries1D {
    pub grid: Vec<f64>,
    pub terms: Vec<Vec<f64>>,
    /// Inclusion balancing constant of each term.
    pub constants: Vec<f64>,
    pub direct: Vec<f64>,
}

impl GridSeries1D {
    pub fn partial_sum(&self, order: usize, eta: f64) -> Vec<f64> {
        let upto: Vec<&[f64]> = self.terms.iter().take(order + 1).map(Vec::as_slice).collect();
        partial_sum(&upto, eta)
    }

    pub fn term(&self, j: usize) -> PiecewiseLinear1D {
        PiecewiseLinear1D { breakpoints: self.grid.clone(), values: self.terms[j].clone() }
    }
}

/// Uniform grid with `cells_per_unit` cells per unit length in every piece, so that
/// `p` and `q` are nodes.
pub fn grid_with_breakpoints(spec: &Interval1DSpec, cells_per_unit: usize) -> Vec<f64> {
    let pieces = [(spec.a, spec.p), (spec.p, spec.q), (spec.q, spec.b)];
    let mut grid = vec![spec.a];
    for (x0, x1) in pieces {
        let cells = ((x1 - x0) * cells_per_unit as f64).ceil().max(1.0) as usize;
        for i in 1..=cells {
            grid.push(if i == cells { x1 } else { x0 + (x1 - x0) * i as f64 / cells as f64 });
        }
    }
    grid
}

/// Grid expansion to `order` plus the direct solve at `spec.eta`.
pub fn expand_on_grid(spec: &Interval1DSpec, grid: &[f64], order: usize) -> Result<GridSeries1D> {
    spec.validate()?;
    let n = grid.len();
    if n < 4 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("grid must be strictly increasing with at least 4 nodes"));
    }
    let on_grid = |x: f64| grid.contains(&x);
    if grid[0] != spec.a || grid[n - 1] != spec.b || !on_grid(spec.p) || !on_grid(spec.q) {
        return Err(Error::validation("grid must contain a, p, q and b as nodes"));
    }
    let inside = |i: usize| grid[i] >= spec.p && grid[i + 1] <= spec.q;
    let mut bg = Vec::new();
    let mut inc = Vec::new();
    let mut load = vec![0.0; n];
    let mut lumped = vec![0.0; n];
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        let k = 1.0 / h;
        let target = if inside(i) { &mut inc } else { &mut bg };
        target.extend([(i, i, k), (i, i + 1, -k), (i + 1, i, -k), (i + 1, i + 1, k)]);
        // Simpson's rule: exact for the quadratic products of a linear source and a hat
        let f = |x: f64| spec.source.eval([x, 0.0]);
        let (fl, fm, fr) = (f(grid[i]), f(0.5 * (grid[i] + grid[i + 1])), f(grid[i + 1]));
        load[i] += h / 6.0 * (fl + 2.0 * fm);
        load[i + 1] += h / 6.0 * (2.0 * fm + fr);
        if inside(i) {
            lumped[i] += 0.5 * h;
            lumped[i + 1] += 0.5 * h;
        }
    }
    let closure: Vec<usize> = (0..n).filter(|&i| grid[i] >= spec.p && grid[i] <= spec.q).collect();
    let weights = closure.iter().map(|&i| lumped[i]).collect();
    let system = StiffSystem {
        background: CsrMatrix::from_triplets(n, bg),
        inclusion: CsrMatrix::from_triplets(n, inc),
        outer_dofs: vec![0, n - 1],
        modes: vec![vec![vec![1.0; closure.len()]]],
        closures: vec![closure],
        weights: vec![weights],
    };
    let engine = StiffEngine::new(system, DEFAULT_SOLVER_TOL)?;
    let mut outer = vec![0.0; n];
    outer[0] = spec.left;
    outer[n - 1] = spec.right;
    let (lead, rest) = engine.expand(&load, &outer, order)?;
    let mut terms = vec![lead.term.field];
    let mut constants = vec![lead.term.constants[0]];
    for t in rest {
        terms.push(t.field);
        constants.push(t.constants[0]);
    }
    let direct = engine.direct(spec.eta, &load, &outer)?;
    Ok(GridSeries1D { grid: grid.to_vec(), terms, constants, direct })
}

#[cfg(test)]
mod tests;
