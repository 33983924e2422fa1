use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};

use super::sparse::{check_len, CsrMatrix};
use crate::error::{Error, Result};

/// Default relative residual tolerance for linear solves.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Maximum number of iterative-refinement sweeps after the direct solve.
const REFINEMENT_STEPS: usize = 3;

/// Accuracy diagnostics of one solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    /// `‖b - A x‖₂ / ‖b‖₂` on the free rows.
    pub relative_residual: f64,
    /// Normwise backward error `‖b - A x‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
    pub backward_error: f64,
}

/// Sparse Cholesky factorization of an SPD matrix with a residual-checked solve.
pub struct SpdFactor {
    matrix: CsrMatrix,
    llt: Llt<usize, f64>,
    norm_inf: f64,
    tol: f64,
}

impl SpdFactor {
    pub fn new(matrix: CsrMatrix, tol: f64) -> Result<Self> {
        let llt = matrix
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::solver(format!("Cholesky factorization failed: {e:?}")))?;
        let norm_inf = matrix.norm_inf();
        Ok(Self { matrix, llt, norm_inf, tol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Solves `A x = b`, refining until the relative residual meets the tolerance.
    /// When conditioning prevents that, a backward error below the tolerance is
    /// accepted instead.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.dim();
        check_len(n, b.len())?;
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            return Ok((vec![0.0; n], SolveStats::default()));
        }
        let mut x = self.raw_solve(b);
        let mut stats = self.stats(&x, b, b_norm)?;
        for _ in 0..REFINEMENT_STEPS {
            if stats.relative_residual <= 0.01 * self.tol {
                break;
            }
            let ax = self.matrix.matvec(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.raw_solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let cand_stats = self.stats(&candidate, b, b_norm)?;
            if cand_stats.relative_residual >= stats.relative_residual {
                break;
            }
            x = candidate;
            stats = cand_stats;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::solver("solution contains non-finite values"));
        }
        if stats.relative_residual > self.tol && stats.backward_error > self.tol {
            return Err(Error::solver(format!(
                "residual check failed: relative residual {:.3e}, backward error {:.3e}, tolerance {:.1e}",
                stats.relative_residual, stats.backward_error, self.tol
            )));
        }
        Ok((x, stats))
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    fn stats(&self, x: &[f64], b: &[f64], b_norm: f64) -> Result<SolveStats> {
        residual_stats(&self.matrix, self.norm_inf, x, b, b_norm)
    }
}

/// Sparse LU factorization of a general square matrix with a residual-checked solve.
pub struct LuFactor {
    matrix: CsrMatrix,
    lu: Lu<usize, f64>,
    norm_inf: f64,
    tol: f64,
}

impl LuFactor {
    pub fn new(matrix: CsrMatrix, tol: f64) -> Result<Self> {
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::solver(format!("LU factorization failed: {e:?}")))?;
        let norm_inf = matrix.norm_inf();
        Ok(Self { matrix, lu, norm_inf, tol })
    }

    /// Solves `A x = b` with iterative refinement and the same acceptance rule as
    /// [`SpdFactor::solve`].
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.matrix.dim();
        check_len(n, b.len())?;
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            return Ok((vec![0.0; n], SolveStats::default()));
        }
        let raw = |r: &[f64]| {
            let mut rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
            self.lu.solve_in_place(rhs.as_mut());
            (0..r.len()).map(|i| rhs[(i, 0)]).collect::<Vec<f64>>()
        };
        let mut x = raw(b);
        let mut stats = residual_stats(&self.matrix, self.norm_inf, &x, b, b_norm)?;
        for _ in 0..REFINEMENT_STEPS {
            if stats.relative_residual <= 0.01 * self.tol {
                break;
            }
            let ax = self.matrix.matvec(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let candidate: Vec<f64> = x.iter().zip(raw(&r)).map(|(a, d)| a + d).collect();
            let cand_stats = residual_stats(&self.matrix, self.norm_inf, &candidate, b, b_norm)?;
            if cand_stats.relative_residual >= stats.relative_residual {
                break;
            }
            x = candidate;
            stats = cand_stats;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::solver("solution contains non-finite values"));
        }
        if stats.relative_residual > self.tol && stats.backward_error > self.tol {
            return Err(Error::solver(format!(
                "residual check failed: relative residual {:.3e}, backward error {:.3e}, tolerance {:.1e}",
                stats.relative_residual, stats.backward_error, self.tol
            )));
        }
        Ok((x, stats))
    }
}

fn residual_stats(matrix: &CsrMatrix, norm_inf: f64, x: &[f64], b: &[f64], b_norm: f64) -> Result<SolveStats> {
    let ax = matrix.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let r_inf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b_inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SolveStats { relative_residual: norm2(&r) / b_norm, backward_error: r_inf / (norm_inf * x_inf + b_inf) })
}

/// Solver for `K u = load` with prescribed values on a fixed dof set, by elimination.
/// The reduced matrix is factored once and reused.
pub struct DirichletSolver {
    matrix: CsrMatrix,
    free: Vec<usize>,
    is_fixed: Vec<bool>,
    factor: Option<SpdFactor>,
}

impl DirichletSolver {
    pub fn new(matrix: &CsrMatrix, fixed: &[usize], tol: f64) -> Result<Self> {
        let n = matrix.dim();
        let mut is_fixed = vec![false; n];
        for &d in fixed {
            if d >= n {
                return Err(Error::validation(format!("fixed dof {d} outside a system of size {n}")));
            }
            is_fixed[d] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        if fixed.is_empty() && n > 0 {
            return Err(Error::solver("no fixed dofs: the reduced system is singular"));
        }
        let factor = if free.is_empty() {
            None
        } else {
            Some(SpdFactor::new(matrix.restrict(&free), tol)?)
        };
        Ok(Self { matrix: matrix.clone(), free, is_fixed, factor })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.is_fixed[dof]
    }

    /// Solves with `load` on free rows; fixed dofs take their values from `fixed_values`
    /// (entries at free dofs are ignored).
    pub fn solve(&self, load: &[f64], fixed_values: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_stats(load, fixed_values).map(|(u, _)| u)
    }

    pub fn solve_with_stats(&self, load: &[f64], fixed_values: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = self.dim();
        check_len(n, load.len())?;
        check_len(n, fixed_values.len())?;
        let mut u: Vec<f64> = (0..n).map(|i| if self.is_fixed[i] { fixed_values[i] } else { 0.0 }).collect();
        let Some(factor) = &self.factor else {
            return Ok((u, SolveStats::default()));
        };
        let coupling = self.matrix.matvec(&u)?;
        let rhs: Vec<f64> = self.free.iter().map(|&i| load[i] - coupling[i]).collect();
        let (uf, stats) = factor.solve(&rhs)?;
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = uf[k];
        }
        Ok((u, stats))
    }
}

/// One-shot Dirichlet solve.
pub fn solve_dirichlet(
    matrix: &CsrMatrix,
    load: &[f64],
    boundary_nodes: &[usize],
    boundary_values: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    check_len(boundary_nodes.len(), boundary_values.len())?;
    let mut fixed = vec![0.0; matrix.dim()];
    for (&d, &v) in boundary_nodes.iter().zip(boundary_values) {
        if d >= fixed.len() {
            return Err(Error::validation(format!("boundary node {d} out of range")));
        }
        fixed[d] = v;
    }
    DirichletSolver::new(matrix, boundary_nodes, tol)?.solve(load, &fixed)
}

/// Result of a kernel-constrained Neumann solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NeumannSolution {
    pub u: Vec<f64>,
    /// Multipliers `λ` with `K u + C λ = rhs`.
    pub multipliers: Vec<f64>,
    /// `‖C λ‖ / ‖rhs‖`: the part of the load that the operator cannot balance.
    pub compatibility_defect: f64,
}

impl NeumannSolution {
    /// True when the load was compatible up to `tol`.
    pub fn is_compatible(&self, tol: f64) -> bool {
        self.compatibility_defect <= tol
    }
}

/// Solver for a singular symmetric `K` whose kernel is spanned by `kernel`, with the
/// solution constrained by `Cᵀu = 0`, `C = diag(weights) · kernel`.
///
/// Equivalent to the saddle-point system `[[K, C], [Cᵀ, 0]]`: the multipliers remove
/// the incompatible part of the load, the remaining system is solved with a few
/// kernel-fixing dofs pinned, and the result is projected onto the constraint.
pub struct NeumannSolver {
    kernel: Vec<Vec<f64>>,
    constraints: Vec<Vec<f64>>,
    /// `(Rᵀ C)⁻¹`, row-major.
    gram_inv: Vec<Vec<f64>>,
    inner: DirichletSolver,
    matrix: CsrMatrix,
    tol: f64,
}

impl NeumannSolver {
    pub fn new(matrix: &CsrMatrix, kernel: Vec<Vec<f64>>, weights: &[f64], tol: f64) -> Result<Self> {
        let n = matrix.dim();
        check_len(n, weights.len())?;
        for r in &kernel {
            check_len(n, r.len())?;
        }
        let constraints: Vec<Vec<f64>> = kernel
            .iter()
            .map(|r| r.iter().zip(weights).map(|(a, w)| a * w).collect())
            .collect();
        let k = kernel.len();
        let gram: Vec<Vec<f64>> = (0..k)
            .map(|a| (0..k).map(|b| dot(&kernel[a], &constraints[b])).collect())
            .collect();
        let gram_inv = invert_small(&gram)?;
        let pinned = pivot_rows(&kernel, n);
        let inner = DirichletSolver::new(matrix, &pinned, tol)?;
        Ok(Self { kernel, constraints, gram_inv, inner, matrix: matrix.clone(), tol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<NeumannSolution> {
        let n = self.dim();
        check_len(n, rhs.len())?;
        let k = self.kernel.len();
        let projected: Vec<f64> = self.kernel.iter().map(|r| dot(r, rhs)).collect();
        let multipliers: Vec<f64> = (0..k)
            .map(|a| (0..k).map(|b| self.gram_inv[a][b] * projected[b]).sum())
            .collect();
        let mut balanced = rhs.to_vec();
        for (c, &l) in self.constraints.iter().zip(&multipliers) {
            for (x, ci) in balanced.iter_mut().zip(c) {
                *x -= l * ci;
            }
        }
        let rhs_norm = norm2(rhs);
        let removed = rhs
            .iter()
            .zip(&balanced)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let compatibility_defect = if rhs_norm == 0.0 { 0.0 } else { removed / rhs_norm };

        let mut u = self.inner.solve(&balanced, &vec![0.0; n])?;
        // project onto Cᵀu = 0 along the kernel
        let cu: Vec<f64> = self.constraints.iter().map(|c| dot(c, &u)).collect();
        for a in 0..k {
            // (CᵀR)⁻¹ = ((RᵀC)⁻¹)ᵀ
            let coef: f64 = (0..k).map(|b| self.gram_inv[b][a] * cu[b]).sum();
            for (x, r) in u.iter_mut().zip(&self.kernel[a]) {
                *x -= coef * r;
            }
        }

        let ku = self.matrix.matvec(&u)?;
        if rhs_norm > 0.0 {
            let res = ku.iter().zip(&balanced).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scale = self.matrix.norm_inf() * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if res > self.tol * rhs_norm && res > self.tol * (scale + rhs_norm) {
                return Err(Error::solver(format!(
                    "constrained Neumann residual {:.3e} exceeds tolerance",
                    res / rhs_norm
                )));
            }
        }
        Ok(NeumannSolution { u, multipliers, compatibility_defect })
    }

    /// Constraint vectors `C`, one per kernel mode.
    pub fn constraints(&self) -> &[Vec<f64>] {
        &self.constraints
    }
}

/// Rows of the `n`-by-`k` matrix with columns `basis` that form a well-conditioned
/// `k`-by-`k` block (greedy column-pivoted QR of the transpose).
fn pivot_rows(basis: &[Vec<f64>], n: usize) -> Vec<usize> {
    let k = basis.len();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| basis.iter().map(|b| b[i]).collect()).collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let (best, _) = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, dot(r, r)))
            .fold((usize::MAX, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best == usize::MAX {
            break;
        }
        let norm = dot(&rows[best], &rows[best]).sqrt();
        let q: Vec<f64> = rows[best].iter().map(|v| v / norm).collect();
        for r in rows.iter_mut() {
            let p = dot(r, &q);
            for (x, qi) in r.iter_mut().zip(&q) {
                *x -= p * qi;
            }
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

/// Inverse of a small dense matrix via partially pivoted LU.
pub(crate) fn invert_small(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = a.len();
    let m = Mat::<f64>::from_fn(k, k, |i, j| a[i][j]);
    let lu = m.partial_piv_lu();
    let inv = lu.inverse();
    let out: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| inv[(i, j)]).collect()).collect();
    if out.iter().flatten().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::solver("singular constraint Gram matrix"))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
