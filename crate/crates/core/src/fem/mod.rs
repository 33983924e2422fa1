//! P1 finite elements: assembly, Dirichlet and kernel-constrained Neumann solves,
//! interface fluxes and norms.

mod assembly;
mod solve;
mod sparse;

pub use assembly::{assemble_load, assemble_mass, assemble_stiffness, lumped_mass, TagFilter};
pub(crate) use assembly::{hat_gradients, selected_elements};
pub use solve::{
    solve_dirichlet, DirichletSolver, LuFactor, NeumannSolution, NeumannSolver, SolveStats, SpdFactor,
    DEFAULT_SOLVER_TOL,
};
pub(crate) use solve::{dot, norm2};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use sparse::check_len;

/// Norms of a nodal field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
    /// `sqrt(uᵀ K u)` for the coefficient-weighted stiffness.
    pub energy: f64,
}

/// `L²`, `H¹`-seminorm, `H¹` and energy norms from assembled matrices.
pub fn field_norms(u: &[f64], mass: &CsrMatrix, laplace: &CsrMatrix, energy: &CsrMatrix) -> Result<FieldNorms> {
    let l2sq = mass.bilinear(u, u)?.max(0.0);
    let semisq = laplace.bilinear(u, u)?.max(0.0);
    let esq = energy.bilinear(u, u)?.max(0.0);
    Ok(FieldNorms { l2: l2sq.sqrt(), h1_semi: semisq.sqrt(), h1: (l2sq + semisq).sqrt(), energy: esq.sqrt() })
}

/// Restriction of `K u` to `nodes`: the weak normal flux of a field that is
/// discrete-harmonic away from those nodes. Entries outside `nodes` are zero.
pub fn discrete_flux(background: &CsrMatrix, field: &[f64], nodes: &[usize]) -> Result<Vec<f64>> {
    let ku = background.matvec(field)?;
    let mut out = vec![0.0; ku.len()];
    for &n in nodes {
        out[n] = ku[n];
    }
    Ok(out)
}

/// Solves the small dense SPD system `A x = b` by Cholesky, failing if `A` is not SPD.
pub fn dense_spd_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let k = a.len();
    check_len(k, b.len())?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let m = faer::Mat::<f64>::from_fn(k, k, |i, j| a[i][j]);
    let llt = m
        .llt(faer::Side::Lower)
        .map_err(|e| Error::Internal(format!("coarse matrix is not positive definite: {e:?}")))?;
    let rhs = faer::Mat::<f64>::from_fn(k, 1, |i, _| b[i]);
    use faer::linalg::solvers::Solve;
    let x = llt.solve(&rhs);
    Ok((0..k).map(|i| x[(i, 0)]).collect())
}

/// True if the dense symmetric matrix admits a Cholesky factorization.
pub fn is_spd(a: &[Vec<f64>]) -> bool {
    let k = a.len();
    k == 0 || faer::Mat::<f64>::from_fn(k, k, |i, j| a[i][j]).llt(faer::Side::Lower).is_ok()
}

#[cfg(test)]
mod tests;
