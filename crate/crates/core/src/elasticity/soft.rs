use crate::error::{Error, Result};
use crate::fem::DirichletSolver;
use crate::geometry::Mesh;
use crate::pressure::relative_error;

use super::{ElasticOperators, ElasticProblem};

/// Terms `u_{-1}, u_0, …, u_J` of the soft-inclusion expansion `u = Σ ε^j u_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftSeries {
    /// `terms[0]` is `u_{-1}`.
    pub terms: Vec<Vec<f64>>,
}

impl SoftSeries {
    /// Highest power `J`.
    pub fn order(&self) -> i64 {
        self.terms.len() as i64 - 2
    }

    /// `Σ_{j=-1}^{order} ε^j u_j`.
    pub fn partial_sum(&self, order: i64, eps: f64) -> Vec<f64> {
        let n = self.terms.first().map_or(0, Vec::len);
        let mut acc = vec![0.0; n];
        let count = (order + 2).clamp(0, self.terms.len() as i64) as usize;
        for (k, t) in self.terms.iter().take(count).enumerate() {
            let w = eps.powi(k as i32 - 1);
            for (a, v) in acc.iter_mut().zip(t) {
                *a += w * v;
            }
        }
        acc
    }
}

/// Expansion for a soft inclusion: Young's modulus `ε` on the inclusion, 1 elsewhere.
///
/// `u_{-1}` carries the body force inside the inclusion with zero trace. Every later
/// term solves a background problem driven by the inclusion's traction on the
/// interface and is then extended into the inclusion harmonically.
pub struct SoftSolver {
    mesh: Mesh,
    ops: ElasticOperators,
    /// Inclusion operator with everything but the inclusion interior fixed.
    inclusion_solver: DirichletSolver,
    /// Background operator with the outer boundary and inclusion interior fixed.
    background_solver: DirichletSolver,
    interior_dofs: Vec<usize>,
    tol: f64,
}

impl SoftSolver {
    pub fn new(mesh: Mesh, problem: &ElasticProblem, tol: f64) -> Result<Self> {
        let ops = ElasticOperators::new(&mesh, problem)?;
        let n = 2 * mesh.num_nodes();
        let mut is_interface = vec![false; n];
        for &d in &ops.interface_dofs {
            is_interface[d] = true;
        }
        let interior_dofs: Vec<usize> = ops.closure_dofs.iter().copied().filter(|&d| !is_interface[d]).collect();
        if interior_dofs.is_empty() {
            return Err(Error::Resolution("inclusion has no interior nodes".into()));
        }
        let mut is_interior = vec![false; n];
        for &d in &interior_dofs {
            is_interior[d] = true;
        }
        let fixed_outside: Vec<usize> = (0..n).filter(|&d| !is_interior[d]).collect();
        let inclusion_solver = DirichletSolver::new(&ops.inclusion, &fixed_outside, tol)?;
        let mut bg_fixed: Vec<usize> = ops.outer_dofs.iter().chain(&interior_dofs).copied().collect();
        bg_fixed.sort_unstable();
        let background_solver = DirichletSolver::new(&ops.background, &bg_fixed, tol)?;
        Ok(Self { mesh, ops, inclusion_solver, background_solver, interior_dofs, tol })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// `u_{-1}`, then `u_0..u_order`.
    pub fn expand(&self, order: usize) -> Result<SoftSeries> {
        let n = self.ops.load.len();
        let zeros = vec![0.0; n];
        let mut interior_load = vec![0.0; n];
        for &d in &self.interior_dofs {
            interior_load[d] = self.ops.load[d];
        }
        let u_minus = self.inclusion_solver.solve(&interior_load, &zeros)?;
        let mut terms = vec![u_minus];
        for j in 0..=order {
            let prev = terms.last().expect("u_{-1} present");
            let traction = self.ops.inclusion.matvec(prev)?;
            let mut rhs: Vec<f64> = traction.iter().map(|t| -t).collect();
            let mut outer = zeros.clone();
            if j == 0 {
                for (r, f) in rhs.iter_mut().zip(&self.ops.load) {
                    *r += f;
                }
                outer.clone_from(&self.ops.boundary_values);
            }
            let mut u = self.background_solver.solve(&rhs, &outer)?;
            // the interior was pinned at zero; fill it with the harmonic extension
            for &d in &self.interior_dofs {
                u[d] = 0.0;
            }
            let inner = self.inclusion_solver.solve(&zeros, &u)?;
            for &d in &self.interior_dofs {
                u[d] = inner[d];
            }
            terms.push(u);
        }
        Ok(SoftSeries { terms })
    }

    pub fn solve_direct(&self, eps: f64) -> Result<Vec<f64>> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::validation(format!("softness must be positive and finite, got {eps}")));
        }
        let matrix = self.ops.background.add_scaled(eps, &self.ops.inclusion)?;
        DirichletSolver::new(&matrix, &self.ops.outer_dofs, self.tol)?.solve(&self.ops.load, &self.ops.boundary_values)
    }

    pub fn relative_h1_error(&self, reference: &[f64], approx: &[f64]) -> Result<f64> {
        relative_error(reference, approx, |u| self.ops.h1_norm(u))
    }

    /// Relative errors of the partial sums `J = -1..=order` at softness `eps`.
    pub fn errors(&self, series: &SoftSeries, eps: f64) -> Result<Vec<f64>> {
        let direct = self.solve_direct(eps)?;
        (-1..=series.order()).map(|j| self.relative_h1_error(&direct, &series.partial_sum(j, eps))).collect()
    }
}
