use crate::error::{Error, Result};
use crate::fem::{lumped_mass, CsrMatrix};
use crate::geometry::Mesh;
use crate::pressure::relative_error;
use crate::series::{partial_sum, StiffEngine, StiffSystem};

use super::{rigid_body_modes, ElasticOperators, ElasticProblem};

/// Terms of the stiff-inclusion expansion `u = Σ η^{-j} u_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticSeries {
    pub terms: Vec<Vec<f64>>,
    /// `constants[j][ℓ]` multiplies the characteristic field of rigid mode `ℓ` in term `j`.
    pub constants: Vec<Vec<f64>>,
    pub background_part: Vec<f64>,
    pub flux_residuals: Vec<f64>,
    /// `‖u_j‖ / ‖ũ_j‖` in the unit energy: growth caused by the balancing step.
    pub balance_gains: Vec<f64>,
}

impl ElasticSeries {
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn partial_sum(&self, order: usize, eta: f64) -> Vec<f64> {
        let upto: Vec<&[f64]> = self.terms.iter().take(order + 1).map(Vec::as_slice).collect();
        partial_sum(&upto, eta)
    }
}

/// Expansion for a stiff inclusion: Young's modulus `η` on the inclusion, 1 elsewhere.
pub struct StiffSolver {
    mesh: Mesh,
    ops: ElasticOperators,
    engine: StiffEngine,
}

impl StiffSolver {
    pub fn new(mesh: Mesh, problem: &ElasticProblem, tol: f64) -> Result<Self> {
        Self::with_basis(mesh, problem, None, tol)
    }

    /// Like [`StiffSolver::new`], reusing stored characteristic fields when given.
    pub fn with_basis(mesh: Mesh, problem: &ElasticProblem, basis: Option<Vec<Vec<f64>>>, tol: f64) -> Result<Self> {
        let ops = ElasticOperators::new(&mesh, problem)?;
        let closure_nodes = mesh.inclusion_closure_nodes()[0].clone();
        let points: Vec<_> = closure_nodes.iter().map(|&n| mesh.nodes[n]).collect();
        let lumped = lumped_mass(&mesh, Some(&[1]))?;
        let weights: Vec<f64> = closure_nodes.iter().flat_map(|&n| [lumped[n], lumped[n]]).collect();
        let system = StiffSystem {
            background: ops.background.clone(),
            inclusion: ops.inclusion.clone(),
            outer_dofs: ops.outer_dofs.clone(),
            closures: vec![ops.closure_dofs.clone()],
            modes: vec![rigid_body_modes(&points)],
            weights: vec![weights],
        };
        let engine = StiffEngine::with_characteristics(system, basis, tol)?;
        Ok(Self { mesh, ops, engine })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn engine(&self) -> &StiffEngine {
        &self.engine
    }

    /// Harmonic extensions of the three rigid body motions.
    pub fn characteristics(&self) -> &[Vec<f64>] {
        self.engine.characteristics()
    }

    /// 3×3 background energy Gram matrix of the characteristic fields.
    pub fn gram(&self) -> &[Vec<f64>] {
        self.engine.gram()
    }

    pub fn background_stiffness(&self) -> &CsrMatrix {
        &self.ops.background
    }

    pub fn inclusion_stiffness(&self) -> &CsrMatrix {
        &self.ops.inclusion
    }

    /// `(u_0, u_{0,0}, rigid-mode constants)`.
    pub fn compute_u0(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let lead = self.engine.leading_term(&self.ops.load, &self.ops.boundary_values)?;
        Ok((lead.term.field, lead.background_part, lead.term.constants))
    }

    pub fn expand(&self, order: usize) -> Result<ElasticSeries> {
        let (lead, rest) = self.engine.expand(&self.ops.load, &self.ops.boundary_values, order)?;
        let mut series = ElasticSeries {
            terms: vec![lead.term.field],
            constants: vec![lead.term.constants],
            background_part: lead.background_part,
            flux_residuals: vec![0.0],
            balance_gains: vec![1.0],
        };
        for t in rest {
            let norm = self.engine.energy_norm(&t.field)?;
            series.balance_gains.push(if t.extension_norm > 0.0 { norm / t.extension_norm } else { 1.0 });
            series.terms.push(t.field);
            series.constants.push(t.constants);
            series.flux_residuals.push(t.flux_residual);
        }
        Ok(series)
    }

    pub fn solve_direct(&self, eta: f64) -> Result<Vec<f64>> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::validation(format!("contrast must be positive and finite, got {eta}")));
        }
        self.engine.direct(eta, &self.ops.load, &self.ops.boundary_values)
    }

    pub fn relative_h1_error(&self, reference: &[f64], approx: &[f64]) -> Result<f64> {
        relative_error(reference, approx, |u| self.ops.h1_norm(u))
    }

    /// Relative errors `(order, error)` of the partial sums at contrast `eta`.
    pub fn errors(&self, series: &ElasticSeries, eta: f64) -> Result<Vec<f64>> {
        let direct = self.solve_direct(eta)?;
        (0..=series.order()).map(|j| self.relative_h1_error(&direct, &series.partial_sum(j, eta))).collect()
    }

    /// Distance of `u` on the inclusion closure from the span of the rigid body
    /// motions, relative to the size of `u` there.
    pub fn rigid_fit_residual(&self, u: &[f64]) -> Result<f64> {
        let nodes = &self.mesh.inclusion_closure_nodes()[0];
        let points: Vec<_> = nodes.iter().map(|&n| self.mesh.nodes[n]).collect();
        let modes = rigid_body_modes(&points);
        let local: Vec<f64> = self.ops.closure_dofs.iter().map(|&d| u[d]).collect();
        rigid_projection_residual(&modes, &local)
    }

    /// Largest `|⟨K_bg u, χ_ℓ⟩|` relative to the energy norms, over the rigid modes.
    pub fn compatibility_residual(&self, u: &[f64]) -> Result<f64> {
        self.engine.flux_residual(u)
    }

    pub fn interface_dofs(&self) -> &[usize] {
        &self.ops.interface_dofs
    }
}

/// Least-squares residual of `v` against the span of `modes`, relative to `‖v‖`.
pub(crate) fn rigid_projection_residual(modes: &[Vec<f64>], v: &[f64]) -> Result<f64> {
    use crate::fem::{dense_spd_solve, dot, norm2};
    let gram: Vec<Vec<f64>> = modes.iter().map(|a| modes.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = modes.iter().map(|a| dot(a, v)).collect();
    let coef = dense_spd_solve(&gram, &rhs)?;
    let mut res = v.to_vec();
    for (m, c) in modes.iter().zip(&coef) {
        for (r, x) in res.iter_mut().zip(m) {
            *r -= c * x;
        }
    }
    let scale = norm2(v);
    Ok(if scale > 0.0 { norm2(&res) / scale } else { 0.0 })
}
