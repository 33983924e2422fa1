//! Expansion of the scalar high-contrast problem `-div(κ∇u) = f`, `u = g` on the outer
//! boundary, with `κ = 1` in the background and `κ = η` on every inclusion.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, assemble_stiffness, dot, lumped_mass, CsrMatrix, DirichletSolver,
};
use crate::functions::ScalarFunction;
use crate::geometry::Mesh;
use crate::series::{partial_sum, StiffEngine, StiffSystem};

/// Source and outer boundary data of a scalar problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureProblem {
    pub source: ScalarFunction,
    pub boundary: ScalarFunction,
}

/// Terms `u_0..u_J` with their balancing constants.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionSeries {
    pub terms: Vec<Vec<f64>>,
    /// `constants[j][m]` multiplies the characteristic field of inclusion `m + 1` in term `j`.
    pub constants: Vec<Vec<f64>>,
    /// Background part `u_{0,0}` of the leading term.
    pub background_part: Vec<f64>,
    /// Normalized flux-balance residual of each term (zero for `u_0`).
    pub flux_residuals: Vec<f64>,
    /// SHA-256 of the mesh and problem data the series was computed from.
    pub problem_hash: String,
}

impl ExpansionSeries {
    /// Highest term index `J`.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// `Σ_{j≤order} η^{-j} u_j`.
    pub fn partial_sum(&self, order: usize, eta: f64) -> Vec<f64> {
        let upto: Vec<&[f64]> = self.terms.iter().take(order + 1).map(Vec::as_slice).collect();
        partial_sum(&upto, eta)
    }
}

/// Relative error of one partial sum against the direct solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationRow {
    pub order: usize,
    pub eta: f64,
    pub rel_error: f64,
}

/// Smallest number of terms reaching a tolerance, or the error floor if none does.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermsNeeded {
    pub eta: f64,
    /// `J + 1` for the smallest order `J` with error ≤ tol; `None` if never reached.
    pub terms: Option<usize>,
    /// Smallest error observed over the computed orders.
    pub floor: f64,
}

/// Leading energy coefficients of `∫ κ|∇u_η|² ≈ E0 + E1/η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyCoefficients {
    /// Background energy of `u_0`.
    pub e0: f64,
    /// Inclusion energy of `u_1`.
    pub e1: f64,
    /// `|∫_{D_0} ∇u_0·∇u_1|` divided by the product of the two background seminorms.
    pub orthogonality: f64,
}

/// Assembled operators and the characteristic basis of one scalar problem.
pub struct PressureSolver {
    mesh: Mesh,
    problem: PressureProblem,
    engine: StiffEngine,
    load: Vec<f64>,
    boundary_values: Vec<f64>,
    mass: CsrMatrix,
    laplace: CsrMatrix,
}

impl PressureSolver {
    pub fn new(mesh: Mesh, problem: PressureProblem, tol: f64) -> Result<Self> {
        Self::with_basis(mesh, problem, None, tol)
    }

    /// Like [`PressureSolver::new`], reusing stored characteristic fields when given.
    pub fn with_basis(mesh: Mesh, problem: PressureProblem, basis: Option<Vec<Vec<f64>>>, tol: f64) -> Result<Self> {
        let n = mesh.num_nodes();
        let tags = mesh.num_inclusions + 1;
        let mut unit_background = vec![0.0; tags];
        unit_background[0] = 1.0;
        let mut unit_inclusions = vec![1.0; tags];
        unit_inclusions[0] = 0.0;
        let inclusion_tags: Vec<usize> = (1..tags).collect();
        let background = assemble_stiffness(&mesh, &unit_background, Some(&[0]))?;
        let inclusion = assemble_stiffness(&mesh, &unit_inclusions, Some(&inclusion_tags))?;
        let laplace = background.add_scaled(1.0, &inclusion)?;
        let mass = assemble_mass(&mesh, None)?;
        let load = assemble_load(&mesh, |p| problem.source.eval(p), None)?;

        let outer_dofs = mesh.outer_boundary_nodes();
        let mut boundary_values = vec![0.0; n];
        for &d in &outer_dofs {
            boundary_values[d] = problem.boundary.eval(mesh.nodes[d]);
        }
        let closures = mesh.inclusion_closure_nodes();
        let lumped = lumped_mass(&mesh, Some(&inclusion_tags))?;
        let weights: Vec<Vec<f64>> = closures.iter().map(|c| c.iter().map(|&d| lumped[d]).collect()).collect();
        let modes = closures.iter().map(|c| vec![vec![1.0; c.len()]]).collect();
        let system = StiffSystem { background, inclusion, outer_dofs, closures, modes, weights };
        let engine = StiffEngine::with_characteristics(system, basis, tol)?;
        Ok(Self { mesh, problem, engine, load, boundary_values, mass, laplace })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn problem(&self) -> &PressureProblem {
        &self.problem
    }

    pub fn engine(&self) -> &StiffEngine {
        &self.engine
    }

    /// Harmonic characteristic field of each inclusion.
    pub fn characteristics(&self) -> &[Vec<f64>] {
        self.engine.characteristics()
    }

    /// Background energy Gram matrix of the characteristic fields.
    pub fn gram(&self) -> &[Vec<f64>] {
        self.engine.gram()
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary_values
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Unit-coefficient stiffness over the whole domain.
    pub fn laplace(&self) -> &CsrMatrix {
        &self.laplace
    }

    /// `u_{0,0}`: background Dirichlet solve with zero data on every inclusion.
    pub fn compute_u00(&self) -> Result<Vec<f64>> {
        self.engine.background_part(&self.load, &self.boundary_values)
    }

    /// Leading term and its per-inclusion constants.
    pub fn compute_u0(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let lead = self.engine.leading_term(&self.load, &self.boundary_values)?;
        Ok((lead.term.field, lead.term.constants))
    }

    /// Appends the next term to `series`.
    pub fn next_term(&self, series: &mut ExpansionSeries) -> Result<()> {
        let current = series.terms.last().ok_or_else(|| Error::validation("series has no terms"))?;
        let load = (series.terms.len() == 1).then_some(self.load.as_slice());
        let term = self.engine.next_term(current, load)?;
        series.terms.push(term.field);
        series.constants.push(term.constants);
        series.flux_residuals.push(term.flux_residual);
        Ok(())
    }

    /// Terms `u_0..u_order`. Without inclusions only the plain solve `u_0` is returned.
    pub fn expand(&self, order: usize) -> Result<ExpansionSeries> {
        let count = if self.mesh.num_inclusions == 0 { 0 } else { order };
        let (lead, rest) = self.engine.expand(&self.load, &self.boundary_values, count)?;
        let mut series = ExpansionSeries {
            terms: vec![lead.term.field],
            constants: vec![lead.term.constants],
            background_part: lead.background_part,
            flux_residuals: vec![0.0],
            problem_hash: self.problem_hash(),
        };
        for t in rest {
            series.terms.push(t.field);
            series.constants.push(t.constants);
            series.flux_residuals.push(t.flux_residual);
        }
        Ok(series)
    }

    /// Full solve with coefficient `eta` on the inclusions.
    pub fn solve_direct(&self, eta: f64) -> Result<Vec<f64>> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::validation(format!("contrast must be positive and finite, got {eta}")));
        }
        self.engine.direct(eta, &self.load, &self.boundary_values)
    }

    /// `H¹` norm with unit coefficient.
    pub fn h1_norm(&self, u: &[f64]) -> Result<f64> {
        Ok((self.mass.bilinear(u, u)? + self.laplace.bilinear(u, u)?).max(0.0).sqrt())
    }

    /// `‖reference − approx‖_{H¹} / ‖reference‖_{H¹}`.
    pub fn relative_h1_error(&self, reference: &[f64], approx: &[f64]) -> Result<f64> {
        relative_error(reference, approx, |u| self.h1_norm(u))
    }

    /// Relative `H¹` errors of every partial sum of `series` for each contrast.
    pub fn truncation_report(&self, series: &ExpansionSeries, etas: &[f64], max_order: usize) -> Result<Vec<TruncationRow>> {
        let max_order = max_order.min(series.order());
        let mut rows = Vec::with_capacity(etas.len() * (max_order + 1));
        for &eta in etas {
            let direct = self.solve_direct(eta)?;
            for order in 0..=max_order {
                let rel_error = self.relative_h1_error(&direct, &series.partial_sum(order, eta))?;
                rows.push(TruncationRow { order, eta, rel_error });
            }
        }
        Ok(rows)
    }

    /// Energy coefficients for homogeneous boundary data.
    pub fn energy_coefficients(&self, series: &ExpansionSeries) -> Result<EnergyCoefficients> {
        if !self.problem.boundary.is_zero() {
            return Err(Error::Unsupported(
                "energy coefficients require zero boundary data".into(),
            ));
        }
        if series.terms.len() < 2 {
            return Err(Error::validation("energy coefficients need the terms u_0 and u_1"));
        }
        let (u0, u1) = (&series.terms[0], &series.terms[1]);
        let k0 = &self.engine.system().background;
        let k1 = &self.engine.system().inclusion;
        let e0 = k0.bilinear(u0, u0)?;
        let e1 = k1.bilinear(u1, u1)?;
        let cross = k0.bilinear(u0, u1)?;
        let scale = (e0 * k0.bilinear(u1, u1)?).sqrt();
        let orthogonality = if scale > 0.0 { cross.abs() / scale } else { cross.abs() };
        Ok(EnergyCoefficients { e0, e1, orthogonality })
    }

    /// `uᵀ K_η u` for the full coefficient.
    pub fn energy(&self, eta: f64, u: &[f64]) -> Result<f64> {
        let k0 = &self.engine.system().background;
        let k1 = &self.engine.system().inclusion;
        Ok(k0.bilinear(u, u)? + eta * k1.bilinear(u, u)?)
    }

    /// Largest deviation of `u` from its first closure value on any inclusion, relative
    /// to `max |u|`.
    pub fn inclusion_constancy(&self, u: &[f64]) -> f64 {
        let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let worst = self
            .engine
            .system()
            .closures
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.iter().map(|&d| (u[d] - u[c[0]]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if scale > 0.0 { worst / scale } else { worst }
    }

    /// Galerkin residual `max_ℓ |χ_ℓᵀ(K_bg u_0 − F)|` relative to `max_ℓ |χ_ℓᵀF|` (or 1).
    pub fn galerkin_residual(&self, u0: &[f64]) -> Result<f64> {
        let ku = self.engine.system().background.matvec(u0)?;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for chi in self.characteristics() {
            let target = dot(chi, &self.load);
            worst = worst.max((dot(chi, &ku) - target).abs());
            scale = scale.max(target.abs()).max(dot(chi, &ku).abs());
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }

    fn problem_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.mesh.to_json().as_bytes());
        h.update(serde_json::to_vec(&self.problem).unwrap_or_default());
        hex::encode(h.finalize())
    }
}

pub(crate) fn relative_error<F>(reference: &[f64], approx: &[f64], norm: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if reference.len() != approx.len() {
        return Err(Error::Dimension { expected: reference.len(), found: approx.len() });
    }
    let diff: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| a - b).collect();
    let denom = norm(reference)?;
    let num = norm(&diff)?;
    Ok(if denom > 0.0 { num / denom } else { num })
}

/// Minimal number of terms reaching `tol` for each contrast in `rows`.
pub fn terms_needed(rows: &[TruncationRow], tol: f64) -> Vec<TermsNeeded> {
    let mut etas: Vec<f64> = Vec::new();
    for r in rows {
        if !etas.contains(&r.eta) {
            etas.push(r.eta);
        }
    }
    etas.iter()
        .map(|&eta| {
            let mut of_eta: Vec<&TruncationRow> = rows.iter().filter(|r| r.eta == eta).collect();
            of_eta.sort_by_key(|r| r.order);
            let terms = of_eta.iter().find(|r| r.rel_error <= tol).map(|r| r.order + 1);
            let floor = of_eta.iter().map(|r| r.rel_error).fold(f64::INFINITY, f64::min);
            TermsNeeded { eta, terms, floor }
        })
        .collect()
}

/// Unit-coefficient Poisson solve on the whole mesh.
pub fn plain_solve(mesh: &Mesh, problem: &PressureProblem, tol: f64) -> Result<Vec<f64>> {
    let k = assemble_stiffness(mesh, &vec![1.0; mesh.num_inclusions + 1], None)?;
    let load = assemble_load(mesh, |p| problem.source.eval(p), None)?;
    let outer = mesh.outer_boundary_nodes();
    let mut values = vec![0.0; mesh.num_nodes()];
    for &d in &outer {
        values[d] = problem.boundary.eval(mesh.nodes[d]);
    }
    DirichletSolver::new(&k, &outer, tol)?.solve(&load, &values)
}

#[cfg(test)]
mod tests;
