//! Plane linear elasticity with one inclusion whose Young's modulus is either much
//! larger (stiff) or much smaller (soft) than the background's.
//!
//! Displacements are interleaved: the dofs of node `i` are `2i` and `2i + 1`.

mod assembly;
mod soft;
mod stiff;

pub use assembly::{
    assemble_elastic_stiffness, assemble_vector_load, componentwise, element_strain, rigid_body_modes,
    vector_norm_matrices,
};
pub use soft::{SoftSeries, SoftSolver};
pub use stiff::{ElasticSeries, StiffSolver};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::VectorFunction;
use crate::geometry::Mesh;

/// Poisson ratio of the (spatially constant) material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub nu: f64,
}

impl Material {
    pub fn new(nu: f64) -> Result<Self> {
        let m = Self { nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::validation(format!("Poisson ratio must lie in (0, 0.5), got {}", self.nu)));
        }
        Ok(())
    }

    /// `(λ̃, μ̃)` per unit Young's modulus: `ν / (2(1+ν)(1−2ν))` and `1 / (2(1+ν))`.
    pub fn lame(&self) -> (f64, f64) {
        let nu = self.nu;
        (nu / (2.0 * (1.0 + nu) * (1.0 - 2.0 * nu)), 1.0 / (2.0 * (1.0 + nu)))
    }
}

/// Body force, outer boundary displacement and material of an elastic problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElasticProblem {
    pub body_force: VectorFunction,
    pub boundary: VectorFunction,
    pub material: Material,
}

/// Operators shared by the stiff and soft expansions.
pub(crate) struct ElasticOperators {
    pub background: crate::fem::CsrMatrix,
    pub inclusion: crate::fem::CsrMatrix,
    pub mass: crate::fem::CsrMatrix,
    pub laplace: crate::fem::CsrMatrix,
    pub load: Vec<f64>,
    pub outer_dofs: Vec<usize>,
    pub boundary_values: Vec<f64>,
    /// Interleaved dofs of the inclusion closure.
    pub closure_dofs: Vec<usize>,
    /// Interleaved dofs of the inclusion interface.
    pub interface_dofs: Vec<usize>,
}

impl ElasticOperators {
    pub fn new(mesh: &Mesh, problem: &ElasticProblem) -> Result<Self> {
        if mesh.num_inclusions != 1 {
            return Err(Error::Unsupported(format!(
                "elastic expansions handle exactly one inclusion, mesh has {}",
                mesh.num_inclusions
            )));
        }
        let background = assemble_elastic_stiffness(mesh, &[1.0, 0.0], problem.material, Some(&[0]))?;
        let inclusion = assemble_elastic_stiffness(mesh, &[0.0, 1.0], problem.material, Some(&[1]))?;
        let (mass, laplace) = vector_norm_matrices(mesh)?;
        let load = assemble_vector_load(mesh, &problem.body_force, None)?;
        let outer_nodes = mesh.outer_boundary_nodes();
        let mut boundary_values = vec![0.0; 2 * mesh.num_nodes()];
        for &n in &outer_nodes {
            let g = problem.boundary.eval(mesh.nodes[n]);
            boundary_values[2 * n] = g[0];
            boundary_values[2 * n + 1] = g[1];
        }
        let interleave = |nodes: &[usize]| nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect::<Vec<_>>();
        Ok(Self {
            background,
            inclusion,
            mass,
            laplace,
            load,
            outer_dofs: interleave(&outer_nodes),
            boundary_values,
            closure_dofs: interleave(&mesh.inclusion_closure_nodes()[0]),
            interface_dofs: interleave(&mesh.interface_nodes(1)),
        })
    }

    pub fn h1_norm(&self, u: &[f64]) -> Result<f64> {
        Ok((self.mass.bilinear(u, u)? + self.laplace.bilinear(u, u)?).max(0.0).sqrt())
    }
}

/// Largest strain component of `u` over all elements.
pub fn max_strain(mesh: &Mesh, u: &[f64]) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| element_strain(mesh, t, u).iter().fold(0.0f64, |m, e| m.max(e.abs())))
        .fold(0.0, f64::max)
}
