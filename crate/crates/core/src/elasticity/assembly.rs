use rayon::prelude::*;

use crate::error::Result;
use crate::fem::{assemble_load, assemble_mass, assemble_stiffness, hat_gradients, selected_elements, CsrMatrix, TagFilter};
use crate::functions::VectorFunction;
use crate::geometry::{Mesh, Point};

use super::Material;

/// Symmetric strain `[ε_xx, ε_yy, ε_xy]` of a P1 displacement on triangle `t`.
/// `u` is interleaved: `(u_x, u_y)` of node `i` at `2i, 2i+1`.
pub fn element_strain(mesh: &Mesh, t: usize, u: &[f64]) -> [f64; 3] {
    let (g, _) = hat_gradients(mesh.triangle_points(t));
    let mut e = [0.0; 3];
    for (a, &n) in mesh.triangles[t].nodes.iter().enumerate() {
        let (ux, uy) = (u[2 * n], u[2 * n + 1]);
        e[0] += g[a][0] * ux;
        e[1] += g[a][1] * uy;
        e[2] += 0.5 * (g[a][1] * ux + g[a][0] * uy);
    }
    e
}

/// Stiffness of `∫ E (2μ̃ ε(u):ε(v) + λ̃ div u div v)` on interleaved dofs, with
/// Young's modulus `young` indexed by tag.
pub fn assemble_elastic_stiffness(mesh: &Mesh, young: &[f64], material: Material, filter: TagFilter) -> Result<CsrMatrix> {
    material.validate()?;
    if young.len() < mesh.num_inclusions + 1 {
        return Err(crate::Error::Dimension { expected: mesh.num_inclusions + 1, found: young.len() });
    }
    let (lambda, mu) = material.lame();
    let elements = selected_elements(mesh, filter)?;
    let blocks: Vec<[[f64; 6]; 6]> = elements
        .par_iter()
        .map(|&t| {
            let (g, area) = hat_gradients(mesh.triangle_points(t));
            let e = young[mesh.triangles[t].tag];
            // rows ε_xx, ε_yy, γ_xy = 2ε_xy
            let mut b = [[0.0; 6]; 3];
            for a in 0..3 {
                b[0][2 * a] = g[a][0];
                b[1][2 * a + 1] = g[a][1];
                b[2][2 * a] = g[a][1];
                b[2][2 * a + 1] = g[a][0];
            }
            let d = [[2.0 * mu + lambda, lambda, 0.0], [lambda, 2.0 * mu + lambda, 0.0], [0.0, 0.0, mu]];
            let mut k = [[0.0; 6]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    let mut s = 0.0;
                    for r in 0..3 {
                        for c in 0..3 {
                            s += b[r][i] * d[r][c] * b[c][j];
                        }
                    }
                    k[i][j] = e * area * s;
                }
            }
            k
        })
        .collect();
    let mut triplets = Vec::with_capacity(36 * elements.len());
    for (&t, k) in elements.iter().zip(&blocks) {
        let nodes = mesh.triangles[t].nodes;
        let dof = |i: usize| 2 * nodes[i / 2] + i % 2;
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((dof(i), dof(j), k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(2 * mesh.num_nodes(), triplets))
}

/// Interleaved copy of a scalar operator acting on each component.
pub fn componentwise(scalar: &CsrMatrix) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(2 * scalar.nnz());
    for (i, j, v) in scalar.triplets() {
        triplets.push((2 * i, 2 * j, v));
        triplets.push((2 * i + 1, 2 * j + 1, v));
    }
    CsrMatrix::from_triplets(2 * scalar.dim(), triplets)
}

/// Vector mass matrix and unit-coefficient vector Laplacian, for `L²` and `H¹` norms.
pub fn vector_norm_matrices(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix)> {
    let mass = assemble_mass(mesh, None)?;
    let laplace = assemble_stiffness(mesh, &vec![1.0; mesh.num_inclusions + 1], None)?;
    Ok((componentwise(&mass), componentwise(&laplace)))
}

/// Interleaved load vector of a body force.
pub fn assemble_vector_load(mesh: &Mesh, force: &VectorFunction, filter: TagFilter) -> Result<Vec<f64>> {
    let fx = assemble_load(mesh, |p| force.eval(p)[0], filter)?;
    let fy = assemble_load(mesh, |p| force.eval(p)[1], filter)?;
    Ok(fx.iter().zip(&fy).flat_map(|(&a, &b)| [a, b]).collect())
}

/// The three rigid body motions `(1, 0)`, `(0, 1)`, `(x₂, −x₁)` at `points`, interleaved.
pub fn rigid_body_modes(points: &[Point]) -> Vec<Vec<f64>> {
    let translation_x = points.iter().flat_map(|_| [1.0, 0.0]).collect();
    let translation_y = points.iter().flat_map(|_| [0.0, 1.0]).collect();
    let rotation = points.iter().flat_map(|p| [p[1], -p[0]]).collect();
    vec![translation_x, translation_y, rotation]
}
