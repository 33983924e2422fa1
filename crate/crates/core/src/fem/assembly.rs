use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};

/// Subset of subdomain tags that takes part in an assembly; `None` means all.
pub type TagFilter<'a> = Option<&'a [usize]>;

/// Gradients of the three barycentric hat functions and the element area.
pub(crate) fn hat_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = p;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let area = 0.5 * det;
    let grads = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    (grads, area)
}

/// Element indices selected by `filter`, validating the tags it names.
pub(crate) fn selected_elements(mesh: &Mesh, filter: TagFilter) -> Result<Vec<usize>> {
    if let Some(tags) = filter {
        if let Some(&bad) = tags.iter().find(|&&t| t > mesh.num_inclusions) {
            return Err(Error::validation(format!(
                "tag filter names tag {bad}, but the mesh has tags 0..={}",
                mesh.num_inclusions
            )));
        }
    }
    Ok((0..mesh.triangles.len())
        .filter(|&t| filter.is_none_or(|tags| tags.contains(&mesh.triangles[t].tag)))
        .collect())
}

fn check_coeff(mesh: &Mesh, coeff: &[f64]) -> Result<()> {
    if coeff.len() < mesh.num_inclusions + 1 {
        return Err(Error::Dimension { expected: mesh.num_inclusions + 1, found: coeff.len() });
    }
    Ok(())
}

/// Assembles a sparse matrix from per-element 3x3 blocks computed in parallel and
/// summed in element order.
fn assemble_blocks<F>(mesh: &Mesh, elements: &[usize], local: F) -> CsrMatrix
where
    F: Fn(usize) -> [[f64; 3]; 3] + Sync,
{
    let blocks: Vec<[[f64; 3]; 3]> = elements.par_iter().map(|&t| local(t)).collect();
    let mut triplets = Vec::with_capacity(9 * elements.len());
    for (&t, block) in elements.iter().zip(&blocks) {
        let nodes = mesh.triangles[t].nodes;
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((nodes[a], nodes[b], block[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), triplets)
}

/// Stiffness matrix `∫ coeff(tag) ∇φ_i·∇φ_j` over the selected elements. `coeff` is
/// indexed by tag.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &[f64], filter: TagFilter) -> Result<CsrMatrix> {
    check_coeff(mesh, coeff)?;
    let elements = selected_elements(mesh, filter)?;
    Ok(assemble_blocks(mesh, &elements, |t| {
        let (g, area) = hat_gradients(mesh.triangle_points(t));
        let k = coeff[mesh.triangles[t].tag] * area;
        let mut block = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                block[a][b] = k * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        block
    }))
}

/// Consistent P1 mass matrix over the selected elements.
pub fn assemble_mass(mesh: &Mesh, filter: TagFilter) -> Result<CsrMatrix> {
    let elements = selected_elements(mesh, filter)?;
    Ok(assemble_blocks(mesh, &elements, |t| {
        let a = mesh.signed_area(t) / 12.0;
        let mut block = [[a; 3]; 3];
        for (i, row) in block.iter_mut().enumerate() {
            row[i] = 2.0 * a;
        }
        block
    }))
}

/// Load vector `∫ f φ_i` with the edge-midpoint rule, exact for quadratic integrands.
pub fn assemble_load<F>(mesh: &Mesh, f: F, filter: TagFilter) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64 + Sync,
{
    let elements = selected_elements(mesh, filter)?;
    let locals: Vec<[f64; 3]> = elements
        .par_iter()
        .map(|&t| {
            let p = mesh.triangle_points(t);
            let area = mesh.signed_area(t);
            // midpoint k is opposite vertex k; hat i is 1/2 there unless k == i
            let fm: Vec<f64> = (0..3)
                .map(|k| {
                    let (u, v) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                    f([0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])])
                })
                .collect();
            let total: f64 = fm.iter().sum();
            [0, 1, 2].map(|i| area / 3.0 * 0.5 * (total - fm[i]))
        })
        .collect();
    let mut load = vec![0.0; mesh.num_nodes()];
    for (&t, local) in elements.iter().zip(&locals) {
        for (a, &n) in mesh.triangles[t].nodes.iter().enumerate() {
            load[n] += local[a];
        }
    }
    Ok(load)
}

/// Row sums of the mass matrix on the selected elements (lumped mass).
pub fn lumped_mass(mesh: &Mesh, filter: TagFilter) -> Result<Vec<f64>> {
    assemble_load(mesh, |_| 1.0, filter)
}
