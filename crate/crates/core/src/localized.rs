//! Characteristic fields computed on a neighborhood of each inclusion instead of the
//! whole background, and the resulting approximation of the leading term.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{dense_spd_solve, dot, DirichletSolver};
use crate::geometry::Mesh;
use crate::pressure::PressureSolver;

/// Elements and nodes of the neighborhood of one inclusion: the inclusion, the
/// background elements touching it, and background elements whose centroid lies within
/// `delta` of it.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaNeighborhood {
    /// Inclusion index, from 1.
    pub inclusion: usize,
    pub delta: f64,
    pub elements: Vec<bool>,
    pub nodes: Vec<bool>,
}

impl DeltaNeighborhood {
    pub fn area(&self, mesh: &Mesh) -> f64 {
        (0..mesh.num_triangles()).filter(|&t| self.elements[t]).map(|t| mesh.signed_area(t)).sum()
    }
}

pub fn build_neighborhood(mesh: &Mesh, inclusion: usize, delta: f64) -> Result<DeltaNeighborhood> {
    if inclusion == 0 || inclusion > mesh.num_inclusions {
        return Err(Error::validation(format!(
            "inclusion {inclusion} out of range 1..={}",
            mesh.num_inclusions
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::validation(format!("neighborhood width must be positive, got {delta}")));
    }
    let owner = mesh.node_inclusion();
    let elements: Vec<bool> = mesh
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            tri.tag == inclusion
                || (tri.tag == 0
                    && (tri.nodes.iter().any(|&n| owner[n] == inclusion)
                        || mesh.distance_to_inclusion(inclusion, mesh.centroid(t)) < delta))
        })
        .collect();
    let nodes = node_mask(mesh, &elements);
    Ok(DeltaNeighborhood { inclusion, delta, elements, nodes })
}

/// Background elements whose centroid lies within `delta` of the outer boundary.
pub fn boundary_strip(mesh: &Mesh, delta: f64) -> Vec<bool> {
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| tri.tag == 0 && mesh.distance_to_outer_boundary(mesh.centroid(t)) < delta)
        .collect()
}

fn node_mask(mesh: &Mesh, elements: &[bool]) -> Vec<bool> {
    let mut nodes = vec![false; mesh.num_nodes()];
    for (tri, _) in mesh.triangles.iter().zip(elements).filter(|(_, &e)| e) {
        for &n in &tri.nodes {
            nodes[n] = true;
        }
    }
    nodes
}

/// Nodes off the outer boundary and off every inclusion whose incident elements all
/// lie in `elements`.
fn free_nodes(mesh: &Mesh, elements: &[bool], pinned: &[bool]) -> Vec<bool> {
    let mut free = vec![true; mesh.num_nodes()];
    let mut touched = vec![false; mesh.num_nodes()];
    for (tri, &inside) in mesh.triangles.iter().zip(elements) {
        for &n in &tri.nodes {
            touched[n] = true;
            if !inside {
                free[n] = false;
            }
        }
    }
    for n in 0..free.len() {
        free[n] = free[n] && touched[n] && !pinned[n];
    }
    free
}

/// Dirichlet solve on the background operator with every node outside `free` fixed.
fn solve_on(solver: &PressureSolver, free: &[bool], load: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let fixed: Vec<usize> = (0..free.len()).filter(|&n| !free[n]).collect();
    if fixed.len() == free.len() {
        return Ok(values.to_vec());
    }
    let k0 = &solver.engine().system().background;
    let restricted_load: Vec<f64> = load.iter().zip(free).map(|(&f, &is_free)| if is_free { f } else { 0.0 }).collect();
    DirichletSolver::new(k0, &fixed, solver.engine().tol())?.solve(&restricted_load, values)
}

/// Localized characteristic fields and their Gram matrix.
#[derive(Clone, Debug)]
pub struct LocalizedBasis {
    pub delta: f64,
    pub neighborhoods: Vec<DeltaNeighborhood>,
    pub characteristics: Vec<Vec<f64>>,
    pub gram: Vec<Vec<f64>>,
}

fn pinned_nodes(mesh: &Mesh) -> Vec<bool> {
    let owner = mesh.node_inclusion();
    let mut pinned: Vec<bool> = owner.iter().map(|&m| m > 0).collect();
    for n in mesh.outer_boundary_nodes() {
        pinned[n] = true;
    }
    pinned
}

/// Characteristic field of each inclusion computed on its neighborhood, with zero
/// data on the neighborhood's edge and on other inclusions.
///
/// When no node of a neighborhood is free the field is the hat function of the
/// inclusion's closure, which is still a valid coarse basis function.
pub fn localized_characteristics(solver: &PressureSolver, delta: f64) -> Result<LocalizedBasis> {
    let mesh = solver.mesh();
    let n = mesh.num_nodes();
    let pinned = pinned_nodes(mesh);
    let closures = mesh.inclusion_closure_nodes();
    let characteristics: Vec<Vec<f64>> = (1..=mesh.num_inclusions)
        .into_par_iter()
        .map(|m| {
            let hood = build_neighborhood(mesh, m, delta)?;
            let free = free_nodes(mesh, &hood.elements, &pinned);
            let mut values = vec![0.0; n];
            for &d in &closures[m - 1] {
                values[d] = 1.0;
            }
            solve_on(solver, &free, &vec![0.0; n], &values)
        })
        .collect::<Result<_>>()?;
    assemble_basis(solver, delta, characteristics)
}

/// Rebuilds a localized basis from stored fields, checking that each one vanishes
/// outside its neighborhood and equals one on its inclusion.
pub fn localized_basis_from_fields(solver: &PressureSolver, delta: f64, fields: Vec<Vec<f64>>) -> Result<LocalizedBasis> {
    let mesh = solver.mesh();
    if fields.len() != mesh.num_inclusions {
        return Err(Error::Dimension { expected: mesh.num_inclusions, found: fields.len() });
    }
    let closures = mesh.inclusion_closure_nodes();
    for (m, field) in fields.iter().enumerate() {
        let hood = build_neighborhood(mesh, m + 1, delta)?;
        let outside = field.iter().zip(&hood.nodes).any(|(&v, &inside)| !inside && v != 0.0);
        let off_one = closures[m].iter().any(|&d| field[d] != 1.0);
        if field.len() != mesh.num_nodes() || outside || off_one {
            return Err(Error::validation(format!("stored localized field {} does not match its neighborhood", m + 1)));
        }
    }
    assemble_basis(solver, delta, fields)
}

fn assemble_basis(solver: &PressureSolver, delta: f64, characteristics: Vec<Vec<f64>>) -> Result<LocalizedBasis> {
    let mesh = solver.mesh();
    let neighborhoods = (1..=mesh.num_inclusions)
        .map(|m| build_neighborhood(mesh, m, delta))
        .collect::<Result<Vec<_>>>()?;
    let k0 = &solver.engine().system().background;
    let fluxes: Vec<Vec<f64>> = characteristics.par_iter().map(|c| k0.matvec(c)).collect::<Result<_>>()?;
    let gram = characteristics.iter().map(|a| fluxes.iter().map(|f| dot(a, f)).collect()).collect();
    Ok(LocalizedBasis { delta, neighborhoods, characteristics, gram })
}

/// Localized leading term `u_0^δ = u_{0,0}^δ + Σ c_m^δ χ_m^δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedLeading {
    pub u0: Vec<f64>,
    /// Background part solved on the strip along the outer boundary.
    pub background_part: Vec<f64>,
    pub constants: Vec<f64>,
}

impl LocalizedLeading {
    /// `u_0^δ − u_{0,0}^δ`.
    pub fn coarse_part(&self) -> Vec<f64> {
        self.u0.iter().zip(&self.background_part).map(|(a, b)| a - b).collect()
    }
}

pub fn compute_u0_delta(solver: &PressureSolver, basis: &LocalizedBasis) -> Result<LocalizedLeading> {
    let mesh = solver.mesh();
    let strip = boundary_strip(mesh, basis.delta);
    let free = free_nodes(mesh, &strip, &pinned_nodes(mesh));
    let u00 = solve_on(solver, &free, solver.load(), solver.boundary_values())?;
    let k0 = &solver.engine().system().background;
    let ku00 = k0.matvec(&u00)?;
    let rhs: Vec<f64> = basis.characteristics.iter().map(|c| dot(c, solver.load()) - dot(c, &ku00)).collect();
    let constants = dense_spd_solve(&basis.gram, &rhs)?;
    let mut u0 = u00.clone();
    for (c, &x) in basis.characteristics.iter().zip(&constants) {
        for (u, v) in u0.iter_mut().zip(c) {
            *u += x * v;
        }
    }
    Ok(LocalizedLeading { u0, background_part: u00, constants })
}

/// One row of the localization study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    /// `‖u_0 − u_0^δ‖ / ‖u_0‖` in `H¹`.
    pub err_u0: f64,
    /// `‖u_{0,0} − u_{0,0}^δ‖ / ‖u_{0,0}‖`.
    pub err_u00: f64,
    /// `‖u_c − u_c^δ‖ / ‖u_0‖` for the coarse parts `u_c = u_0 − u_{0,0}`.
    pub err_uc: f64,
}

/// Global leading term and its parts, against which localized versions are measured.
pub struct SweepReference {
    u0: Vec<f64>,
    u00: Vec<f64>,
    coarse: Vec<f64>,
    norm_u0: f64,
    norm_u00: f64,
}

impl SweepReference {
    pub fn new(solver: &PressureSolver) -> Result<Self> {
        let lead = solver.engine().leading_term(solver.load(), solver.boundary_values())?;
        let u0 = lead.term.field;
        let u00 = lead.background_part;
        let coarse = u0.iter().zip(&u00).map(|(a, b)| a - b).collect();
        let norm_u0 = solver.h1_norm(&u0)?;
        let norm_u00 = solver.h1_norm(&u00)?;
        Ok(Self { u0, u00, coarse, norm_u0, norm_u00 })
    }

    /// Errors of the localized leading term built from `basis`.
    pub fn row(&self, solver: &PressureSolver, basis: &LocalizedBasis) -> Result<SweepRow> {
        let local = compute_u0_delta(solver, basis)?;
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
        Ok(SweepRow {
            delta: basis.delta,
            err_u0: ratio(solver.h1_norm(&diff(&self.u0, &local.u0))?, self.norm_u0),
            err_u00: ratio(solver.h1_norm(&diff(&self.u00, &local.background_part))?, self.norm_u00),
            err_uc: ratio(solver.h1_norm(&diff(&self.coarse, &local.coarse_part()))?, self.norm_u0),
        })
    }
}

/// Localization errors for each width in `deltas`.
pub fn delta_error_sweep(solver: &PressureSolver, deltas: &[f64]) -> Result<Vec<SweepRow>> {
    let reference = SweepReference::new(solver)?;
    deltas
        .iter()
        .map(|&delta| reference.row(solver, &localized_characteristics(solver, delta)?))
        .collect()
}

/// True if each value is at most `(1 + jitter)` times its predecessor.
pub fn is_non_increasing(values: &[f64], jitter: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + jitter))
}

/// Share of the background energy of `field` carried by elements whose centroid lies
/// at least `radius` away from inclusion `inclusion`.
pub fn far_energy_fraction(solver: &PressureSolver, field: &[f64], inclusion: usize, radius: f64) -> Result<f64> {
    let mesh = solver.mesh();
    let far_tags: Vec<bool> = mesh
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| tri.tag == 0 && mesh.distance_to_inclusion(inclusion, mesh.centroid(t)) >= radius)
        .collect();
    let mut far = 0.0;
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate().filter(|(_, tri)| tri.tag == 0) {
        let (g, area) = crate::fem::hat_gradients(mesh.triangle_points(t));
        let mut grad = [0.0; 2];
        for (a, &n) in tri.nodes.iter().enumerate() {
            grad[0] += g[a][0] * field[n];
            grad[1] += g[a][1] * field[n];
        }
        let e = area * (grad[0] * grad[0] + grad[1] * grad[1]);
        total += e;
        if far_tags[t] {
            far += e;
        }
    }
    Ok(if total > 0.0 { far / total } else { 0.0 })
}
