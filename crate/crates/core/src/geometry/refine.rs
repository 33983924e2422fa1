use std::collections::HashMap;

use super::shape::Shape;
use super::{BoundaryEdge, Mesh, Triangle};
use crate::error::{Error, Result};

/// Splits every triangle into four through its edge midpoints. Midpoints of curved
/// boundary and interface edges are moved onto the analytic curve when known.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (nodes[a], nodes[b]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let [a, b, c] = tri.nodes;
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            triangles.push(Triangle { nodes: child, tag: tri.tag });
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        let m = mid(a, b, &mut nodes);
        if let Some(shape) = curve_for(mesh, e.tag) {
            nodes[m] = shape.project(nodes[m]);
        }
        boundary_edges.push(BoundaryEdge { nodes: [a, m], tag: e.tag });
        boundary_edges.push(BoundaryEdge { nodes: [m, b], tag: e.tag });
    }

    let refined = Mesh {
        nodes,
        triangles,
        boundary_edges,
        num_inclusions: mesh.num_inclusions,
        geometry: mesh.geometry.as_ref().map(|g| {
            let mut g = g.clone();
            g.target_h *= 0.5;
            g
        }),
    };
    for t in 0..refined.triangles.len() {
        if !(refined.signed_area(t) > 0.0) {
            return Err(Error::Geometry(format!(
                "snapping a midpoint inverted refined triangle {t}; the input mesh is too coarse for its curves"
            )));
        }
    }
    Ok(refined)
}

fn curve_for(mesh: &Mesh, tag: usize) -> Option<&Shape> {
    let g = mesh.geometry.as_ref()?;
    if tag == 0 {
        matches!(g.outer, Shape::Disk { .. }).then_some(&g.outer)
    } else {
        g.inclusions.get(tag - 1)
    }
}
