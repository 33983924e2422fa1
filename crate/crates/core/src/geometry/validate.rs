use std::collections::BTreeSet;

use super::generate::boundary_edges_of;
use super::Mesh;
use crate::error::{Error, Result};

/// Checks index ranges, orientation, tag consistency of the stored boundary edges,
/// closed interface loops, connectivity and separation of inclusions.
pub fn validate_mesh(mesh: &Mesh) -> Result<()> {
    let n = mesh.nodes.len();
    let m = mesh.num_inclusions;
    for (i, p) in mesh.nodes.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::validation(format!("node {i} has non-finite coordinates")));
        }
    }
    let mut used = vec![false; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in &tri.nodes {
            if v >= n {
                return Err(Error::validation(format!(
                    "triangle {t} references node {v}, but the mesh has {n} nodes"
                )));
            }
            used[v] = true;
        }
        let [a, b, c] = tri.nodes;
        if a == b || b == c || a == c {
            return Err(Error::validation(format!("triangle {t} repeats a node")));
        }
        if tri.tag > m {
            return Err(Error::validation(format!(
                "triangle {t} has tag {}, but the mesh has {m} inclusions",
                tri.tag
            )));
        }
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            return Err(Error::validation(format!(
                "triangle {t} has non-positive signed area {area:e}"
            )));
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::validation(format!("node {i} belongs to no triangle")));
    }
    for (e, edge) in mesh.boundary_edges.iter().enumerate() {
        for &v in &edge.nodes {
            if v >= n {
                return Err(Error::validation(format!(
                    "boundary edge {e} references node {v}, but the mesh has {n} nodes"
                )));
            }
        }
        if edge.tag > m {
            return Err(Error::validation(format!(
                "boundary edge {e} has tag {}, but the mesh has {m} inclusions",
                edge.tag
            )));
        }
    }

    let derived = boundary_edges_of(&mesh.triangles).map_err(|e| match e {
        Error::Geometry(msg) => Error::Validation(msg),
        other => other,
    })?;
    let key = |nodes: [usize; 2], tag: usize| (nodes[0].min(nodes[1]), nodes[0].max(nodes[1]), tag);
    let derived_set: BTreeSet<_> = derived.iter().map(|e| key(e.nodes, e.tag)).collect();
    let stored_set: BTreeSet<_> = mesh.boundary_edges.iter().map(|e| key(e.nodes, e.tag)).collect();
    if stored_set.len() != mesh.boundary_edges.len() {
        return Err(Error::validation("boundary edge list contains duplicates"));
    }
    if let Some(extra) = stored_set.difference(&derived_set).next() {
        return Err(Error::validation(format!(
            "stored boundary edge ({}, {}) with tag {} does not separate the subdomains its tag claims",
            extra.0, extra.1, extra.2
        )));
    }
    if let Some(missing) = derived_set.difference(&stored_set).next() {
        return Err(Error::validation(format!(
            "edge ({}, {}) with tag {} is missing from the boundary edge list",
            missing.0, missing.1, missing.2
        )));
    }

    for tag in 0..=m {
        let mut degree = vec![0u32; n];
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
            degree[e.nodes[0]] += 1;
            degree[e.nodes[1]] += 1;
        }
        if let Some(v) = degree.iter().position(|d| d % 2 == 1) {
            let what = if tag == 0 { "outer boundary".to_string() } else { format!("interface {tag}") };
            return Err(Error::validation(format!("{what} is not closed at node {v}")));
        }
    }

    check_inclusions(mesh)
}

fn check_inclusions(mesh: &Mesh) -> Result<()> {
    let m = mesh.num_inclusions;
    if m == 0 {
        return Ok(());
    }
    // node ownership: inclusion closures must be disjoint and avoid the outer boundary
    let mut owner = vec![0usize; mesh.nodes.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.tag == 0 {
            continue;
        }
        for &v in &tri.nodes {
            if owner[v] != 0 && owner[v] != tri.tag {
                return Err(Error::validation(format!(
                    "inclusions {} and {} touch at node {v} (triangle {t})",
                    owner[v], tri.tag
                )));
            }
            owner[v] = tri.tag;
        }
    }
    for e in mesh.boundary_edges.iter().filter(|e| e.tag == 0) {
        for &v in &e.nodes {
            if owner[v] != 0 {
                return Err(Error::validation(format!(
                    "inclusion {} touches the outer boundary at node {v}",
                    owner[v]
                )));
            }
        }
    }

    // edge-connectivity of each inclusion via union-find over shared edges
    let tris = &mesh.triangles;
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edge_owner = std::collections::HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        if tri.tag == 0 {
            continue;
        }
        for k in 0..3 {
            let (a, b) = (tri.nodes[k], tri.nodes[(k + 1) % 3]);
            if let Some(&s) = edge_owner.get(&(a.min(b), a.max(b))) {
                let (ra, rb) = (find(&mut parent, s), find(&mut parent, t));
                parent[ra] = rb;
            } else {
                edge_owner.insert((a.min(b), a.max(b)), t);
            }
        }
    }
    let mut root_of = vec![None; m + 1];
    for (t, tri) in tris.iter().enumerate() {
        if tri.tag == 0 {
            continue;
        }
        let r = find(&mut parent, t);
        match root_of[tri.tag] {
            None => root_of[tri.tag] = Some(r),
            Some(r0) if r0 != r => {
                return Err(Error::validation(format!(
                    "inclusion {} is not edge-connected (triangle {t})",
                    tri.tag
                )))
            }
            _ => {}
        }
    }
    if let Some(missing) = (1..=m).find(|&k| root_of[k].is_none()) {
        return Err(Error::validation(format!("inclusion {missing} has no triangles")));
    }
    Ok(())
}
