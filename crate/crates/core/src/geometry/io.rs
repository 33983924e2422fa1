//! JSON mesh format:
//! `{"nodes": [[x,y],...], "triangles": [[i,j,k,tag],...], "boundary_edges": [[i,j,tag],...], "num_inclusions": M}`
//! with 0-based indices.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{BoundaryEdge, Mesh, Triangle};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 4]>,
    boundary_edges: Vec<[usize; 3]>,
    num_inclusions: usize,
}

fn num(x: f64) -> String {
    // serde_json prints the shortest representation that round-trips
    serde_json::to_string(&x).expect("finite coordinates")
}

pub(super) fn to_json(mesh: &Mesh) -> String {
    let mut s = String::from("{\n  \"nodes\": [");
    for (i, p) in mesh.nodes.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let _ = write!(s, "{sep}[{}, {}]", num(p[0]), num(p[1]));
    }
    s.push_str("\n  ],\n  \"triangles\": [");
    for (i, t) in mesh.triangles.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let [a, b, c] = t.nodes;
        let _ = write!(s, "{sep}[{a}, {b}, {c}, {}]", t.tag);
    }
    s.push_str("\n  ],\n  \"boundary_edges\": [");
    for (i, e) in mesh.boundary_edges.iter().enumerate() {
        let sep = if i == 0 { "\n    " } else { ",\n    " };
        let _ = write!(s, "{sep}[{}, {}, {}]", e.nodes[0], e.nodes[1], e.tag);
    }
    let _ = write!(s, "\n  ],\n  \"num_inclusions\": {}\n}}\n", mesh.num_inclusions);
    s
}

pub(super) fn from_json(text: &str) -> Result<Mesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mesh = Mesh {
        nodes: file.nodes,
        triangles: file
            .triangles
            .into_iter()
            .map(|[a, b, c, tag]| Triangle { nodes: [a, b, c], tag })
            .collect(),
        boundary_edges: file
            .boundary_edges
            .into_iter()
            .map(|[a, b, tag]| BoundaryEdge { nodes: [a, b], tag })
            .collect(),
        num_inclusions: file.num_inclusions,
        geometry: None,
    };
    mesh.validate()?;
    Ok(mesh)
}
