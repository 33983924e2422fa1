use std::collections::BTreeMap;

use super::shape::{dist, lerp, Point, Shape};
use super::{BoundaryEdge, GeometrySpec, Mesh, Triangle};
use crate::error::{Error, Result};

/// Nodes closer than this fraction of the grid spacing to a curve are moved onto it.
const SNAP_FRACTION: f64 = 0.3;

/// Working triangulation used while fitting curves into the background grid.
struct Draft {
    nodes: Vec<Point>,
    tris: Vec<[usize; 3]>,
    /// Index of the curve each node was placed on, if any.
    on_curve: Vec<Option<usize>>,
}

impl Draft {
    fn area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    fn side(&self, node: usize, curve: usize, shape: &Shape) -> i8 {
        if self.on_curve[node] == Some(curve) {
            return 0;
        }
        if shape.signed_distance(self.nodes[node]) < 0.0 {
            -1
        } else {
            1
        }
    }

    fn add_node(&mut self, p: Point, curve: Option<usize>) -> usize {
        self.nodes.push(p);
        self.on_curve.push(curve);
        self.nodes.len() - 1
    }

    fn incident(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (t, tri) in self.tris.iter().enumerate() {
            for &n in tri {
                inc[n].push(t);
            }
        }
        inc
    }

    /// Moves `node` to `target` if no incident triangle collapses.
    fn try_move(&mut self, node: usize, target: Point, incident: &[usize]) -> bool {
        let before: Vec<f64> = incident.iter().map(|&t| self.area(&self.tris[t])).collect();
        let old = self.nodes[node];
        self.nodes[node] = target;
        let ok = incident
            .iter()
            .zip(&before)
            .all(|(&t, &a0)| self.area(&self.tris[t]) > 0.2 * a0);
        if !ok {
            self.nodes[node] = old;
        }
        ok
    }
}

/// Builds a conforming mesh for `spec`: a structured grid whose nodes are snapped
/// to each curve, with the remaining crossing triangles split along the curve.
pub fn generate_mesh(spec: &GeometrySpec) -> Result<Mesh> {
    spec.validate()?;
    let h = spec.target_h;
    let [bx0, by0, bx1, by1] = spec.outer.bbox();
    let nx = ((bx1 - bx0) / h).ceil().max(1.0) as usize;
    let ny = ((by1 - by0) / h).ceil().max(1.0) as usize;
    let grid = structured_grid(bx0, by0, bx1, by1, nx, ny);
    let spacing = ((bx1 - bx0) / nx as f64).min((by1 - by0) / ny as f64);

    let mut draft = Draft {
        on_curve: vec![None; grid.nodes.len()],
        nodes: grid.nodes,
        tris: grid.triangles.iter().map(|t| t.nodes).collect(),
    };

    // Curve 0 is the outer boundary when it is curved; curves 1..=M are inclusions.
    let mut curves: Vec<(usize, &Shape)> = Vec::new();
    if matches!(spec.outer, Shape::Disk { .. }) {
        curves.push((0, &spec.outer));
    }
    for (i, s) in spec.inclusions.iter().enumerate() {
        curves.push((i + 1, s));
    }
    for &(id, shape) in &curves {
        insert_corners(&mut draft, id, shape, spacing)?;
        snap_nodes(&mut draft, id, shape, spacing);
        match shape {
            Shape::Polygon { vertices } => split_polygon_crossings(&mut draft, id, vertices)?,
            _ => split_crossings(&mut draft, id, shape)?,
        }
    }

    let mesh = finalize(draft, spec)?;
    check_resolution(&mesh)?;
    mesh.validate()?;
    Ok(mesh)
}

/// Right-triangle mesh of a rectangle with alternating diagonals.
pub(crate) fn structured_grid(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Mesh {
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            nodes.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let pair = if (i + j) % 2 == 0 {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for nodes in pair {
                triangles.push(Triangle { nodes, tag: 0 });
            }
        }
    }
    let boundary_edges = boundary_edges_of(&triangles).unwrap_or_default();
    Mesh {
        nodes,
        triangles,
        boundary_edges,
        num_inclusions: 0,
        geometry: Some(GeometrySpec::new(Shape::rectangle(x0, y0, x1, y1), Vec::new(), {
            let hx = (x1 - x0) / nx as f64;
            let hy = (y1 - y0) / ny as f64;
            hx.max(hy)
        })),
    }
}

/// Places polygon corners exactly on mesh nodes, moving a nearby node when
/// possible and splitting the containing element otherwise.
fn insert_corners(draft: &mut Draft, curve: usize, shape: &Shape, spacing: f64) -> Result<()> {
    if !matches!(shape, Shape::Polygon { .. }) {
        return Ok(());
    }
    for corner in shape.corners() {
        let nearest = (0..draft.nodes.len())
            .min_by(|&a, &b| dist(draft.nodes[a], corner).total_cmp(&dist(draft.nodes[b], corner)))
            .expect("grid has nodes");
        if dist(draft.nodes[nearest], corner) < SNAP_FRACTION * spacing
            && draft.on_curve[nearest].is_none()
        {
            let incident = draft.incident();
            if draft.try_move(nearest, corner, &incident[nearest]) {
                draft.on_curve[nearest] = Some(curve);
                continue;
            }
        }
        let host = (0..draft.tris.len())
            .find(|&t| contains_point(draft, &draft.tris[t], corner))
            .ok_or_else(|| Error::Geometry(format!("polygon corner {corner:?} not covered by the mesh")))?;
        let tri = draft.tris[host];
        let bary = barycentric(draft, &tri, corner);
        let p = draft.add_node(corner, Some(curve));
        let k = (0..3).min_by(|&i, &j| bary[i].total_cmp(&bary[j])).unwrap();
        if bary[k] < 0.05 {
            // corner sits on (or next to) the edge opposite vertex k: split both neighbours
            let (v0, v1, v2) = (tri[(k + 1) % 3], tri[(k + 2) % 3], tri[k]);
            draft.tris[host] = [v0, p, v2];
            draft.tris.push([p, v1, v2]);
            if let Some(other) = (0..draft.tris.len()).find(|&t| {
                t != host && has_edge(&draft.tris[t], v1, v0)
            }) {
                let w = *draft.tris[other].iter().find(|&&n| n != v0 && n != v1).unwrap();
                draft.tris[other] = [v1, p, w];
                draft.tris.push([p, v0, w]);
            }
        } else {
            let [a, b, c] = tri;
            draft.tris[host] = [a, b, p];
            draft.tris.push([b, c, p]);
            draft.tris.push([c, a, p]);
        }
        if draft.tris.iter().any(|t| draft.area(t) <= 0.0) {
            return Err(Error::Resolution(format!(
                "polygon corner {corner:?} could not be inserted; adjust target_h"
            )));
        }
    }
    Ok(())
}

fn has_edge(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

fn barycentric(draft: &Draft, tri: &[usize; 3], p: Point) -> [f64; 3] {
    let total = draft.area(tri);
    let [a, b, c] = tri.map(|i| draft.nodes[i]);
    let sub = |u: Point, v: Point| 0.5 * ((v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]));
    [sub(b, c) / total, sub(c, a) / total, sub(a, b) / total]
}

fn contains_point(draft: &Draft, tri: &[usize; 3], p: Point) -> bool {
    let [a, b, c] = tri.map(|i| draft.nodes[i]);
    let cross = |u: Point, v: Point| (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]);
    cross(a, b) >= 0.0 && cross(b, c) >= 0.0 && cross(c, a) >= 0.0
}

fn snap_nodes(draft: &mut Draft, curve: usize, shape: &Shape, spacing: f64) {
    let incident = draft.incident();
    for n in 0..draft.nodes.len() {
        if draft.on_curve[n].is_some() {
            continue;
        }
        if shape.signed_distance(draft.nodes[n]).abs() < SNAP_FRACTION * spacing {
            let target = shape.project(draft.nodes[n]);
            if draft.try_move(n, target, &incident[n]) {
                draft.on_curve[n] = Some(curve);
            }
        }
    }
}

/// Splits every edge whose endpoints lie strictly on opposite sides of a smooth curve.
fn split_crossings(draft: &mut Draft, curve: usize, shape: &Shape) -> Result<()> {
    let sides: Vec<i8> = (0..draft.nodes.len()).map(|n| draft.side(n, curve, shape)).collect();
    let mut crossing_edges = Vec::new();
    for tri in &draft.tris {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if sides[a] * sides[b] < 0 {
                crossing_edges.push((a.min(b), a.max(b)));
            }
        }
    }
    crossing_edges.sort_unstable();
    crossing_edges.dedup();
    let mut cut = BTreeMap::new();
    for (a, b) in crossing_edges {
        let p = shape.crossing(draft.nodes[a], draft.nodes[b]);
        let id = draft.add_node(p, Some(curve));
        cut.insert((a, b), id);
    }
    retriangulate(draft, &cut);
    Ok(())
}

/// Splits mesh edges at proper intersections with polygon sides, repeating until
/// no side passes through the interior of any edge.
fn split_polygon_crossings(draft: &mut Draft, curve: usize, vertices: &[Point]) -> Result<()> {
    const MAX_PASSES: usize = 16;
    let sides: Vec<(Point, Point)> = (0..vertices.len())
        .map(|i| (vertices[i], vertices[(i + 1) % vertices.len()]))
        .collect();
    for _ in 0..MAX_PASSES {
        let mut edges: Vec<(usize, usize)> = draft
            .tris
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut cut = BTreeMap::new();
        for (a, b) in edges {
            let (pa, pb) = (draft.nodes[a], draft.nodes[b]);
            let hit = sides
                .iter()
                .filter_map(|&(s0, s1)| proper_crossing(pa, pb, s0, s1))
                .min_by(|x, y| x.0.total_cmp(&y.0));
            if let Some((_, p)) = hit {
                let id = draft.add_node(p, Some(curve));
                cut.insert((a, b), id);
            }
        }
        if cut.is_empty() {
            return Ok(());
        }
        retriangulate(draft, &cut);
    }
    Err(Error::Resolution(format!(
        "polygon inclusion {curve} could not be conformed to the grid; reduce target_h"
    )))
}

/// Intersection of segment `a`-`b` with side `s0`-`s1` strictly inside `a`-`b`,
/// returned with its parameter along `a`-`b`.
fn proper_crossing(a: Point, b: Point, s0: Point, s1: Point) -> Option<(f64, Point)> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let e = [s1[0] - s0[0], s1[1] - s0[1]];
    let denom = d[0] * e[1] - d[1] * e[0];
    let scale = (d[0].hypot(d[1])) * (e[0].hypot(e[1]));
    if denom.abs() <= 1e-12 * scale {
        return None;
    }
    let w = [s0[0] - a[0], s0[1] - a[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / denom;
    let u = (w[0] * d[1] - w[1] * d[0]) / denom;
    const EPS: f64 = 1e-9;
    if t > EPS && t < 1.0 - EPS && (-EPS..=1.0 + EPS).contains(&u) {
        Some((t, lerp(s0, s1, u.clamp(0.0, 1.0))))
    } else {
        None
    }
}

/// Replaces every triangle with cut edges by sub-triangles through the cut points.
fn retriangulate(draft: &mut Draft, cut: &BTreeMap<(usize, usize), usize>) {
    if cut.is_empty() {
        return;
    }
    let cut_of = |a: usize, b: usize| cut.get(&(a.min(b), a.max(b))).copied();
    let old = std::mem::take(&mut draft.tris);
    let mut out = Vec::with_capacity(old.len() + 3 * cut.len());
    for tri in old {
        let cuts: Vec<Option<usize>> = (0..3).map(|k| cut_of(tri[k], tri[(k + 1) % 3])).collect();
        match cuts.iter().filter(|c| c.is_some()).count() {
            0 => out.push(tri),
            1 => {
                let k = cuts.iter().position(|c| c.is_some()).unwrap();
                let p = cuts[k].unwrap();
                let (v0, v1, v2) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                out.push([v0, p, v2]);
                out.push([p, v1, v2]);
            }
            2 => {
                // v0 is the vertex shared by both cut edges
                let k = (0..3).find(|&k| cuts[k].is_none()).unwrap();
                let (v1, v2, v0) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let p20 = cuts[(k + 1) % 3].unwrap();
                let p01 = cuts[(k + 2) % 3].unwrap();
                out.push([v0, p01, p20]);
                let n = &draft.nodes;
                if dist(n[p01], n[v2]) <= dist(n[v1], n[p20]) {
                    out.push([p01, v1, v2]);
                    out.push([p01, v2, p20]);
                } else {
                    out.push([p01, v1, p20]);
                    out.push([v1, v2, p20]);
                }
            }
            _ => {
                let [v0, v1, v2] = tri;
                let (p01, p12, p20) = (cuts[0].unwrap(), cuts[1].unwrap(), cuts[2].unwrap());
                out.push([v0, p01, p20]);
                out.push([p01, v1, p12]);
                out.push([p20, p12, v2]);
                out.push([p01, p12, p20]);
            }
        }
    }
    draft.tris = out;
}

fn finalize(draft: Draft, spec: &GeometrySpec) -> Result<Mesh> {
    let outer_disk = matches!(spec.outer, Shape::Disk { .. });
    let centroid = |t: &[usize; 3]| {
        let [a, b, c] = t.map(|i| draft.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    };
    // Vertex sides decide; the centroid only breaks ties when all vertices are on the curve.
    // Polygons are conformed exactly, so the centroid alone decides for them.
    let inside = |t: &[usize; 3], curve: usize, shape: &Shape| -> bool {
        if let Shape::Polygon { .. } = shape {
            return shape.contains(centroid(t));
        }
        let sides = t.map(|n| draft.side(n, curve, shape));
        if sides.iter().any(|&s| s < 0) {
            true
        } else if sides.iter().any(|&s| s > 0) {
            false
        } else {
            shape.contains(centroid(t))
        }
    };

    let mut kept: Vec<Triangle> = Vec::with_capacity(draft.tris.len());
    for t in &draft.tris {
        if outer_disk && !inside(t, 0, &spec.outer) {
            continue;
        }
        let mut tag = 0;
        for (i, shape) in spec.inclusions.iter().enumerate() {
            if inside(t, i + 1, shape) {
                tag = i + 1;
                break;
            }
        }
        kept.push(Triangle { nodes: *t, tag });
    }

    let mut remap = vec![usize::MAX; draft.nodes.len()];
    for t in &kept {
        for &n in &t.nodes {
            remap[n] = 0;
        }
    }
    let mut nodes = Vec::new();
    for (old, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = nodes.len();
            nodes.push(draft.nodes[old]);
        }
    }
    for t in &mut kept {
        t.nodes = t.nodes.map(|n| remap[n]);
    }
    for (i, t) in kept.iter().enumerate() {
        let [a, b, c] = t.nodes.map(|n| nodes[n]);
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
        if !(area > 0.0) {
            return Err(Error::Internal(format!(
                "mesh generation produced triangle {i} with non-positive area {area:e}"
            )));
        }
    }
    let boundary_edges = boundary_edges_of(&kept)?;
    Ok(Mesh {
        nodes,
        triangles: kept,
        boundary_edges,
        num_inclusions: spec.inclusions.len(),
        geometry: Some(spec.clone()),
    })
}

/// Outer edges (one adjacent triangle) and interface edges (background on one side,
/// an inclusion on the other), ordered by tag and then by first appearance.
pub(crate) fn boundary_edges_of(tris: &[Triangle]) -> Result<Vec<BoundaryEdge>> {
    let mut adjacent: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    let mut order = Vec::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri.nodes[k], tri.nodes[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = adjacent.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push((t, k));
        }
    }
    let mut edges = Vec::new();
    for key in order {
        let adj = &adjacent[&key];
        let oriented = |(t, k): (usize, usize)| {
            let n = tris[t].nodes;
            [n[k], n[(k + 1) % 3]]
        };
        match adj.as_slice() {
            [only] => edges.push(BoundaryEdge { nodes: oriented(*only), tag: 0 }),
            [first, second] => {
                let (ta, tb) = (tris[first.0].tag, tris[second.0].tag);
                if ta == tb {
                    continue;
                }
                if ta != 0 && tb != 0 {
                    return Err(Error::Geometry(format!(
                        "inclusions {ta} and {tb} share the edge {key:?}"
                    )));
                }
                let inner = if ta != 0 { *first } else { *second };
                edges.push(BoundaryEdge { nodes: oriented(inner), tag: ta.max(tb) });
            }
            _ => {
                return Err(Error::validation(format!(
                    "edge {key:?} is shared by {} triangles",
                    adj.len()
                )))
            }
        }
    }
    edges.sort_by_key(|e| e.tag);
    Ok(edges)
}

fn check_resolution(mesh: &Mesh) -> Result<()> {
    let closures = mesh.inclusion_closure_nodes();
    for (i, closure) in closures.iter().enumerate() {
        let m = i + 1;
        let interface = mesh.interface_nodes(m);
        let interior = closure.iter().filter(|n| interface.binary_search(n).is_err()).count();
        if interior == 0 {
            return Err(Error::Resolution(format!(
                "inclusion {m} has no interior node; reduce target_h"
            )));
        }
    }
    Ok(())
}
