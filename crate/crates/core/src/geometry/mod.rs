//! Conforming triangulations with subdomain tags.

mod generate;
mod io;
mod quality;
mod refine;
mod shape;
mod spec;
mod validate;

pub use generate::generate_mesh;
pub use quality::{mesh_quality, triangle_aspect_ratio, QualityReport};
pub use shape::{Point, Shape};
pub use spec::{hex_lattice, GeometrySpec};

/// Triangle given by three node indices (counter-clockwise) and a subdomain tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    /// 0 for the background, `m` for inclusion `m`.
    pub tag: usize,
}

/// Edge on the outer boundary (tag 0) or on the interface of inclusion `tag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: usize,
}

/// Triangulation whose elements each lie in exactly one subdomain.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub num_inclusions: usize,
    /// Analytic description, kept for snapping during refinement and for
    /// distance queries. Not part of the file format.
    pub geometry: Option<GeometrySpec>,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let n = self.triangles[t].nodes;
        [self.nodes[n[0]], self.nodes[n[1]], self.nodes[n[2]]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Sum of element areas carrying tag `tag`.
    pub fn tag_area(&self, tag: usize) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].tag == tag)
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Nodes on the outer boundary, sorted.
    pub fn outer_boundary_nodes(&self) -> Vec<usize> {
        self.edge_nodes(|tag| tag == 0)
    }

    /// Nodes on the interface of inclusion `m`, sorted.
    pub fn interface_nodes(&self, m: usize) -> Vec<usize> {
        self.edge_nodes(|tag| tag == m)
    }

    fn edge_nodes(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut mark = vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            if keep(e.tag) {
                mark[e.nodes[0]] = true;
                mark[e.nodes[1]] = true;
            }
        }
        (0..mark.len()).filter(|&i| mark[i]).collect()
    }

    /// For every node, the inclusion whose closure contains it (0 if none).
    pub fn node_inclusion(&self) -> Vec<usize> {
        let mut owner = vec![0usize; self.nodes.len()];
        for tri in &self.triangles {
            if tri.tag > 0 {
                for &n in &tri.nodes {
                    owner[n] = tri.tag;
                }
            }
        }
        owner
    }

    /// Sorted node lists of each inclusion closure, indexed `0..M` for inclusions `1..=M`.
    pub fn inclusion_closure_nodes(&self) -> Vec<Vec<usize>> {
        let owner = self.node_inclusion();
        let mut lists = vec![Vec::new(); self.num_inclusions];
        for (n, &m) in owner.iter().enumerate() {
            if m > 0 {
                lists[m - 1].push(n);
            }
        }
        lists
    }

    /// Number of distinct tags present on triangles.
    pub fn distinct_tags(&self) -> usize {
        let mut seen = vec![false; self.num_inclusions + 1];
        for tri in &self.triangles {
            if tri.tag < seen.len() {
                seen[tri.tag] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Distance from `p` to inclusion `m` (zero inside), using the analytic shape
    /// when available and the interface edges otherwise.
    pub fn distance_to_inclusion(&self, m: usize, p: Point) -> f64 {
        if let Some(g) = &self.geometry {
            if let Some(shape) = g.inclusions.get(m - 1) {
                return shape.distance(p);
            }
        }
        self.distance_to_edges(p, |tag| tag == m)
    }

    /// Distance from `p` to the outer boundary.
    pub fn distance_to_outer_boundary(&self, p: Point) -> f64 {
        if let Some(g) = &self.geometry {
            return g.outer.signed_distance(p).abs();
        }
        self.distance_to_edges(p, |tag| tag == 0)
    }

    fn distance_to_edges(&self, p: Point, keep: impl Fn(usize) -> bool) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| keep(e.tag))
            .map(|e| {
                shape::point_segment_distance(self.nodes[e.nodes[0]], self.nodes[e.nodes[1]], p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks every structural invariant; see [`validate::validate_mesh`].
    pub fn validate(&self) -> crate::Result<()> {
        validate::validate_mesh(self)
    }

    /// Uniform red refinement.
    pub fn refine_uniform(&self) -> crate::Result<Mesh> {
        refine::refine_uniform(self)
    }

    pub fn to_json(&self) -> String {
        io::to_json(self)
    }

    pub fn from_json(text: &str) -> crate::Result<Mesh> {
        io::from_json(text)
    }

    pub fn save(&self, path: &std::path::Path) -> crate::Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> crate::Result<Mesh> {
        let text = std::fs::read_to_string(path)?;
        io::from_json(&text).map_err(|e| match e {
            crate::Error::Parse { location, message } => crate::Error::Parse {
                location: format!("{}:{location}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Structured right-triangle mesh of a rectangle without inclusions.
    pub fn structured_rectangle(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Mesh {
        generate::structured_grid(x0, y0, x1, y1, nx, ny)
    }
}

#[cfg(test)]
mod tests;
