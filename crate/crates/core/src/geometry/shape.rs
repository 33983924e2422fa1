use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Planar region used either as the outer domain or as an inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
    /// Simple polygon; orientation is irrelevant.
    Polygon { vertices: Vec<Point> },
}

impl Shape {
    pub fn disk(cx: f64, cy: f64, r: f64) -> Self {
        Shape::Disk { cx, cy, r }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Shape::Rectangle { x0, y0, x1, y1 }
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        Shape::Polygon { vertices }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self {
            Shape::Rectangle { x0, y0, x1, y1 } => {
                if !(x0 < x1 && y0 < y1) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                    return Err(Error::Geometry(format!("degenerate rectangle {self:?}")));
                }
            }
            Shape::Disk { cx, cy, r } => {
                if !(*r > 0.0) || !cx.is_finite() || !cy.is_finite() || !r.is_finite() {
                    return Err(Error::Geometry(format!("degenerate disk {self:?}")));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
                }
                if polygon_area(vertices).abs() <= 0.0 {
                    return Err(Error::Geometry("polygon has zero area".into()));
                }
                let n = vertices.len();
                for i in 0..n {
                    for j in i + 1..n {
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segment_distance(a, b, c, d) <= 0.0 {
                            return Err(Error::Geometry(format!(
                                "polygon is not simple: edges {i} and {j} intersect"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Disk { cx, cy, r } => (p[0] - cx).hypot(p[1] - cy) - r,
            Shape::Rectangle { x0, y0, x1, y1 } => {
                let dx = (x0 - p[0]).max(p[0] - x1);
                let dy = (y0 - p[1]).max(p[1] - y1);
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            Shape::Polygon { vertices } => {
                let d = polygon_boundary_distance(vertices, p);
                if point_in_polygon(vertices, p) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Distance from `p` to the closed region (zero inside).
    pub fn distance(&self, p: Point) -> f64 {
        self.signed_distance(p).max(0.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Nearest point on the boundary curve.
    pub fn project(&self, p: Point) -> Point {
        match self {
            Shape::Disk { cx, cy, r } => {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                let len = dx.hypot(dy);
                if len == 0.0 {
                    [cx + r, *cy]
                } else {
                    [cx + r * dx / len, cy + r * dy / len]
                }
            }
            Shape::Rectangle { .. } | Shape::Polygon { .. } => {
                let verts = self.boundary_polygon(4);
                let n = verts.len();
                let mut best = (f64::INFINITY, p);
                for i in 0..n {
                    let q = closest_on_segment(verts[i], verts[(i + 1) % n], p);
                    let d = dist(q, p);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                best.1
            }
        }
    }

    /// Point where the boundary crosses the segment `a`-`b`, assuming the endpoints
    /// lie strictly on opposite sides.
    pub(crate) fn crossing(&self, a: Point, b: Point) -> Point {
        if let Shape::Disk { cx, cy, r } = self {
            let (ax, ay) = (a[0] - cx, a[1] - cy);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let qa = dx * dx + dy * dy;
            let qb = 2.0 * (ax * dx + ay * dy);
            let qc = ax * ax + ay * ay - r * r;
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
            for t in [(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)] {
                if (0.0..=1.0).contains(&t) {
                    let p = [a[0] + t * dx, a[1] + t * dy];
                    return self.project(p);
                }
            }
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let lo_inside = self.signed_distance(a) < 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let p = lerp(a, b, mid);
            if (self.signed_distance(p) < 0.0) == lo_inside {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lerp(a, b, 0.5 * (lo + hi))
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Rectangle { x0, y0, x1, y1 } => (x1 - x0) * (y1 - y0),
            Shape::Disk { r, .. } => std::f64::consts::PI * r * r,
            Shape::Polygon { vertices } => polygon_area(vertices).abs(),
        }
    }

    pub fn bbox(&self) -> [f64; 4] {
        match self {
            Shape::Rectangle { x0, y0, x1, y1 } => [*x0, *y0, *x1, *y1],
            Shape::Disk { cx, cy, r } => [cx - r, cy - r, cx + r, cy + r],
            Shape::Polygon { vertices } => vertices.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |b, v| [b[0].min(v[0]), b[1].min(v[1]), b[2].max(v[0]), b[3].max(v[1])],
            ),
        }
    }

    /// Corner points that a mesh must contain exactly.
    pub(crate) fn corners(&self) -> Vec<Point> {
        match self {
            Shape::Rectangle { x0, y0, x1, y1 } => {
                vec![[*x0, *y0], [*x1, *y0], [*x1, *y1], [*x0, *y1]]
            }
            Shape::Disk { .. } => Vec::new(),
            Shape::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Polygonal approximation of the boundary (exact for polygons and rectangles).
    pub(crate) fn boundary_polygon(&self, circle_segments: usize) -> Vec<Point> {
        match self {
            Shape::Disk { cx, cy, r } => (0..circle_segments)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / circle_segments as f64;
                    [cx + r * t.cos(), cy + r * t.sin()]
                })
                .collect(),
            _ => self.corners(),
        }
    }
}

/// Minimum distance between the boundaries of two shapes, or `None` when they overlap.
pub(crate) fn boundary_gap(a: &Shape, b: &Shape) -> Option<f64> {
    if let (Shape::Disk { cx, cy, r }, Shape::Disk { cx: dx, cy: dy, r: s }) = (a, b) {
        let gap = (cx - dx).hypot(cy - dy) - r - s;
        return (gap > 0.0).then_some(gap);
    }
    let pa = a.boundary_polygon(512);
    let pb = b.boundary_polygon(512);
    if pa.iter().any(|p| b.contains(*p)) || pb.iter().any(|p| a.contains(*p)) {
        return None;
    }
    let mut best = f64::INFINITY;
    for i in 0..pa.len() {
        for j in 0..pb.len() {
            let d = segment_distance(
                pa[i],
                pa[(i + 1) % pa.len()],
                pb[j],
                pb[(j + 1) % pb.len()],
            );
            best = best.min(d);
        }
    }
    (best > 0.0).then_some(best)
}

/// Distance from the boundary of `inner` to the boundary of `outer`, or `None` if
/// `inner` is not strictly inside `outer`.
pub(crate) fn inner_clearance(outer: &Shape, inner: &Shape) -> Option<f64> {
    let pts = inner.boundary_polygon(512);
    let mut best = f64::INFINITY;
    for p in &pts {
        let d = -outer.signed_distance(*p);
        if d <= 0.0 {
            return None;
        }
        best = best.min(d);
    }
    if let (Shape::Disk { .. }, Shape::Disk { .. }) = (outer, inner) {
        if let (Shape::Disk { cx, cy, r }, Shape::Disk { cx: dx, cy: dy, r: s }) = (outer, inner) {
            best = r - s - (cx - dx).hypot(cy - dy);
        }
    }
    (best > 0.0).then_some(best)
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

pub(crate) fn closest_on_segment(a: Point, b: Point, p: Point) -> Point {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a;
    }
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    [a[0] + t * dx, a[1] + t * dy]
}

pub(crate) fn point_segment_distance(a: Point, b: Point, p: Point) -> f64 {
    dist(closest_on_segment(a, b, p), p)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, b, c)
        .min(point_segment_distance(a, b, d))
        .min(point_segment_distance(c, d, a))
        .min(point_segment_distance(c, d, b))
}

fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn polygon_boundary_distance(v: &[Point], p: Point) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| point_segment_distance(v[i], v[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

fn point_in_polygon(v: &[Point], p: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_signed_distance_and_projection() {
        let d = Shape::disk(0.0, 0.0, 0.5);
        assert!((d.signed_distance([1.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!(d.contains([0.1, 0.1]));
        let p = d.project([0.3, 0.4]);
        assert!((p[0].hypot(p[1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn polygon_sign_and_crossing() {
        let sq = Shape::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([1.5, 0.5]));
        assert!((sq.signed_distance([0.5, 0.25]) + 0.25).abs() < 1e-15);
        let c = sq.crossing([0.5, 0.5], [1.5, 0.5]);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn disk_crossing_lies_on_circle() {
        let d = Shape::disk(0.2, -0.1, 0.3);
        let c = d.crossing([0.2, -0.1], [1.0, 0.5]);
        assert!((d.signed_distance(c)).abs() < 1e-14);
    }

    #[test]
    fn gaps() {
        let a = Shape::disk(0.0, 0.0, 0.1);
        let b = Shape::disk(0.5, 0.0, 0.1);
        assert!((boundary_gap(&a, &b).unwrap() - 0.3).abs() < 1e-14);
        assert!(boundary_gap(&a, &Shape::disk(0.15, 0.0, 0.1)).is_none());
        let outer = Shape::disk(0.0, 0.0, 1.0);
        assert!((inner_clearance(&outer, &b).unwrap() - 0.4).abs() < 1e-14);
        let sq = Shape::rectangle(0.0, 0.0, 1.0, 1.0);
        let poly = Shape::polygon(vec![[0.2, 0.2], [0.6, 0.2], [0.4, 0.7]]);
        assert!((inner_clearance(&sq, &poly).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn non_simple_polygon_rejected() {
        let bow = Shape::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(bow.check().is_err());
    }
}
