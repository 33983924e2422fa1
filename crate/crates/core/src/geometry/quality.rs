use super::shape::{dist, Point};
use super::Mesh;
use crate::error::{Error, Result};

/// Shape statistics of a triangulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    /// Smallest interior angle, in degrees.
    pub min_angle_deg: f64,
    /// Largest diameter-to-inradius ratio.
    pub max_aspect_ratio: f64,
    /// Largest element diameter.
    pub h: f64,
    /// Element attaining `max_aspect_ratio`.
    pub worst_element: usize,
}

/// Diameter over inradius of a triangle; `None` if it is degenerate.
pub fn triangle_aspect_ratio(p: [Point; 3]) -> Option<f64> {
    let [a, b, c] = p;
    let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    if !(area > 0.0) {
        return None;
    }
    let inradius = 2.0 * area / (la + lb + lc);
    Some(la.max(lb).max(lc) / inradius)
}

fn min_angle(p: [Point; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let (ux, uy, vx, vy) = (u[0] - o[0], u[1] - o[1], v[0] - o[0], v[1] - o[1]);
            (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
        })
        .fold(f64::INFINITY, f64::min)
        .to_degrees()
}

pub fn mesh_quality(mesh: &Mesh) -> Result<QualityReport> {
    let mut report = QualityReport {
        min_angle_deg: f64::INFINITY,
        max_aspect_ratio: 0.0,
        h: 0.0,
        worst_element: 0,
    };
    for t in 0..mesh.triangles.len() {
        let p = mesh.triangle_points(t);
        let rho = triangle_aspect_ratio(p)
            .ok_or_else(|| Error::validation(format!("triangle {t} is degenerate (zero area)")))?;
        if rho > report.max_aspect_ratio {
            report.max_aspect_ratio = rho;
            report.worst_element = t;
        }
        report.min_angle_deg = report.min_angle_deg.min(min_angle(p));
        report.h = report.h.max(dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0])));
    }
    Ok(report)
}
