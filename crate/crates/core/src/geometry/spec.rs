use serde::{Deserialize, Serialize};

use super::shape::{boundary_gap, inner_clearance, Shape};
use crate::error::{Error, Result};

/// Outer domain, inclusions and target mesh size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub outer: Shape,
    #[serde(default)]
    pub inclusions: Vec<Shape>,
    pub target_h: f64,
}

impl GeometrySpec {
    pub fn new(outer: Shape, inclusions: Vec<Shape>, target_h: f64) -> Self {
        Self {
            outer,
            inclusions,
            target_h,
        }
    }

    /// Unit disk with `count` disks of radius `radius` placed on the hexagonal
    /// lattice points nearest the origin.
    pub fn unit_disk_lattice(count: usize, radius: f64, spacing: f64, target_h: f64) -> Self {
        let inclusions = hex_lattice(count, spacing)
            .into_iter()
            .map(|[x, y]| Shape::disk(x, y, radius))
            .collect();
        Self::new(Shape::disk(0.0, 0.0, 1.0), inclusions, target_h)
    }

    /// Checks shape validity, containment and the two-cell clearance rule.
    pub fn validate(&self) -> Result<()> {
        if !(self.target_h > 0.0) || !self.target_h.is_finite() {
            return Err(Error::Geometry(format!(
                "target_h must be positive, got {}",
                self.target_h
            )));
        }
        if let Shape::Polygon { .. } = self.outer {
            return Err(Error::Geometry(
                "outer domain must be a rectangle or a disk".into(),
            ));
        }
        self.outer.check()?;
        let min_gap = 2.0 * self.target_h;
        for (i, inc) in self.inclusions.iter().enumerate() {
            inc.check()?;
            match inner_clearance(&self.outer, inc) {
                None => {
                    return Err(Error::Geometry(format!(
                        "inclusion {} is not strictly inside the outer domain",
                        i + 1
                    )))
                }
                Some(gap) if gap < min_gap => {
                    return Err(Error::Geometry(format!(
                        "inclusion {} is {gap:.3e} from the outer boundary, need at least 2*target_h = {min_gap:.3e}",
                        i + 1
                    )))
                }
                _ => {}
            }
        }
        for i in 0..self.inclusions.len() {
            for j in i + 1..self.inclusions.len() {
                match boundary_gap(&self.inclusions[i], &self.inclusions[j]) {
                    None => {
                        return Err(Error::Geometry(format!(
                            "inclusions {} and {} overlap",
                            i + 1,
                            j + 1
                        )))
                    }
                    Some(gap) if gap < min_gap => {
                        return Err(Error::Geometry(format!(
                            "inclusions {} and {} are {gap:.3e} apart, need at least 2*target_h = {min_gap:.3e}",
                            i + 1,
                            j + 1
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// The `count` points of a hexagonal lattice closest to the origin, ordered by
/// distance and then angle.
pub fn hex_lattice(count: usize, spacing: f64) -> Vec<[f64; 2]> {
    let reach = (count as f64).sqrt() as i64 + 3;
    let mut pts: Vec<(f64, f64, [f64; 2])> = Vec::new();
    let row_h = spacing * 3f64.sqrt() / 2.0;
    for j in -reach..=reach {
        for i in -reach..=reach {
            let x = spacing * (i as f64 + 0.5 * j as f64);
            let y = row_h * j as f64;
            let angle = y.atan2(x);
            // round the radius so lattice-symmetric points tie exactly
            let r = (x.hypot(y) / spacing * 1e9).round();
            pts.push((r, angle, [x, y]));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.into_iter().take(count).map(|p| p.2).collect()
}
