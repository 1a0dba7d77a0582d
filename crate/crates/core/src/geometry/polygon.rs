use super::Point;
use crate::error::{Error, Result};

/// Sides of the polygon used to outer-approximate a disc.
pub const DISC_SIDES: usize = 96;

/// A convex polygon in the plane, vertices counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = ap[0] - t * ab[0];
    let dy = ap[1] - t * ab[1];
    (dx * dx + dy * dy).sqrt()
}

impl ConvexPolygon {
    /// Convex hull by Andrew's monotone chain. Degenerate inputs give
    /// polygons with one or two vertices.
    pub fn hull(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyBody("hull of no points"));
        }
        let mut pts = Vec::with_capacity(points.len());
        for p in points {
            if p.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: p.dim(),
                });
            }
            pts.push([p[0], p[1]]);
        }
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Ok(Self { vertices: pts });
        }
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Ok(Self { vertices: lower })
    }

    /// Vertices of a regular polygon circumscribed about the disc, so the
    /// polygon contains it.
    pub fn disc_outer_points(center: &Point, radius: f64) -> Vec<Point> {
        if radius == 0.0 {
            return vec![center.clone()];
        }
        let n = DISC_SIDES;
        let r = radius / (std::f64::consts::PI / n as f64).cos();
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                Point::from([center[0] + r * a.cos(), center[1] + r * a.sin()])
            })
            .collect()
    }

    /// Points whose hull contains the Minkowski sum of `points`' hull with a
    /// disc of the given radius.
    pub fn inflated_points(points: &[Point], radius: f64) -> Vec<Point> {
        points
            .iter()
            .flat_map(|p| Self::disc_outer_points(p, radius))
            .collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.vertices.iter().map(|v| Point::from(*v))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Distance from `x` to the closed polygon.
    pub fn distance(&self, x: &Point) -> f64 {
        let p = [x[0], x[1]];
        if self.vertices.len() >= 3 && self.closed_contains_tol(p, 0.0) {
            return 0.0;
        }
        match self.vertices.len() {
            1 => segment_distance(p, self.vertices[0], self.vertices[0]),
            _ => (0..self.vertices.len())
                .map(|k| {
                    let a = self.vertices[k];
                    let b = self.vertices[(k + 1) % self.vertices.len()];
                    segment_distance(p, a, b)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn closed_contains_tol(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % n];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, p) >= -tol * len
        })
    }

    /// Closed membership up to `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        if self.vertices.len() < 3 {
            return self.distance(x) <= tol;
        }
        self.closed_contains_tol([x[0], x[1]], tol)
    }

    /// Open membership; degenerate polygons have empty interior.
    pub fn strictly_contains(&self, x: &Point) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let p = [x[0], x[1]];
        (0..n).all(|k| cross(self.vertices[k], self.vertices[(k + 1) % n], p) > 0.0)
    }

    /// Axis-aligned bounding box `([xmin, ymin], [xmax, ymax])`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}
