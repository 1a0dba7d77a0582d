use serde::{Deserialize, Serialize};

use super::qp;
use super::Point;
use crate::error::{check_dim, Error, Result};

/// The hyperplane `{x : normal·x = offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Point,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0 && n.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidInput(format!(
                "hyperplane normal must be finite and nonzero, got {normal:?}"
            )));
        }
        Ok(Self { normal, offset })
    }

    /// Signed value `normal·x − offset`.
    pub fn evaluate(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }

    /// `x ∈ ℋ⁺ = {normal·x ≥ offset}`
    pub fn in_upper(&self, x: &Point) -> bool {
        self.evaluate(x) >= 0.0
    }

    /// `x ∈ ℋ⁻ = {normal·x ≤ offset}`
    pub fn in_lower(&self, x: &Point) -> bool {
        self.evaluate(x) <= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `normal·x ≤ offset`
    Below,
    /// `normal·x ≥ offset`
    Above,
}

/// One closed half-space bounding a polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub plane: Hyperplane,
    pub side: Side,
}

impl Halfspace {
    /// Normalized to `a·x ≤ b`.
    pub fn as_upper_bound(&self) -> (Point, f64) {
        match self.side {
            Side::Below => (self.plane.normal.clone(), self.plane.offset),
            Side::Above => (self.plane.normal.scaled(-1.0), -self.plane.offset),
        }
    }
}

/// A closed convex set: target sets, the feasible set `F`, response sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexBody {
    SinglePoint { point: Point },
    Ball { center: Point, radius: f64 },
    HullOfPoints { points: Vec<Point> },
    HalfspacePolytope { halfspaces: Vec<Halfspace> },
}

impl ConvexBody {
    pub fn point(p: impl Into<Point>) -> Self {
        ConvexBody::SinglePoint { point: p.into() }
    }

    pub fn ball(center: impl Into<Point>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius {radius} must be ≥ 0")));
        }
        Ok(ConvexBody::Ball {
            center: center.into(),
            radius,
        })
    }

    /// Hull of the given points; exact duplicates are dropped.
    pub fn hull(points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut unique: Vec<Point> = Vec::new();
        for p in points {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        let body = ConvexBody::HullOfPoints { points: unique };
        body.validate()?;
        Ok(body)
    }

    pub fn polytope(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let body = ConvexBody::HalfspacePolytope { halfspaces };
        body.validate()?;
        Ok(body)
    }

    pub fn dim(&self) -> Result<usize> {
        match self {
            ConvexBody::SinglePoint { point } => Ok(point.dim()),
            ConvexBody::Ball { center, .. } => Ok(center.dim()),
            ConvexBody::HullOfPoints { points } => points
                .first()
                .map(Point::dim)
                .ok_or(Error::EmptyBody("hull of no points")),
            ConvexBody::HalfspacePolytope { halfspaces } => halfspaces
                .first()
                .map(|h| h.plane.normal.dim())
                .ok_or(Error::EmptyBody("polytope with no half-spaces")),
        }
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim()?;
        if dim == 0 {
            return Err(Error::InvalidInput("zero-dimensional body".into()));
        }
        match self {
            ConvexBody::SinglePoint { point } if !point.is_finite() => {
                Err(Error::InvalidInput("non-finite point".into()))
            }
            ConvexBody::Ball { center, radius } => {
                if !center.is_finite() || !(*radius >= 0.0 && radius.is_finite()) {
                    Err(Error::InvalidInput(format!("invalid ball radius {radius}")))
                } else {
                    Ok(())
                }
            }
            ConvexBody::HullOfPoints { points } => {
                for p in points {
                    check_dim(dim, p.dim())?;
                    if !p.is_finite() {
                        return Err(Error::InvalidInput("non-finite hull point".into()));
                    }
                }
                Ok(())
            }
            ConvexBody::HalfspacePolytope { halfspaces } => {
                for h in halfspaces {
                    check_dim(dim, h.plane.normal.dim())?;
                }
                self.vertices().map(|_| ())
            }
            _ => Ok(()),
        }
    }

    fn upper_bounds(halfspaces: &[Halfspace]) -> (Vec<Point>, Vec<f64>) {
        halfspaces.iter().map(Halfspace::as_upper_bound).unzip()
    }

    /// Finite generating set for the polytope variants; `None` for balls.
    pub fn vertices(&self) -> Result<Vec<Point>> {
        match self {
            ConvexBody::SinglePoint { point } => Ok(vec![point.clone()]),
            ConvexBody::HullOfPoints { points } => {
                if points.is_empty() {
                    Err(Error::EmptyBody("hull of no points"))
                } else {
                    Ok(points.clone())
                }
            }
            ConvexBody::HalfspacePolytope { halfspaces } => {
                let dim = self.dim()?;
                let (a, b) = Self::upper_bounds(halfspaces);
                qp::polytope_vertices(&a, &b, dim)
            }
            ConvexBody::Ball { .. } => Err(Error::InvalidInput(
                "a ball has no finite vertex set".into(),
            )),
        }
    }

    /// Nearest point of the body to `x`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim()?, x.dim())?;
        match self {
            ConvexBody::SinglePoint { point } => Ok(point.clone()),
            ConvexBody::Ball { center, radius } => {
                let diff = x - center;
                let d = diff.norm();
                if d <= *radius {
                    Ok(x.clone())
                } else {
                    let mut y = center.clone();
                    y.axpy(radius / d, &diff);
                    Ok(y)
                }
            }
            ConvexBody::HullOfPoints { points } => {
                if points.len() == 1 {
                    return Ok(points[0].clone());
                }
                qp::project_onto_hull(points, x).map(|(y, _)| y)
            }
            ConvexBody::HalfspacePolytope { halfspaces } => {
                let (a, b) = Self::upper_bounds(halfspaces);
                qp::project_onto_polyhedron(&a, &b, x)
            }
        }
    }

    /// Euclidean distance from `x` to the body.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        match self {
            ConvexBody::SinglePoint { point } => {
                check_dim(point.dim(), x.dim())?;
                Ok(point.distance(x))
            }
            ConvexBody::Ball { center, radius } => {
                check_dim(center.dim(), x.dim())?;
                Ok((center.distance(x) - radius).max(0.0))
            }
            _ => Ok(x.distance(&self.project(x)?)),
        }
    }

    /// Closed membership up to `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// `sup { direction·y : y ∈ body }`
    pub fn support(&self, direction: &Point) -> Result<f64> {
        check_dim(self.dim()?, direction.dim())?;
        if direction.norm() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        match self {
            ConvexBody::Ball { center, radius } => {
                Ok(direction.dot(center) + radius * direction.norm())
            }
            _ => Ok(self
                .vertices()?
                .iter()
                .map(|v| direction.dot(v))
                .fold(f64::NEG_INFINITY, f64::max)),
        }
    }

    /// Diameter of the body.
    pub fn diameter(&self) -> Result<f64> {
        match self {
            ConvexBody::Ball { radius, .. } => Ok(2.0 * radius),
            _ => {
                let v = self.vertices()?;
                let mut best = 0.0f64;
                for (k, a) in v.iter().enumerate() {
                    for b in &v[k + 1..] {
                        best = best.max(a.distance(b));
                    }
                }
                Ok(best)
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> Result<(Point, Point)> {
        match self {
            ConvexBody::Ball { center, radius } => {
                let lo = Point::new(center.coords().iter().map(|c| c - radius));
                let hi = Point::new(center.coords().iter().map(|c| c + radius));
                Ok((lo, hi))
            }
            _ => {
                let v = self.vertices()?;
                let dim = v[0].dim();
                let mut lo = v[0].clone();
                let mut hi = v[0].clone();
                for p in &v[1..] {
                    for k in 0..dim {
                        lo.coords_mut()[k] = lo[k].min(p[k]);
                        hi.coords_mut()[k] = hi[k].max(p[k]);
                    }
                }
                Ok((lo, hi))
            }
        }
    }

    /// Strict-interior test: open ball, strict polytope inequalities, and for
    /// hulls in the plane the interior of the hull polygon.
    pub fn interior_contains(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim()?, x.dim())?;
        match self {
            ConvexBody::SinglePoint { .. } => Ok(false),
            ConvexBody::Ball { center, radius } => Ok(center.distance(x) < *radius),
            ConvexBody::HalfspacePolytope { halfspaces } => Ok(halfspaces.iter().all(|h| {
                let (a, b) = h.as_upper_bound();
                a.dot(x) < b
            })),
            ConvexBody::HullOfPoints { points } => {
                if x.dim() == 2 {
                    let poly = super::polygon::ConvexPolygon::hull(points)?;
                    Ok(poly.strictly_contains(x))
                } else {
                    Err(Error::InvalidInput(
                        "interior of a point hull is only supported in the plane".into(),
                    ))
                }
            }
        }
    }
}

/// Distance from `x` to `body`.
pub fn distance_to_body(x: &Point, body: &ConvexBody) -> Result<f64> {
    body.distance(x)
}

/// Nearest point of `body` to `x`.
pub fn project(x: &Point, body: &ConvexBody) -> Result<Point> {
    body.project(x)
}

/// Support function of `body` in `direction`.
pub fn support(body: &ConvexBody, direction: &Point) -> Result<f64> {
    body.support(direction)
}
