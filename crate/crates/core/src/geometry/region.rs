use serde::{Deserialize, Serialize};

use super::qp;
use super::{ConvexBody, Hyperplane, Point};
use crate::error::{check_dim, Error, Result};

/// Tolerance for the `x ∈ F` precondition of [`distance_to_complement`].
pub const FEASIBLE_TOLERANCE: f64 = 1e-9;

/// An axis-aligned box with `lo < hi` componentwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Point,
    pub hi: Point,
}

impl AxisBox {
    pub fn new(lo: impl Into<Point>, hi: impl Into<Point>) -> Result<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        check_dim(lo.dim(), hi.dim())?;
        if lo.dim() == 0 || lo.coords().iter().zip(hi.coords()).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput(format!("box needs lo < hi, got {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// Box `center ± half_width` on every axis.
    pub fn around(center: &Point, half_width: f64) -> Result<Self> {
        Self::new(
            Point::new(center.coords().iter().map(|c| c - half_width)),
            Point::new(center.coords().iter().map(|c| c + half_width)),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn strictly_contains(&self, x: &Point) -> bool {
        (0..self.dim()).all(|k| self.lo[k] < x[k] && x[k] < self.hi[k])
    }

    pub fn closed_contains(&self, x: &Point) -> bool {
        (0..self.dim()).all(|k| self.lo[k] <= x[k] && x[k] <= self.hi[k])
    }

    /// Distance from an inside point to the box boundary; 0 outside.
    pub fn clearance(&self, x: &Point) -> f64 {
        (0..self.dim())
            .map(|k| (x[k] - self.lo[k]).min(self.hi[k] - x[k]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Distance from `x` to the closed box (per-axis clamp).
    pub fn distance(&self, x: &Point) -> f64 {
        (0..self.dim())
            .map(|k| {
                let c = x[k].clamp(self.lo[k], self.hi[k]);
                (x[k] - c) * (x[k] - c)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn corners(&self) -> Vec<Point> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                Point::new((0..n).map(|k| {
                    if mask >> k & 1 == 1 {
                        self.hi[k]
                    } else {
                        self.lo[k]
                    }
                }))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionShape {
    /// `{x : normal·x < offset}` for every constraint; no constraints is all of ℝⁿ.
    OpenHalfspaceIntersection { constraints: Vec<Hyperplane> },
    /// Union of open boxes.
    OpenBoxUnion { boxes: Vec<AxisBox> },
}

/// Whether boundaries belong to the set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    #[default]
    Open,
    /// The closure: every strict inequality becomes non-strict.
    Closed,
}

/// The constraint set `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub shape: RegionShape,
    #[serde(default)]
    pub membership: Membership,
}

impl Region {
    pub fn halfspaces(constraints: Vec<Hyperplane>) -> Result<Self> {
        let region = Region {
            shape: RegionShape::OpenHalfspaceIntersection { constraints },
            membership: Membership::Open,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn boxes(boxes: Vec<AxisBox>) -> Result<Self> {
        let region = Region {
            shape: RegionShape::OpenBoxUnion { boxes },
            membership: Membership::Open,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn whole_space() -> Self {
        Region {
            shape: RegionShape::OpenHalfspaceIntersection {
                constraints: Vec::new(),
            },
            membership: Membership::Open,
        }
    }

    pub fn closed(mut self) -> Self {
        self.membership = Membership::Closed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { constraints } => {
                if let Some(first) = constraints.first() {
                    for c in constraints {
                        check_dim(first.normal.dim(), c.normal.dim())?;
                        if !(c.normal.norm() > 0.0) || !c.offset.is_finite() {
                            return Err(Error::InvalidInput("degenerate constraint".into()));
                        }
                    }
                }
                Ok(())
            }
            RegionShape::OpenBoxUnion { boxes } => {
                let Some(first) = boxes.first() else {
                    return Err(Error::EmptyBody("box union with no boxes"));
                };
                for b in boxes {
                    check_dim(first.dim(), b.dim())?;
                    AxisBox::new(b.lo.clone(), b.hi.clone())?;
                }
                Ok(())
            }
        }
    }

    /// Ambient dimension, or `None` for the unconstrained whole space.
    pub fn dim(&self) -> Option<usize> {
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { constraints } => {
                constraints.first().map(|c| c.normal.dim())
            }
            RegionShape::OpenBoxUnion { boxes } => boxes.first().map(AxisBox::dim),
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { .. } => true,
            RegionShape::OpenBoxUnion { boxes } => boxes.len() == 1,
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(&self.shape, RegionShape::OpenHalfspaceIntersection { constraints } if constraints.is_empty())
    }

    fn check(&self, x: &Point) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, x.dim()),
            None => Ok(()),
        }
    }

    /// Membership; strict unless the region is flagged closed.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        self.check(x)?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &Point) -> bool {
        let closed = self.membership == Membership::Closed;
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { constraints } => constraints.iter().all(|c| {
                let v = c.normal.dot(x);
                if closed {
                    v <= c.offset
                } else {
                    v < c.offset
                }
            }),
            RegionShape::OpenBoxUnion { boxes } => boxes.iter().any(|b| {
                if closed {
                    b.closed_contains(x)
                } else {
                    b.strictly_contains(x)
                }
            }),
        }
    }

    /// Lower bound on `d(x, ℝⁿ∖D)`, 0 outside `D`. Exact for half-space
    /// intersections; for box unions the best single containing box.
    pub fn clearance(&self, x: &Point) -> Result<f64> {
        self.check(x)?;
        Ok(self.clearance_unchecked(x))
    }

    pub(crate) fn clearance_unchecked(&self, x: &Point) -> f64 {
        if !self.contains_unchecked(x) {
            return 0.0;
        }
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { constraints } => constraints
                .iter()
                .map(|c| ((c.offset - c.normal.dot(x)) / c.normal.norm()).max(0.0))
                .fold(f64::INFINITY, f64::min),
            RegionShape::OpenBoxUnion { boxes } => boxes
                .iter()
                .map(|b| b.clearance(x))
                .fold(0.0, f64::max),
        }
    }

    /// `d(y, D)`, exact for both shapes.
    pub fn distance(&self, y: &Point) -> Result<f64> {
        self.check(y)?;
        match &self.shape {
            RegionShape::OpenHalfspaceIntersection { constraints } => {
                if constraints
                    .iter()
                    .all(|c| c.normal.dot(y) <= c.offset)
                {
                    return Ok(0.0);
                }
                if constraints.len() == 1 {
                    let c = &constraints[0];
                    return Ok((c.normal.dot(y) - c.offset) / c.normal.norm());
                }
                let normals: Vec<Point> = constraints.iter().map(|c| c.normal.clone()).collect();
                let offsets: Vec<f64> = constraints.iter().map(|c| c.offset).collect();
                let p = qp::project_onto_polyhedron(&normals, &offsets, y)?;
                Ok(p.distance(y))
            }
            RegionShape::OpenBoxUnion { boxes } => Ok(boxes
                .iter()
                .map(|b| b.distance(y))
                .fold(f64::INFINITY, f64::min)),
        }
    }
}

/// Membership test `x ∈ D`.
pub fn region_contains(region: &Region, x: &Point) -> Result<bool> {
    region.contains(x)
}

/// Lower bound on `d(x, F∖D)` for `x ∈ F`.
pub fn distance_to_complement(x: &Point, region: &Region, feasible: &ConvexBody) -> Result<f64> {
    let off = feasible.distance(x)?;
    if off > FEASIBLE_TOLERANCE {
        return Err(Error::OutsideFeasible { distance: off });
    }
    region.clearance(x)
}

/// `d(y, D)`.
pub fn distance_to_region(y: &Point, region: &Region) -> Result<f64> {
    region.distance(y)
}
