use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{check_dim, Error, Result};

/// A regular lattice over a bounding box, used as a brute-force oracle.
/// Results are resolution-dependent approximations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOracle {
    pub lo: Point,
    pub hi: Point,
    /// Nodes per axis.
    pub resolution: usize,
}

impl GridOracle {
    pub fn new(lo: impl Into<Point>, hi: impl Into<Point>, resolution: usize) -> Result<Self> {
        let g = Self {
            lo: lo.into(),
            hi: hi.into(),
            resolution,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.lo.dim(), self.hi.dim())?;
        if self.resolution < 2 {
            return Err(Error::InvalidInput(format!(
                "grid resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        if self.lo.dim() == 0
            || self
                .lo
                .coords()
                .iter()
                .zip(self.hi.coords())
                .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidInput("grid box needs finite lo < hi".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.resolution - 1) as f64
    }

    /// Length of one cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.spacing(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn num_nodes(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    /// Node with the given flat index; axis 0 varies fastest.
    pub fn node(&self, mut index: usize) -> Point {
        let mut p = Point::zeros(self.dim());
        for k in 0..self.dim() {
            let i = index % self.resolution;
            index /= self.resolution;
            p.coords_mut()[k] = self.lo[k] + i as f64 * self.spacing(k);
        }
        p
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.num_nodes()).map(|i| self.node(i))
    }

    /// Smallest distance from `x` to a node satisfying `pred`.
    pub fn nearest_distance(&self, x: &Point, pred: impl Fn(&Point) -> bool) -> Result<Option<f64>> {
        self.validate()?;
        check_dim(self.dim(), x.dim())?;
        Ok(self
            .nodes()
            .filter(|p| pred(p))
            .map(|p| p.distance(x))
            .min_by(f64::total_cmp))
    }

    fn mask_2d(&self, pred: impl Fn(&Point) -> bool) -> Result<Vec<bool>> {
        self.validate()?;
        check_dim(2, self.dim())?;
        Ok(self.nodes().map(|p| pred(&p)).collect())
    }

    fn flood(&self, mask: &[bool], seen: &mut [bool], start: usize, mut visit: impl FnMut(usize)) {
        let r = self.resolution;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            visit(c);
            let (x, y) = (c % r, c / r);
            let mut push = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if x > 0 {
                push(c - 1);
            }
            if x + 1 < r {
                push(c + 1);
            }
            if y > 0 {
                push(c - r);
            }
            if y + 1 < r {
                push(c + r);
            }
        }
    }

    /// Number of 4-connected components of the nodes satisfying `pred`.
    pub fn component_count(&self, pred: impl Fn(&Point) -> bool) -> Result<usize> {
        let mask = self.mask_2d(pred)?;
        let mut seen = vec![false; mask.len()];
        let mut count = 0;
        for c in 0..mask.len() {
            if mask[c] && !seen[c] {
                count += 1;
                self.flood(&mask, &mut seen, c, |_| {});
            }
        }
        Ok(count)
    }

    /// Whether some 4-connected path of nodes inside `set` joins a node in
    /// `source` to a node in `sink`.
    pub fn connects(
        &self,
        set: impl Fn(&Point) -> bool,
        source: impl Fn(&Point) -> bool,
        sink: impl Fn(&Point) -> bool,
    ) -> Result<bool> {
        let nodes: Vec<Point> = {
            self.validate()?;
            check_dim(2, self.dim())?;
            self.nodes().collect()
        };
        let mask: Vec<bool> = nodes.iter().map(&set).collect();
        let is_sink: Vec<bool> = nodes.iter().map(sink).collect();
        let mut seen = vec![false; mask.len()];
        let mut hit = false;
        for c in 0..mask.len() {
            if mask[c] && !seen[c] && source(&nodes[c]) {
                self.flood(&mask, &mut seen, c, |n| hit |= is_sink[n]);
                if hit {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// True iff the nodes satisfying `pred` form exactly one 4-connected
/// component (an empty set is not connected).
pub fn grid_path_connected(pred: impl Fn(&Point) -> bool, oracle: &GridOracle) -> Result<bool> {
    Ok(oracle.component_count(pred)? == 1)
}
