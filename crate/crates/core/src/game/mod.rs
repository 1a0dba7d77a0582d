//! Vector-payoff games, mixed actions, response sets and the checks on
//! safe actions and approachability.

mod dual;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConvexBody, Point, Region, RegionShape};

pub use dual::{
    check_convex_approachable, check_scenario, default_directions, dual_check, sphere_directions,
    DualCheck, ScenarioCheck,
};
pub use lp::{solve_matrix_game, GameValueSolution, MatrixGameSolver, SOLVER_TOLERANCE};

/// Tolerance on the sum of a mixed action's weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A probability vector over one player's actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMixedAction("no actions".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMixedAction(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidMixedAction(format!("weights sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidMixedAction(format!(
                "cannot normalize {weights:?}"
            )));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Self(weights))
    }

    pub fn pure(len: usize, action: usize) -> Result<Self> {
        if action >= len {
            return Err(Error::InvalidMixedAction(format!(
                "action {action} out of range for {len} actions"
            )));
        }
        let mut w = vec![0.0; len];
        w[action] = 1.0;
        Ok(Self(w))
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform mix over no actions");
        Self(vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn weight(&self, action: usize) -> f64 {
        self.0[action]
    }

    /// Actions with positive weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, _)| k)
    }

    /// The action at which the cumulative weight first exceeds `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (k, &w) in self.0.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = k;
                if u < acc {
                    return k;
                }
            }
        }
        last
    }
}

impl TryFrom<Vec<f64>> for MixedAction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MixedAction::new(v)
    }
}

impl From<MixedAction> for Vec<f64> {
    fn from(m: MixedAction) -> Self {
        m.0
    }
}

/// Serialized form of a game: action names and a nested payoff array
/// `payoff[i][j] = U(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDef {
    #[serde(default)]
    pub row_actions: Vec<String>,
    #[serde(default)]
    pub col_actions: Vec<String>,
    pub payoff: Vec<Vec<Vec<f64>>>,
}

/// A finite two-player game with payoffs in ℝⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDef", into = "GameDef")]
pub struct VectorPayoffGame {
    row_actions: Vec<String>,
    col_actions: Vec<String>,
    dim: usize,
    payoff: Vec<Point>,
    payoff_bound: f64,
}

impl VectorPayoffGame {
    /// Builds a game from `payoff[i][j]`. Empty name lists get defaults.
    pub fn new(
        row_actions: Vec<String>,
        col_actions: Vec<String>,
        payoff: Vec<Vec<Point>>,
    ) -> Result<Self> {
        let rows = payoff.len();
        let cols = payoff.first().map_or(0, Vec::len);
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidGame(format!(
                "both players need at least two actions, got {rows}×{cols}"
            )));
        }
        if payoff.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGame("ragged payoff array".into()));
        }
        let dim = payoff[0][0].dim();
        if dim == 0 {
            return Err(Error::InvalidGame("payoff dimension must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(rows * cols);
        let mut bound = 0.0f64;
        for r in payoff {
            for u in r {
                check_dim(dim, u.dim())?;
                if !u.is_finite() {
                    return Err(Error::InvalidGame("non-finite payoff".into()));
                }
                bound = u.coords().iter().fold(bound, |b, c| b.max(c.abs()));
                flat.push(u);
            }
        }
        let names = |given: Vec<String>, n: usize, prefix: &str| -> Result<Vec<String>> {
            if given.is_empty() {
                Ok((0..n).map(|k| format!("{prefix}{k}")).collect())
            } else if given.len() == n {
                Ok(given)
            } else {
                Err(Error::InvalidGame(format!(
                    "{} names for {n} actions",
                    given.len()
                )))
            }
        };
        Ok(Self {
            row_actions: names(row_actions, rows, "r")?,
            col_actions: names(col_actions, cols, "c")?,
            dim,
            payoff: flat,
            payoff_bound: bound,
        })
    }

    /// Convenience constructor from plain arrays.
    pub fn from_arrays<const N: usize>(
        row_actions: &[&str],
        col_actions: &[&str],
        payoff: &[&[[f64; N]]],
    ) -> Result<Self> {
        Self::new(
            row_actions.iter().map(|s| s.to_string()).collect(),
            col_actions.iter().map(|s| s.to_string()).collect(),
            payoff
                .iter()
                .map(|r| r.iter().map(|u| Point::from(*u)).collect())
                .collect(),
        )
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.row_actions.len()
    }

    #[inline]
    pub fn num_cols(&self) -> usize {
        self.col_actions.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn payoff(&self, i: usize, j: usize) -> &Point {
        &self.payoff[i * self.num_cols() + j]
    }

    /// `M = max |U(i,j)_k|`
    pub fn payoff_bound(&self) -> f64 {
        self.payoff_bound
    }

    /// Step-size scale of the game: `max(M, diam F / 2)`.
    pub fn payoff_scale(&self) -> f64 {
        let mut diam = 0.0f64;
        for (k, a) in self.payoff.iter().enumerate() {
            for b in &self.payoff[k + 1..] {
                diam = diam.max(a.distance(b));
            }
        }
        self.payoff_bound.max(diam / 2.0)
    }

    pub fn row_actions(&self) -> &[String] {
        &self.row_actions
    }

    pub fn col_actions(&self) -> &[String] {
        &self.col_actions
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_actions.iter().position(|n| n == name)
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_actions.iter().position(|n| n == name)
    }

    /// `U(p, j) = Σᵢ p(i) U(i, j)`
    pub fn row_mix_payoff(&self, p: &MixedAction, j: usize) -> Point {
        let mut u = Point::zeros(self.dim);
        for i in p.support() {
            u.axpy(p.weight(i), self.payoff(i, j));
        }
        u
    }

    /// Row-major matrix of `λ·U(i, j)` written into `out`.
    pub fn scalarize_into(&self, direction: &Point, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.payoff.iter().map(|u| direction.dot(u)));
    }

    pub fn scalarized(&self, direction: &Point) -> Vec<Vec<f64>> {
        (0..self.num_rows())
            .map(|i| {
                (0..self.num_cols())
                    .map(|j| direction.dot(self.payoff(i, j)))
                    .collect()
            })
            .collect()
    }

    fn check_row(&self, p: &MixedAction) -> Result<()> {
        check_dim(self.num_rows(), p.len())
    }

    fn check_col(&self, q: &MixedAction) -> Result<()> {
        check_dim(self.num_cols(), q.len())
    }
}

impl TryFrom<GameDef> for VectorPayoffGame {
    type Error = Error;
    fn try_from(def: GameDef) -> Result<Self> {
        let payoff = def
            .payoff
            .into_iter()
            .map(|r| r.into_iter().map(Point::from).collect())
            .collect();
        VectorPayoffGame::new(def.row_actions, def.col_actions, payoff)
    }
}

impl From<VectorPayoffGame> for GameDef {
    fn from(g: VectorPayoffGame) -> Self {
        let cols = g.num_cols();
        GameDef {
            payoff: g
                .payoff
                .chunks(cols)
                .map(|r| r.iter().map(|u| u.coords().to_vec()).collect())
                .collect(),
            row_actions: g.row_actions,
            col_actions: g.col_actions,
        }
    }
}

/// `U(p, q) = Σᵢⱼ p(i) q(j) U(i, j)`
pub fn expected_payoff(game: &VectorPayoffGame, p: &MixedAction, q: &MixedAction) -> Result<Point> {
    game.check_row(p)?;
    game.check_col(q)?;
    let mut u = Point::zeros(game.dim());
    for i in p.support() {
        for j in q.support() {
            u.axpy(p.weight(i) * q.weight(j), game.payoff(i, j));
        }
    }
    Ok(u)
}

/// `R1(p) = conv{U(p, j) : j ∈ J}`
pub fn response_set(game: &VectorPayoffGame, p: &MixedAction) -> Result<ConvexBody> {
    game.check_row(p)?;
    ConvexBody::hull((0..game.num_cols()).map(|j| game.row_mix_payoff(p, j)))
}

/// `F = conv{U(i, j)}`
pub fn feasible_set(game: &VectorPayoffGame) -> ConvexBody {
    ConvexBody::hull(game.payoff.iter().cloned()).expect("a game has at least four payoffs")
}

/// Pure actions whose every outcome lies in `D`, ascending.
pub fn find_safe_actions(game: &VectorPayoffGame, region: &Region) -> Result<Vec<usize>> {
    let mut safe = Vec::new();
    for i in 0..game.num_rows() {
        let mut ok = true;
        for j in 0..game.num_cols() {
            ok &= region.contains(game.payoff(i, j))?;
        }
        if ok {
            safe.push(i);
        }
    }
    Ok(safe)
}

/// Points of a response set sampled on a simplex lattice over the columns.
fn response_samples(game: &VectorPayoffGame, s: &MixedAction, steps: usize) -> Vec<Point> {
    let cols = game.num_cols();
    let vertices: Vec<Point> = (0..cols).map(|j| game.row_mix_payoff(s, j)).collect();
    let mut out = Vec::new();
    let mut counts = vec![0usize; cols];
    fn rec(
        k: usize,
        left: usize,
        steps: usize,
        counts: &mut Vec<usize>,
        vertices: &[Point],
        out: &mut Vec<Point>,
    ) {
        if k + 1 == counts.len() {
            counts[k] = left;
            let mut p = Point::zeros(vertices[0].dim());
            for (c, v) in counts.iter().zip(vertices) {
                p.axpy(*c as f64 / steps as f64, v);
            }
            out.push(p);
            return;
        }
        for c in 0..=left {
            counts[k] = c;
            rec(k + 1, left - c, steps, counts, vertices, out);
        }
    }
    rec(0, steps, steps, &mut counts, &vertices, &mut out);
    out
}

fn lattice_steps(cols: usize) -> usize {
    match cols {
        0..=2 => 400,
        3 => 60,
        4 => 20,
        _ => 8,
    }
}

/// Whether `R1(s) ⊆ D`: exact on the vertices for half-space regions, on
/// lattice samples for box unions.
pub fn response_in_region(game: &VectorPayoffGame, region: &Region, s: &MixedAction) -> Result<bool> {
    game.check_row(s)?;
    let points = match &region.shape {
        RegionShape::OpenHalfspaceIntersection { .. } => {
            (0..game.num_cols()).map(|j| game.row_mix_payoff(s, j)).collect()
        }
        RegionShape::OpenBoxUnion { .. } => response_samples(game, s, lattice_steps(game.num_cols())),
    };
    for p in &points {
        if !region.contains(p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lower bound on `δ = d(F∖D, R1(s))`.
///
/// For half-space regions this is the least clearance over the vertices of
/// `R1(s)`; for box unions the least clearance over lattice samples of
/// `R1(s)`. The unconstrained region gives `+∞`.
pub fn safety_gap(game: &VectorPayoffGame, region: &Region, s: &MixedAction) -> Result<f64> {
    game.check_row(s)?;
    for i in s.support() {
        for j in 0..game.num_cols() {
            if !region.contains(game.payoff(i, j))? {
                return Err(Error::UnsafeSupport { action: i });
            }
        }
    }
    if region.is_whole_space() {
        return Ok(f64::INFINITY);
    }
    let points = match &region.shape {
        RegionShape::OpenHalfspaceIntersection { .. } => {
            (0..game.num_cols()).map(|j| game.row_mix_payoff(s, j)).collect()
        }
        RegionShape::OpenBoxUnion { .. } => response_samples(game, s, lattice_steps(game.num_cols())),
    };
    let mut gap = f64::INFINITY;
    for v in &points {
        gap = gap.min(region.clearance(v)?);
    }
    Ok(gap)
}
