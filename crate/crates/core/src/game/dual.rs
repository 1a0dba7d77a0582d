use serde::{Deserialize, Serialize};

use super::{find_safe_actions, safety_gap, MatrixGameSolver, MixedAction, VectorPayoffGame};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConvexBody, Point, Region};

/// Default number of sampled directions for a payoff dimension.
pub fn default_directions(dim: usize) -> usize {
    if dim <= 2 {
        512
    } else {
        4096
    }
}

/// Outcome of the sampled dual condition
/// `min_p max_j λ·U(p, j) ≤ support(target, λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    pub holds: bool,
    pub directions_checked: usize,
    pub worst_direction: Point,
    /// `max_λ (value(λ) − support(target, λ))` over the sampled directions.
    pub worst_violation: f64,
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Unit directions: equiangular on the circle, Halton points pushed through
/// Box–Muller and normalized in higher dimensions.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Point> {
    if dim == 1 {
        return vec![Point::from([1.0]), Point::from([-1.0])];
    }
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                Point::from([a.cos(), a.sin()])
            })
            .collect();
    }
    let pairs = dim.div_ceil(2);
    assert!(2 * pairs <= PRIMES.len(), "dimension {dim} too large for Halton directions");
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        let mut g = Vec::with_capacity(2 * pairs);
        for pair in 0..pairs {
            let u1 = radical_inverse(k, PRIMES[2 * pair]).max(1e-300);
            let u2 = radical_inverse(k, PRIMES[2 * pair + 1]);
            let r = (-2.0 * u1.ln()).sqrt();
            let a = 2.0 * std::f64::consts::PI * u2;
            g.push(r * a.cos());
            g.push(r * a.sin());
        }
        g.truncate(dim);
        if let Ok(d) = Point::from(g).normalized() {
            out.push(d);
        }
        k += 1;
    }
    out
}

struct Evaluator<'a> {
    game: &'a VectorPayoffGame,
    target: &'a ConvexBody,
    solver: MatrixGameSolver,
    scratch: Vec<f64>,
}

impl Evaluator<'_> {
    fn violation(&mut self, direction: &Point) -> Result<f64> {
        self.game.scalarize_into(direction, &mut self.scratch);
        let sol = self.solver.solve(
            self.game.num_rows(),
            self.game.num_cols(),
            &self.scratch,
            super::SOLVER_TOLERANCE,
        )?;
        Ok(sol.value - self.target.support(direction)?)
    }
}

/// Samples the dual approachability condition for a convex target and
/// refines around the worst direction found. A `false` verdict is exact
/// up to `tolerance`; `true` only covers the sampled directions.
pub fn dual_check(
    game: &VectorPayoffGame,
    target: &ConvexBody,
    directions: usize,
    tolerance: f64,
) -> Result<DualCheck> {
    check_dim(game.dim(), target.dim()?)?;
    if directions < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 directions, got {directions}"
        )));
    }
    let dim = game.dim();
    let mut eval = Evaluator {
        game,
        target,
        solver: MatrixGameSolver::new(),
        scratch: Vec::new(),
    };
    let mut checked = 0;
    let mut worst = (Point::unit(dim, 0), f64::NEG_INFINITY);
    for d in sphere_directions(dim, directions) {
        let v = eval.violation(&d)?;
        checked += 1;
        if v > worst.1 {
            worst = (d, v);
        }
    }
    if dim >= 2 {
        let mut scale = 0.5 / directions as f64 * 2.0 * std::f64::consts::PI;
        while scale > 1e-7 {
            let mut improved = true;
            let mut rounds = 0;
            while improved && rounds < 50 {
                improved = false;
                rounds += 1;
                for axis in 0..dim {
                    for sign in [-1.0, 1.0] {
                        let mut cand = worst.0.clone();
                        cand.coords_mut()[axis] += sign * scale;
                        let Ok(cand) = cand.normalized() else { continue };
                        let v = eval.violation(&cand)?;
                        checked += 1;
                        if v > worst.1 {
                            worst = (cand, v);
                            improved = true;
                        }
                    }
                }
            }
            scale *= 0.25;
        }
    }
    Ok(DualCheck {
        holds: worst.1 <= tolerance,
        directions_checked: checked,
        worst_direction: worst.0,
        worst_violation: worst.1,
    })
}

/// Sampled check that the convex `target` is approachable.
pub fn check_convex_approachable(
    game: &VectorPayoffGame,
    target: &ConvexBody,
    directions: usize,
    tolerance: f64,
) -> Result<bool> {
    Ok(dual_check(game, target, directions, tolerance)?.holds)
}

/// The two conditions of the constrained approachability theorem for a
/// convex target assumed to lie in the closure of `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCheck {
    pub safe_actions: Vec<usize>,
    /// Safety gap of the lowest-index safe action, 0 when there is none.
    pub safe_gap: f64,
    pub c1_holds: bool,
    pub c2_holds: bool,
    pub dual: DualCheck,
}

pub fn check_scenario(
    game: &VectorPayoffGame,
    target: &ConvexBody,
    region: &Region,
    directions: usize,
    tolerance: f64,
) -> Result<ScenarioCheck> {
    let safe_actions = find_safe_actions(game, region)?;
    let safe_gap = match safe_actions.first() {
        Some(&s) => safety_gap(game, region, &MixedAction::pure(game.num_rows(), s)?)?,
        None => 0.0,
    };
    let dual = dual_check(game, target, directions, tolerance)?;
    Ok(ScenarioCheck {
        c2_holds: !safe_actions.is_empty(),
        c1_holds: dual.holds,
        safe_actions,
        safe_gap,
        dual,
    })
}
