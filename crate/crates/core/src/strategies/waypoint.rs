use serde::{Deserialize, Serialize};

use super::blackwell::{BlackwellState, SeparationCertificate};
use crate::error::{check_dim, Error, Result};
use crate::game::{check_convex_approachable, response_set, MixedAction, VectorPayoffGame};
use crate::geometry::{
    ConvexBody, ConvexPolygon, GridOracle, Point, Region, RegionShape,
};

/// An open intermediate target of the waypoint strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Checkpoint {
    Region { region: Region },
    /// The interior of a convex body.
    Body { body: ConvexBody },
}

impl Checkpoint {
    /// Open membership.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        match self {
            Checkpoint::Region { region } => {
                let mut open = region.clone();
                open.membership = crate::geometry::Membership::Open;
                open.contains(x)
            }
            Checkpoint::Body { body } => body.interior_contains(x),
        }
    }

    /// Membership in the closure, up to `tol`.
    pub fn closure_contains(&self, x: &Point, tol: f64) -> Result<bool> {
        match self {
            Checkpoint::Region { region } => Ok(region.distance(x)? <= tol),
            Checkpoint::Body { body } => body.contains(x, tol),
        }
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        match self {
            Checkpoint::Region { region } => region.distance(x),
            Checkpoint::Body { body } => body.distance(x),
        }
    }

    /// Planar points whose hull contains the `radius`-neighbourhood of the
    /// checkpoint, or `None` if it is unbounded.
    fn outer_points(&self, radius: f64) -> Result<Option<Vec<Point>>> {
        let base = match self {
            Checkpoint::Region { region } => match &region.shape {
                RegionShape::OpenBoxUnion { boxes } => {
                    boxes.iter().flat_map(|b| b.corners()).collect::<Vec<_>>()
                }
                RegionShape::OpenHalfspaceIntersection { .. } => return Ok(None),
            },
            Checkpoint::Body { body } => match body {
                ConvexBody::Ball { center, radius: r } => {
                    return Ok(Some(ConvexPolygon::disc_outer_points(center, r + radius)))
                }
                other => other.vertices()?,
            },
        };
        Ok(Some(ConvexPolygon::inflated_points(&base, radius)))
    }
}

/// The plan of the waypoint strategy: a safe mix for the first stages,
/// then mixes that lead the average through open checkpoints, then
/// Blackwell's strategy towards the final target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub safe_mix: MixedAction,
    /// `x_1..x_m`; the last one is preferred by the final Blackwell phase
    /// whenever it is optimal there.
    pub phase_mixes: Vec<MixedAction>,
    /// `A_1..A_m`, with `A_m ⊆ A ∩ D`.
    pub checkpoints: Vec<Checkpoint>,
    pub initial_duration: u64,
    /// Closure of `A ∩ D`.
    pub final_target: ConvexBody,
    /// Margin `δ` of the path conditions.
    pub delta: f64,
}

impl WaypointPlan {
    pub fn validate(&self, game: &VectorPayoffGame) -> Result<()> {
        let m = self.phase_mixes.len();
        if m == 0 || m != self.checkpoints.len() {
            return Err(Error::InvalidInput(format!(
                "plan needs m ≥ 1 mixes and as many checkpoints, got {m} and {}",
                self.checkpoints.len()
            )));
        }
        if self.initial_duration == 0 {
            return Err(Error::InvalidInput("initial duration must be at least 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidInput("plan margin δ must be positive".into()));
        }
        check_dim(game.num_rows(), self.safe_mix.len())?;
        for x in &self.phase_mixes {
            check_dim(game.num_rows(), x.len())?;
        }
        check_dim(game.dim(), self.final_target.dim()?)?;
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.phase_mixes.len()
    }
}

/// Running state of the waypoint strategy.
#[derive(Clone, Debug)]
pub struct WaypointState {
    plan: WaypointPlan,
    current_phase: usize,
    phase_entry_stages: Vec<u64>,
    stage_count: u64,
    sum: Point,
    average: Point,
    inner: Option<BlackwellState>,
}

impl WaypointState {
    pub fn new(game: &VectorPayoffGame, plan: WaypointPlan) -> Result<Self> {
        plan.validate(game)?;
        Ok(Self {
            plan,
            current_phase: 0,
            phase_entry_stages: Vec::new(),
            stage_count: 0,
            sum: Point::zeros(game.dim()),
            average: Point::zeros(game.dim()),
            inner: None,
        })
    }

    pub fn plan(&self) -> &WaypointPlan {
        &self.plan
    }

    pub fn current_phase(&self) -> usize {
        self.current_phase
    }

    /// Realized `τ_0, τ_1, …`.
    pub fn phase_entry_stages(&self) -> &[u64] {
        &self.phase_entry_stages
    }

    pub fn average(&self) -> &Point {
        &self.average
    }

    fn enter_phase(&mut self, game: &VectorPayoffGame) -> Result<()> {
        self.phase_entry_stages.push(self.stage_count);
        self.current_phase += 1;
        if self.current_phase == self.plan.m() {
            let last = self.plan.phase_mixes[self.plan.m() - 1].clone();
            self.inner = Some(
                BlackwellState::new(game, self.plan.final_target.clone())?
                    .resume(self.stage_count, self.sum.clone())?
                    .with_fallback(last.clone())?
                    .with_preferred(last)?,
            );
        }
        Ok(())
    }

    pub fn step(
        &mut self,
        game: &VectorPayoffGame,
    ) -> Result<(MixedAction, Option<SeparationCertificate>)> {
        let m = self.plan.m();
        if self.current_phase == 0 {
            if self.stage_count < self.plan.initial_duration {
                return Ok((self.plan.safe_mix.clone(), None));
            }
            self.enter_phase(game)?;
        }
        while self.current_phase < m {
            let l = self.current_phase;
            let last_entry = *self.phase_entry_stages.last().expect("τ₀ recorded");
            if self.stage_count > last_entry && self.plan.checkpoints[l - 1].contains(&self.average)? {
                self.enter_phase(game)?;
            } else {
                return Ok((self.plan.phase_mixes[l - 1].clone(), None));
            }
        }
        self.inner.as_mut().expect("final phase has a Blackwell state").step(game)
    }

    pub fn observe(&mut self, payoff: &Point) {
        self.stage_count += 1;
        self.sum.axpy(1.0, payoff);
        self.average = self.sum.divided(self.stage_count as f64);
        if let Some(inner) = &mut self.inner {
            inner.observe(payoff);
        }
    }
}

/// Results for one transition `ℓ → ℓ+1` of the path conditions.
/// `None` marks a check that could not be run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCheck {
    pub ell: usize,
    /// Every grid path inside `conv[Ā_ℓ ∪ B(R1(x_{ℓ+1}), δ)]` from `Ā_ℓ` to
    /// `B(R1(x_{ℓ+1}), δ)` meets `A_{ℓ+1}`.
    pub separated: Option<bool>,
    /// The hull minus `A_{ℓ+1}` has more than one grid component.
    pub disconnected: Option<bool>,
    /// `conv[A_ℓ ∪ B(A_{ℓ+1}, δ)] ⊆ D` on the grid.
    pub hull_in_region: Option<bool>,
}

impl TransitionCheck {
    pub fn passes(&self) -> bool {
        self.separated == Some(true) && self.hull_in_region == Some(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointReport {
    pub transitions: Vec<TransitionCheck>,
    /// Approachability of the final target.
    pub final_target_approachable: Option<bool>,
    pub resolution: usize,
    pub approximate: bool,
}

impl WaypointReport {
    pub fn all_pass(&self) -> bool {
        self.final_target_approachable == Some(true) && self.transitions.iter().all(|t| t.passes())
    }
}

/// Checks the path conditions of a plan on a planar grid, with `A_0 = R1(x_0)`.
pub fn check_waypoint_conditions(
    plan: &WaypointPlan,
    game: &VectorPayoffGame,
    region: &Region,
    oracle: &GridOracle,
) -> Result<WaypointReport> {
    plan.validate(game)?;
    oracle.validate()?;
    let final_target_approachable = Some(check_convex_approachable(
        game,
        &plan.final_target,
        crate::game::default_directions(game.dim()),
        1e-9,
    )?);
    let planar = game.dim() == 2 && oracle.dim() == 2;
    let near = oracle.cell_diagonal() / 2.0;
    let delta = plan.delta;

    let a0 = Checkpoint::Body {
        body: response_set(game, &plan.safe_mix)?,
    };
    let mut transitions = Vec::new();
    for ell in 0..plan.m() {
        let here = if ell == 0 { &a0 } else { &plan.checkpoints[ell - 1] };
        let next = &plan.checkpoints[ell];
        let r1 = response_set(game, &plan.phase_mixes[ell])?;
        let mut check = TransitionCheck {
            ell,
            separated: None,
            disconnected: None,
            hull_in_region: None,
        };
        if planar {
            let r1_points = r1.vertices()?;
            if let Some(here_pts) = here.outer_points(0.0)? {
                let mut pts = here_pts;
                pts.extend(ConvexPolygon::inflated_points(&r1_points, delta));
                let hull = ConvexPolygon::hull(&pts)?;
                let in_set = |p: &Point| {
                    hull.contains(p, 0.0) && !next.contains(p).unwrap_or(false)
                };
                check.disconnected = Some(oracle.component_count(in_set)? > 1);
                check.separated = Some(!oracle.connects(
                    in_set,
                    |p| here.closure_contains(p, near).unwrap_or(false),
                    |p| r1.distance(p).is_ok_and(|d| d <= delta + near),
                )?);
            }
            if let (Some(mut pts), Some(next_pts)) = (here.outer_points(0.0)?, next.outer_points(delta)?) {
                pts.extend(next_pts);
                let hull = ConvexPolygon::hull(&pts)?;
                let mut inside = true;
                for p in oracle.nodes() {
                    if hull.contains(&p, 0.0) && !region.contains(&p)? {
                        inside = false;
                        break;
                    }
                }
                // the hull's own corners too, in case the grid misses a thin tip
                for v in hull.vertices() {
                    inside &= region.contains(&v)?;
                }
                check.hull_in_region = Some(inside);
            }
        }
        transitions.push(check);
    }
    Ok(WaypointReport {
        transitions,
        final_target_approachable,
        resolution: oracle.resolution,
        approximate: true,
    })
}
