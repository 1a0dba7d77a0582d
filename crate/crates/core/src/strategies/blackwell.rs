use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::game::{MatrixGameSolver, MixedAction, VectorPayoffGame, SOLVER_TOLERANCE};
use crate::geometry::{ConvexBody, Point};

/// Distance below which the average counts as inside the target.
pub const TARGET_TOLERANCE: f64 = 1e-12;

/// The separation data behind one Blackwell step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    /// Projection `y` of the average onto the target.
    pub projection_point: Point,
    /// Unit vector from `y` towards the average.
    pub direction: Point,
    /// `min_p max_j λ·U(p, j)`
    pub scalar_value: f64,
    pub chosen_mix: MixedAction,
}

impl SeparationCertificate {
    /// Largest `λ·U(p, j) − λ·y` over the opponent's pure actions.
    pub fn max_excess(&self, game: &VectorPayoffGame) -> f64 {
        let level = self.direction.dot(&self.projection_point);
        (0..game.num_cols())
            .map(|j| self.direction.dot(&game.row_mix_payoff(&self.chosen_mix, j)) - level)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Blackwell's strategy towards a convex target, driven by its own average.
#[derive(Clone, Debug)]
pub struct BlackwellState {
    stage_count: u64,
    sum: Point,
    running_average: Point,
    target: ConvexBody,
    fallback_action: MixedAction,
    preferred: Option<MixedAction>,
    solver: MatrixGameSolver,
    scratch: Vec<f64>,
}

impl BlackwellState {
    pub fn new(game: &VectorPayoffGame, target: ConvexBody) -> Result<Self> {
        check_dim(game.dim(), target.dim()?)?;
        Ok(Self {
            stage_count: 0,
            sum: Point::zeros(game.dim()),
            running_average: Point::zeros(game.dim()),
            target,
            fallback_action: MixedAction::uniform(game.num_rows()),
            preferred: None,
            solver: MatrixGameSolver::new(),
            scratch: Vec::new(),
        })
    }

    /// Starts from an existing history summarized by its length and sum.
    pub fn resume(mut self, stage_count: u64, sum: Point) -> Result<Self> {
        check_dim(self.sum.dim(), sum.dim())?;
        self.running_average = if stage_count == 0 {
            Point::zeros(sum.dim())
        } else {
            sum.divided(stage_count as f64)
        };
        self.stage_count = stage_count;
        self.sum = sum;
        Ok(self)
    }

    pub fn with_fallback(mut self, mix: MixedAction) -> Result<Self> {
        check_dim(self.fallback_action.len(), mix.len())?;
        self.fallback_action = mix;
        Ok(self)
    }

    /// A mix played instead of the solver's whenever it is also optimal
    /// for the scalarized game.
    pub fn with_preferred(mut self, mix: MixedAction) -> Result<Self> {
        check_dim(self.fallback_action.len(), mix.len())?;
        self.preferred = Some(mix);
        Ok(self)
    }

    pub fn stage_count(&self) -> u64 {
        self.stage_count
    }

    pub fn running_average(&self) -> &Point {
        &self.running_average
    }

    pub fn target(&self) -> &ConvexBody {
        &self.target
    }

    pub fn fallback_action(&self) -> &MixedAction {
        &self.fallback_action
    }

    /// The mix to play next, with its certificate unless the fallback is
    /// used.
    pub fn step(
        &mut self,
        game: &VectorPayoffGame,
    ) -> Result<(MixedAction, Option<SeparationCertificate>)> {
        if self.stage_count == 0 {
            return Ok((self.fallback_action.clone(), None));
        }
        let y = self.target.project(&self.running_average)?;
        let diff = &self.running_average - &y;
        let dist = diff.norm();
        if dist <= TARGET_TOLERANCE {
            return Ok((self.fallback_action.clone(), None));
        }
        let direction = diff.scaled(1.0 / dist);
        game.scalarize_into(&direction, &mut self.scratch);
        let sol = self.solver.solve(
            game.num_rows(),
            game.num_cols(),
            &self.scratch,
            SOLVER_TOLERANCE,
        )?;
        let mut mix = sol.optimal_row;
        if let Some(pref) = &self.preferred {
            let worst = (0..game.num_cols())
                .map(|j| direction.dot(&game.row_mix_payoff(pref, j)))
                .fold(f64::NEG_INFINITY, f64::max);
            if worst <= sol.value + SOLVER_TOLERANCE {
                mix = pref.clone();
            }
        }
        self.fallback_action = mix.clone();
        Ok((
            mix.clone(),
            Some(SeparationCertificate {
                projection_point: y,
                direction,
                scalar_value: sol.value,
                chosen_mix: mix,
            }),
        ))
    }

    /// Adds one realized payoff to the average.
    pub fn observe(&mut self, payoff: &Point) {
        self.stage_count += 1;
        self.sum.axpy(1.0, payoff);
        self.running_average = self.sum.divided(self.stage_count as f64);
    }
}
