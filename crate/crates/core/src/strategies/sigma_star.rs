use serde::{Deserialize, Serialize};

use super::blackwell::{BlackwellState, SeparationCertificate};
use crate::error::{check_dim, Error, Result};
use crate::game::{safety_gap, MixedAction, VectorPayoffGame};
use crate::geometry::{ConvexBody, Point, Region};

/// Which part of the constrained strategy chose the current mix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The history was close to the complement of `D`; the safe action.
    Safe,
    /// The inner Blackwell strategy on the virtual history.
    Inner,
}

/// State of the constrained strategy: play the safe action whenever the
/// average is within `κ/t` of leaving `D`, and otherwise run Blackwell's
/// strategy on the stages played outside that set only.
#[derive(Clone, Debug)]
pub struct ConstrainedState {
    stage_count: u64,
    overall_sum: Point,
    overall_average: Point,
    safe_count: u64,
    safe_sum: Point,
    inner: BlackwellState,
    safe_action: MixedAction,
    threshold_coefficient: f64,
    delta: f64,
    region: Region,
}

impl ConstrainedState {
    /// `κ` defaults to `3·payoff_scale`.
    pub fn new(
        game: &VectorPayoffGame,
        target: ConvexBody,
        region: Region,
        safe_action: MixedAction,
        threshold_coefficient: Option<f64>,
    ) -> Result<Self> {
        if let Some(d) = region.dim() {
            check_dim(game.dim(), d)?;
        }
        let delta = safety_gap(game, &region, &safe_action)?;
        let kappa = threshold_coefficient.unwrap_or(3.0 * game.payoff_scale());
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "threshold coefficient must be positive, got {kappa}"
            )));
        }
        Ok(Self {
            stage_count: 0,
            overall_sum: Point::zeros(game.dim()),
            overall_average: Point::zeros(game.dim()),
            safe_count: 0,
            safe_sum: Point::zeros(game.dim()),
            inner: BlackwellState::new(game, target)?,
            safe_action,
            threshold_coefficient: kappa,
            delta,
            region,
        })
    }

    pub fn stage_count(&self) -> u64 {
        self.stage_count
    }

    pub fn overall_average(&self) -> &Point {
        &self.overall_average
    }

    pub fn safe_count(&self) -> u64 {
        self.safe_count
    }

    /// `α_t`, defined once the safe action has been played.
    pub fn safe_average(&self) -> Option<Point> {
        (self.safe_count > 0).then(|| self.safe_sum.divided(self.safe_count as f64))
    }

    pub fn inner(&self) -> &BlackwellState {
        &self.inner
    }

    pub fn safe_action(&self) -> &MixedAction {
        &self.safe_action
    }

    pub fn threshold_coefficient(&self) -> f64 {
        self.threshold_coefficient
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `h_t ∈ H*`: the empty history, or clearance of `g_t` at most `κ/t`.
    pub fn in_h_star(&self) -> bool {
        self.stage_count == 0
            || self.region.clearance_unchecked(&self.overall_average)
                <= self.threshold_coefficient / self.stage_count as f64
    }

    pub fn step(
        &mut self,
        game: &VectorPayoffGame,
    ) -> Result<(MixedAction, Branch, Option<SeparationCertificate>)> {
        if self.in_h_star() {
            Ok((self.safe_action.clone(), Branch::Safe, None))
        } else {
            let (mix, cert) = self.inner.step(game)?;
            Ok((mix, Branch::Inner, cert))
        }
    }

    pub fn observe(&mut self, payoff: &Point, branch: Branch) {
        self.stage_count += 1;
        self.overall_sum.axpy(1.0, payoff);
        self.overall_average = self.overall_sum.divided(self.stage_count as f64);
        match branch {
            Branch::Safe => {
                self.safe_count += 1;
                self.safe_sum.axpy(1.0, payoff);
            }
            Branch::Inner => self.inner.observe(payoff),
        }
    }

    /// `‖g_t − (f/t)α_t − ((t−f)/t)β_t‖`, 0 at `t = 0`.
    pub fn decomposition_residual(&self) -> f64 {
        if self.stage_count == 0 {
            return 0.0;
        }
        let t = self.stage_count as f64;
        let f = self.safe_count as f64;
        let mut r = self.overall_average.clone();
        if let Some(alpha) = self.safe_average() {
            r.axpy(-f / t, &alpha);
        }
        if self.inner.stage_count() > 0 {
            r.axpy(-(t - f) / t, self.inner.running_average());
        }
        r.norm()
    }
}
