//! Player 1 strategies as state machines, and player 2 models.

mod adversary;
mod blackwell;
mod block;
mod sigma_star;
mod waypoint;

pub use adversary::{AdversaryModel, PublicHistory};
pub use blackwell::{BlackwellState, SeparationCertificate, TARGET_TOLERANCE};
pub use block::BlockStrategy;
pub use sigma_star::{Branch, ConstrainedState};
pub use waypoint::{
    check_waypoint_conditions, Checkpoint, TransitionCheck, WaypointPlan, WaypointReport,
    WaypointState,
};

use crate::error::Result;
use crate::game::{MixedAction, VectorPayoffGame};
use crate::geometry::Point;

/// One decision of player 1.
#[derive(Clone, Debug)]
pub struct Decision {
    pub mix: MixedAction,
    pub branch: Option<Branch>,
    pub certificate: Option<SeparationCertificate>,
}

impl Decision {
    fn plain(mix: MixedAction) -> Self {
        Self {
            mix,
            branch: None,
            certificate: None,
        }
    }
}

/// Any of the implemented player 1 strategies.
#[derive(Clone, Debug)]
pub enum Player1 {
    Stationary(MixedAction),
    Blackwell(BlackwellState),
    SigmaStar(ConstrainedState),
    Waypoint(WaypointState),
    Block(BlockStrategy),
}

impl Player1 {
    pub fn decide(&mut self, game: &VectorPayoffGame) -> Result<Decision> {
        Ok(match self {
            Player1::Stationary(mix) => Decision::plain(mix.clone()),
            Player1::Blackwell(s) => {
                let (mix, certificate) = s.step(game)?;
                Decision {
                    mix,
                    branch: None,
                    certificate,
                }
            }
            Player1::SigmaStar(s) => {
                let (mix, branch, certificate) = s.step(game)?;
                Decision {
                    mix,
                    branch: Some(branch),
                    certificate,
                }
            }
            Player1::Waypoint(s) => {
                let (mix, certificate) = s.step(game)?;
                Decision {
                    mix,
                    branch: None,
                    certificate,
                }
            }
            Player1::Block(s) => Decision::plain(MixedAction::pure(game.num_rows(), s.step())?),
        })
    }

    /// Feeds back the realized action pair of the stage just decided.
    pub fn observe(&mut self, decision: &Decision, payoff: &Point, opponent_action: usize) {
        match self {
            Player1::Stationary(_) => {}
            Player1::Blackwell(s) => s.observe(payoff),
            Player1::SigmaStar(s) => {
                s.observe(payoff, decision.branch.expect("σ* decisions carry a branch"))
            }
            Player1::Waypoint(s) => s.observe(payoff),
            Player1::Block(s) => s.observe(opponent_action),
        }
    }

    pub fn sigma_star(&self) -> Option<&ConstrainedState> {
        match self {
            Player1::SigmaStar(s) => Some(s),
            _ => None,
        }
    }

    pub fn num_actions(&self) -> Option<usize> {
        match self {
            Player1::Stationary(m) => Some(m.len()),
            Player1::Blackwell(s) => Some(s.fallback_action().len()),
            Player1::SigmaStar(s) => Some(s.safe_action().len()),
            Player1::Waypoint(s) => Some(s.plan().safe_mix.len()),
            Player1::Block(_) => None,
        }
    }
}
