use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::{MixedAction, VectorPayoffGame};
use crate::geometry::{Point, Region};

/// What player 2 can see: the past action pairs, summarized.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicHistory {
    pub stage: u64,
    pub sum: Point,
    pub average: Point,
    pub last: Option<(usize, usize)>,
}

impl PublicHistory {
    pub fn new(dim: usize) -> Self {
        Self {
            stage: 0,
            sum: Point::zeros(dim),
            average: Point::zeros(dim),
            last: None,
        }
    }

    pub fn record(&mut self, game: &VectorPayoffGame, i: usize, j: usize) {
        self.stage += 1;
        self.sum.axpy(1.0, game.payoff(i, j));
        self.average = self.sum.divided(self.stage as f64);
        self.last = Some((i, j));
    }
}

/// Player 2's behaviour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryModel {
    Stationary { mix: MixedAction },
    /// Pure actions cycled by stage.
    Scripted { actions: Vec<usize> },
    /// Plays the column that, against a uniform guess of player 1's mix,
    /// leaves the next average with the least clearance in `region`.
    AdaptivePush { region: Region },
}

impl AdversaryModel {
    pub fn validate(&self, game: &VectorPayoffGame) -> Result<()> {
        match self {
            AdversaryModel::Stationary { mix } => check_dim(game.num_cols(), mix.len()),
            AdversaryModel::Scripted { actions } => {
                if actions.is_empty() || actions.iter().any(|&j| j >= game.num_cols()) {
                    Err(Error::InvalidInput(format!(
                        "script must be nonempty with actions below {}",
                        game.num_cols()
                    )))
                } else {
                    Ok(())
                }
            }
            AdversaryModel::AdaptivePush { region } => match region.dim() {
                Some(d) => check_dim(game.dim(), d),
                None => Ok(()),
            },
        }
    }

    pub fn step(&self, game: &VectorPayoffGame, history: &PublicHistory) -> MixedAction {
        match self {
            AdversaryModel::Stationary { mix } => mix.clone(),
            AdversaryModel::Scripted { actions } => {
                let j = actions[(history.stage % actions.len() as u64) as usize];
                MixedAction::pure(game.num_cols(), j).expect("validated script")
            }
            AdversaryModel::AdaptivePush { region } => {
                let guess = MixedAction::uniform(game.num_rows());
                let t = history.stage as f64;
                let mut best = (0, f64::INFINITY);
                for j in 0..game.num_cols() {
                    let u = game.row_mix_payoff(&guess, j);
                    let mut next = history.average.scaled(t / (t + 1.0));
                    next.axpy(1.0 / (t + 1.0), &u);
                    let c = region.clearance_unchecked(&next);
                    if c < best.1 {
                        best = (j, c);
                    }
                }
                MixedAction::pure(game.num_cols(), best.0).expect("column in range")
            }
        }
    }
}
