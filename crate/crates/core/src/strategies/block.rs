use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::VectorPayoffGame;

/// Blocks of two stages: a fixed opening action, then a reply chosen by the
/// opponent's opening action so that every block has the same payoff sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStrategy {
    opening: usize,
    /// `reply[j]`: row played after the opponent opened with `j`.
    reply: Vec<usize>,
    stage_count: u64,
    last_opponent: Option<usize>,
}

const BLOCK_TOLERANCE: f64 = 1e-12;

impl BlockStrategy {
    /// Checks that every reply row pays the same against every column and
    /// that all block sums `U(opening, j) + U(reply[j], ·)` coincide.
    pub fn new(game: &VectorPayoffGame, opening: usize, reply: Vec<usize>) -> Result<Self> {
        let (rows, cols) = (game.num_rows(), game.num_cols());
        if opening >= rows || reply.len() != cols || reply.iter().any(|&r| r >= rows) {
            return Err(Error::IncompatibleGame(format!(
                "block plan needs an opening row and one reply per column ({cols})"
            )));
        }
        let mut block_sum = None;
        for (j, &r) in reply.iter().enumerate() {
            let u = game.payoff(r, 0);
            for k in 1..cols {
                if game.payoff(r, k).distance(u) > BLOCK_TOLERANCE {
                    return Err(Error::IncompatibleGame(format!(
                        "reply row {} depends on the opponent's action",
                        game.row_actions()[r]
                    )));
                }
            }
            let s = game.payoff(opening, j) + u;
            match &block_sum {
                None => block_sum = Some(s),
                Some(b) if b.distance(&s) > BLOCK_TOLERANCE => {
                    return Err(Error::IncompatibleGame(format!(
                        "block sums differ: {b} vs {s}"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(Self {
            opening,
            reply,
            stage_count: 0,
            last_opponent: None,
        })
    }

    /// The plan by action names.
    pub fn by_names(
        game: &VectorPayoffGame,
        opening: &str,
        reply: &[(&str, &str)],
    ) -> Result<Self> {
        let row = |n: &str| {
            game.row_index(n)
                .ok_or_else(|| Error::IncompatibleGame(format!("no row action `{n}`")))
        };
        let open = row(opening)?;
        let mut table = vec![None; game.num_cols()];
        for (col, r) in reply {
            let j = game
                .col_index(col)
                .ok_or_else(|| Error::IncompatibleGame(format!("no column action `{col}`")))?;
            table[j] = Some(row(r)?);
        }
        let table = table
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::IncompatibleGame("reply missing for some column".into()))?;
        Self::new(game, open, table)
    }

    /// Opening action at odd stages, reply at even ones.
    pub fn step(&self) -> usize {
        if self.stage_count.is_multiple_of(2) {
            self.opening
        } else {
            self.reply[self.last_opponent.expect("reply stage follows an opening")]
        }
    }

    pub fn observe(&mut self, opponent_action: usize) {
        self.stage_count += 1;
        self.last_opponent = Some(opponent_action);
    }
}
