use super::MixedAction;
use crate::error::{Error, Result};

/// Default acceptance threshold on the duality gap.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-12;

/// Solution of a zero-sum game in which the row player minimizes.
#[derive(Clone, Debug, PartialEq)]
pub struct GameValueSolution {
    pub value: f64,
    pub optimal_row: MixedAction,
    pub optimal_col: MixedAction,
    /// `max_j (pᵀM)_j − min_i (Mq)_i`
    pub duality_gap: f64,
}

/// Dense simplex solver with reusable scratch space.
///
/// The game is shifted to `K = M − min M + 1 > 0` and the row player's
/// problem becomes `max Σx  s.t.  Kᵀx ≤ 1, x ≥ 0` with `p = x/Σx`. The
/// column strategy is read off the slack reduced costs. Pivoting follows
/// Bland's rule so the result depends only on the input.
#[derive(Clone, Debug, Default)]
pub struct MatrixGameSolver {
    tableau: Vec<f64>,
    basis: Vec<usize>,
}

impl MatrixGameSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves the `rows × cols` game stored row-major in `matrix`.
    pub fn solve(
        &mut self,
        rows: usize,
        cols: usize,
        matrix: &[f64],
        tolerance: f64,
    ) -> Result<GameValueSolution> {
        if rows == 0 || cols == 0 || matrix.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix game needs a nonempty {rows}×{cols} matrix, got {} entries",
                matrix.len()
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidInput("solver tolerance must be positive".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let lo = matrix.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = 1.0 - lo;

        // Constraint rows are the columns j of the game; variables are
        // x_0..x_{rows−1} followed by the slacks s_0..s_{cols−1}.
        let nvars = rows + cols;
        let width = nvars + 1;
        let height = cols + 1;
        self.tableau.clear();
        self.tableau.resize(width * height, 0.0);
        self.basis.clear();
        let t = &mut self.tableau;
        for j in 0..cols {
            let row = &mut t[j * width..(j + 1) * width];
            for i in 0..rows {
                row[i] = matrix[i * cols + j] + shift;
            }
            row[rows + j] = 1.0;
            row[nvars] = 1.0;
            self.basis.push(rows + j);
        }
        // Objective row holds reduced costs c_k − z_k and −(objective) in the
        // last slot.
        let obj = cols * width;
        for i in 0..rows {
            t[obj + i] = 1.0;
        }

        let cap = 50 * (rows + cols) + 100;
        let mut iterations = 0;
        loop {
            let Some(enter) = (0..nvars).find(|&k| t[obj + k] > PIVOT_EPS) else {
                break;
            };
            iterations += 1;
            if iterations > cap {
                let value = if t[obj + nvars] < 0.0 {
                    -1.0 / t[obj + nvars] - shift
                } else {
                    f64::NAN
                };
                return Err(Error::SolverFailed {
                    iterations,
                    value,
                    gap: f64::INFINITY,
                });
            }
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..cols {
                let a = t[r * width + enter];
                if a > PIVOT_EPS {
                    let ratio = t[r * width + nvars] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            // The feasible region is bounded because K > 0.
            let (pr, _) = leave.expect("bounded program always has a leaving row");
            let piv = t[pr * width + enter];
            for k in 0..width {
                t[pr * width + k] /= piv;
            }
            for r in 0..height {
                if r == pr {
                    continue;
                }
                let f = t[r * width + enter];
                if f != 0.0 {
                    for k in 0..width {
                        t[r * width + k] -= f * t[pr * width + k];
                    }
                }
            }
            self.basis[pr] = enter;
        }

        let mut x = vec![0.0; rows];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < rows {
                x[b] = t[r * width + nvars].max(0.0);
            }
        }
        let y: Vec<f64> = (0..cols).map(|j| (-t[obj + rows + j]).max(0.0)).collect();
        let p = MixedAction::from_unnormalized(x)?;
        let q = MixedAction::from_unnormalized(y)?;

        let sum_x = -t[obj + nvars];
        let value = 1.0 / sum_x - shift;
        let upper = (0..cols)
            .map(|j| (0..rows).map(|i| p.weight(i) * matrix[i * cols + j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let lower = (0..rows)
            .map(|i| (0..cols).map(|j| q.weight(j) * matrix[i * cols + j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let gap = upper - lower;
        if gap > tolerance || !gap.is_finite() {
            return Err(Error::SolverFailed {
                iterations,
                value,
                gap,
            });
        }
        Ok(GameValueSolution {
            value,
            optimal_row: p,
            optimal_col: q,
            duality_gap: gap,
        })
    }
}

/// Solves the zero-sum game given as rows of payoffs, row player minimizing.
pub fn solve_matrix_game(matrix: &[Vec<f64>], tolerance: f64) -> Result<GameValueSolution> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged matrix".into()));
    }
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    MatrixGameSolver::new().solve(rows, cols, &flat, tolerance)
}
