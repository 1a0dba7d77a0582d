//! Repeated play, per-run traces and Monte Carlo aggregation.

mod export;
mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::VectorPayoffGame;
use crate::geometry::{ConvexBody, Point, Region};
use crate::strategies::{AdversaryModel, Branch, Player1, PublicHistory};

pub use export::{write_json_atomic, write_trace_csv, write_trace_csv_to};
pub use stats::{
    fit_rate, fit_rate_points, quantile, safe_frequency_growth, CheckpointRatios, DoublingRatios,
    EpsilonAttainment, MonteCarloReport, MonteCarloSettings, RateFit, RunSummary,
    SafeFrequencyStats, SCHEMA_VERSION,
};

/// Slack allowed on `λ·U(p, j) ≤ λ·y` before a certificate counts as violated.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-6;

/// Default stride of stored averages.
pub fn default_stride(horizon: u64) -> u64 {
    if horizon <= 10_000 {
        1
    } else {
        10
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Store `g_t` every `stride` stages (and at the last stage).
    pub stride: Option<u64>,
}

/// Per-stage checks made while running.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub certificates: u64,
    pub certificate_violations: u64,
    pub max_certificate_excess: f64,
    /// Largest residual of the σ* average decomposition.
    pub max_decomposition_residual: f64,
    /// Inner-branch stages after which some payoff would have left a convex `D`.
    pub safe_branch_exits: u64,
}

impl RunDiagnostics {
    fn merge(&mut self, other: &RunDiagnostics) {
        self.certificates += other.certificates;
        self.certificate_violations += other.certificate_violations;
        self.max_certificate_excess = self.max_certificate_excess.max(other.max_certificate_excess);
        self.max_decomposition_residual = self
            .max_decomposition_residual
            .max(other.max_decomposition_residual);
        self.safe_branch_exits += other.safe_branch_exits;
    }
}

/// Realization of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub stages: u64,
    /// `(i_t, j_t)` for `t = 1..=stages`.
    pub actions: Vec<(u16, u16)>,
    pub stride: u64,
    /// `g_t` at `t = stride, 2·stride, …` and at `t = stages`.
    pub averages: Vec<Point>,
    /// `g_t ∈ D` for `t = 1..=stages`.
    pub in_region_flags: Vec<bool>,
    /// `d(g_t, A)` for `t = 1..=stages`.
    pub dist_to_target: Vec<f64>,
    /// `f(h_t)` for `t = 1..=stages`, σ* only.
    pub safe_count_curve: Option<Vec<u32>>,
    /// Realized `τ_ℓ`, waypoint only.
    pub phase_entry_stages: Vec<u64>,
    pub diagnostics: RunDiagnostics,
}

impl RunTrace {
    /// Stages at which `averages` were recorded.
    pub fn recorded_stages(&self) -> Vec<u64> {
        let mut s: Vec<u64> = (1..=self.stages / self.stride).map(|k| k * self.stride).collect();
        if !self.stages.is_multiple_of(self.stride) {
            s.push(self.stages);
        }
        s
    }

    pub fn average_at(&self, stage: u64) -> Option<&Point> {
        if stage == 0 || stage > self.stages {
            return None;
        }
        if stage.is_multiple_of(self.stride) {
            self.averages.get((stage / self.stride - 1) as usize)
        } else if stage == self.stages {
            self.averages.last()
        } else {
            None
        }
    }

    pub fn final_average(&self) -> &Point {
        self.averages.last().expect("a run has at least one stage")
    }

    /// Whether `g_t ∈ D` at every stage.
    pub fn stayed(&self) -> bool {
        self.in_region_flags.iter().all(|&f| f)
    }

    pub fn first_exit(&self) -> Option<u64> {
        self.in_region_flags
            .iter()
            .position(|&f| !f)
            .map(|k| k as u64 + 1)
    }

    /// Largest gap between stored averages and averages recomputed from the
    /// action sequence, over up to `samples` recorded stages.
    pub fn recurrence_error(&self, game: &VectorPayoffGame, samples: usize) -> f64 {
        let stages = self.recorded_stages();
        let step = (stages.len() / samples.max(1)).max(1);
        let wanted: Vec<u64> = stages.iter().copied().step_by(step).collect();
        let mut sum = Point::zeros(game.dim());
        let mut worst = 0.0f64;
        let mut next = 0;
        for (k, &(i, j)) in self.actions.iter().enumerate() {
            sum.axpy(1.0, game.payoff(i as usize, j as usize));
            let t = k as u64 + 1;
            if next < wanted.len() && wanted[next] == t {
                let g = sum.divided(t as f64);
                worst = worst.max(g.distance(self.average_at(t).expect("recorded")));
                next += 1;
            }
        }
        worst
    }
}

fn check_setup(
    game: &VectorPayoffGame,
    player: &Player1,
    adversary: &AdversaryModel,
    horizon: u64,
    region: &Region,
    target: &ConvexBody,
) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if game.num_rows() > u16::MAX as usize || game.num_cols() > u16::MAX as usize {
        return Err(Error::InvalidGame("too many actions".into()));
    }
    if let Some(n) = player.num_actions() {
        check_dim(game.num_rows(), n)?;
    }
    adversary.validate(game)?;
    if let Some(d) = region.dim() {
        check_dim(game.dim(), d)?;
    }
    check_dim(game.dim(), target.dim()?)?;
    Ok(())
}

/// Plays `horizon` stages. Player 1 draws from stream 1 and player 2 from
/// stream 2 of a ChaCha8 generator keyed by `seed`, one draw per stage
/// each, so the draw for stage `t` sits at position `t` of its stream.
#[allow(clippy::too_many_arguments)]
pub fn run(
    game: &VectorPayoffGame,
    mut player: Player1,
    adversary: &AdversaryModel,
    horizon: u64,
    seed: u64,
    region: &Region,
    target: &ConvexBody,
    options: &RunOptions,
) -> Result<RunTrace> {
    check_setup(game, &player, adversary, horizon, region, target)?;
    let stride = options.stride.unwrap_or_else(|| default_stride(horizon)).max(1);
    let mut rng1 = ChaCha8Rng::seed_from_u64(seed);
    rng1.set_stream(1);
    let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
    rng2.set_stream(2);

    let n = horizon as usize;
    let mut actions = Vec::with_capacity(n);
    let mut averages = Vec::with_capacity(n / stride as usize + 1);
    let mut flags = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    let is_sigma = player.sigma_star().is_some();
    let mut safe_curve = is_sigma.then(|| Vec::with_capacity(n));
    let mut diag = RunDiagnostics::default();
    let check_exits = is_sigma && region.is_convex();

    let mut history = PublicHistory::new(game.dim());
    let mut sum = Point::zeros(game.dim());
    let mut probe = Point::zeros(game.dim());
    for t in 1..=horizon {
        let u1: f64 = rng1.gen();
        let u2: f64 = rng2.gen();
        let decision = player.decide(game)?;
        let i = decision.mix.sample(u1);
        let j = adversary.step(game, &history).sample(u2);

        if let Some(cert) = &decision.certificate {
            diag.certificates += 1;
            let excess = cert.max_excess(game);
            diag.max_certificate_excess = diag.max_certificate_excess.max(excess);
            if excess > CERTIFICATE_TOLERANCE {
                diag.certificate_violations += 1;
            }
        }
        if check_exits && decision.branch == Some(Branch::Inner) {
            // every realizable payoff must keep the next average inside
            let prev = t as f64 - 1.0;
            let g = history.average.clone();
            let mut bad = false;
            for a in 0..game.num_rows() {
                for b in 0..game.num_cols() {
                    probe.coords_mut().copy_from_slice(g.coords());
                    for (p, u) in probe.coords_mut().iter_mut().zip(game.payoff(a, b).coords()) {
                        *p = (*p * prev + u) / t as f64;
                    }
                    bad |= !region.contains_unchecked(&probe);
                }
            }
            if bad {
                diag.safe_branch_exits += 1;
            }
        }

        let payoff = game.payoff(i, j);
        player.observe(&decision, payoff, j);
        history.record(game, i, j);
        sum.axpy(1.0, payoff);
        let g = sum.divided(t as f64);

        actions.push((i as u16, j as u16));
        flags.push(region.contains_unchecked(&g));
        dist.push(target.distance(&g)?);
        if let (Some(curve), Some(s)) = (&mut safe_curve, player.sigma_star()) {
            curve.push(s.safe_count() as u32);
            diag.max_decomposition_residual =
                diag.max_decomposition_residual.max(s.decomposition_residual());
        }
        if t % stride == 0 || t == horizon {
            averages.push(g);
        }
    }
    let phase_entry_stages = match &player {
        Player1::Waypoint(s) => s.phase_entry_stages().to_vec(),
        _ => Vec::new(),
    };
    Ok(RunTrace {
        seed,
        stages: horizon,
        actions,
        stride,
        averages,
        in_region_flags: flags,
        dist_to_target: dist,
        safe_count_curve: safe_curve,
        phase_entry_stages,
        diagnostics: diag,
    })
}

/// Runs seeds `base_seed..base_seed + runs` in parallel and hands each
/// trace to `reduce`. Results come back in seed order; the first failing
/// seed aborts.
#[allow(clippy::too_many_arguments)]
pub fn run_many<T, S, A, R>(
    game: &VectorPayoffGame,
    strategy_factory: S,
    adversary_factory: A,
    horizon: u64,
    runs: u64,
    base_seed: u64,
    region: &Region,
    target: &ConvexBody,
    options: &RunOptions,
    reduce: R,
) -> Result<Vec<T>>
where
    T: Send,
    S: Fn(u64) -> Result<Player1> + Sync,
    A: Fn(u64) -> Result<AdversaryModel> + Sync,
    R: Fn(RunTrace) -> T + Sync,
{
    if runs == 0 {
        return Err(Error::InvalidInput("need at least one run".into()));
    }
    let results: Vec<Result<T>> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            let go = || -> Result<T> {
                let player = strategy_factory(seed)?;
                let adversary = adversary_factory(seed)?;
                let trace = run(game, player, &adversary, horizon, seed, region, target, options)?;
                Ok(reduce(trace))
            };
            go().map_err(|e| Error::RunFailed {
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Aggregates `runs` independent runs into a report.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo<S, A>(
    game: &VectorPayoffGame,
    strategy_factory: S,
    adversary_factory: A,
    horizon: u64,
    runs: u64,
    base_seed: u64,
    region: &Region,
    target: &ConvexBody,
    settings: &MonteCarloSettings,
) -> Result<MonteCarloReport>
where
    S: Fn(u64) -> Result<Player1> + Sync,
    A: Fn(u64) -> Result<AdversaryModel> + Sync,
{
    let fit_stages = settings.fit_stages(horizon);
    let options = RunOptions {
        stride: Some(horizon),
    };
    let summaries = run_many(
        game,
        strategy_factory,
        adversary_factory,
        horizon,
        runs,
        base_seed,
        region,
        target,
        &options,
        |trace| RunSummary::from_trace(&trace, settings, &fit_stages),
    )?;
    Ok(MonteCarloReport::aggregate(summaries, horizon, base_seed, settings, &fit_stages))
}

/// Merges diagnostics of many runs.
pub fn merge_diagnostics<'a>(items: impl IntoIterator<Item = &'a RunDiagnostics>) -> RunDiagnostics {
    let mut total = RunDiagnostics::default();
    for d in items {
        total.merge(d);
    }
    total
}
