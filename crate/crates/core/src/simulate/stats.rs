use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{merge_diagnostics, RunDiagnostics, RunTrace};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const SCHEMA_VERSION: u32 = 1;

/// What a Monte Carlo report measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSettings {
    /// First stage of the rate fit.
    pub t_min: u64,
    /// Cross-run quantile of `d(g_t, A)` that is fitted.
    pub quantile: f64,
    /// Number of log-spaced stages the report's fit samples.
    pub fit_points: usize,
    /// Stages at which `f(h_t)/√t` and `f(h_{2t})/f(h_t)` are reported.
    pub safe_checkpoints: Vec<u64>,
    pub epsilons: Vec<f64>,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            t_min: 100,
            quantile: 0.95,
            fit_points: 256,
            safe_checkpoints: vec![1000, 2500, 4000, 5000, 16000],
            epsilons: vec![0.5, 0.2, 0.1, 0.05, 0.02, 0.01],
        }
    }
}

impl MonteCarloSettings {
    /// Log-spaced distinct stages in `[t_min, horizon]`.
    pub fn fit_stages(&self, horizon: u64) -> Vec<u64> {
        let lo = self.t_min.max(1);
        if horizon < lo || self.fit_points == 0 {
            return Vec::new();
        }
        let n = self.fit_points.max(2);
        let (a, b) = ((lo as f64).ln(), (horizon as f64).ln());
        let mut out: Vec<u64> = (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp().round() as u64)
            .map(|t| t.clamp(lo, horizon))
            .collect();
        out.dedup();
        out
    }

    fn safe_stages(&self, horizon: u64) -> Vec<u64> {
        let mut s: Vec<u64> = self
            .safe_checkpoints
            .iter()
            .flat_map(|&t| [t, 2 * t])
            .filter(|&t| t >= 1 && t <= horizon)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Nearest-rank quantile; sorts `values`.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of no values");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    values[rank - 1]
}

/// Least-squares line through `(ln t, ln d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    /// Stages dropped because the quantile was zero.
    pub zeros_excluded: usize,
}

/// Fits `ln q_t = intercept + slope·ln t` over the positive points.
pub fn fit_rate_points(points: &[(u64, f64)]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(t, d)| ((t as f64).ln(), d.ln()))
        .collect();
    let zeros_excluded = points.len() - usable.len();
    if usable.len() < 10 {
        return Err(Error::InsufficientFitPoints {
            found: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: usable.len(),
        zeros_excluded,
    })
}

/// Fits the per-stage `quantile` of `d(g_t, A)` across `traces` for
/// `t ≥ t_min`.
pub fn fit_rate(traces: &[RunTrace], t_min: u64, quantile_level: f64) -> Result<RateFit> {
    if !(quantile_level > 0.0 && quantile_level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "quantile must lie in (0, 1), got {quantile_level}"
        )));
    }
    if t_min == 0 {
        return Err(Error::InvalidInput("t_min must be at least 1".into()));
    }
    let last = traces.iter().map(|t| t.stages).min().unwrap_or(0);
    let mut column = Vec::with_capacity(traces.len());
    let mut points = Vec::new();
    for t in t_min..=last {
        column.clear();
        column.extend(traces.iter().map(|tr| tr.dist_to_target[(t - 1) as usize]));
        points.push((t, quantile(&mut column, quantile_level)));
    }
    fit_rate_points(&points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRatios {
    pub stage: u64,
    pub runs: usize,
    /// Statistics of `f(h_t)/√t`.
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    /// Runs with `f(h_t) = t`, whose ratio `√t` grows without bound.
    pub always_safe_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingRatios {
    pub stage: u64,
    /// `f(h_{2t}) / max(f(h_t), 1)` per run, in seed order.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl DoublingRatios {
    pub fn fraction_at_most(&self, bound: f64) -> f64 {
        self.ratios.iter().filter(|&&r| r <= bound).count() as f64 / self.ratios.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeFrequencyStats {
    pub checkpoints: Vec<CheckpointRatios>,
    pub doubling: Vec<DoublingRatios>,
}

/// `lookup[run]` maps a stage to `f(h_t)`.
fn safe_stats(lookup: &[BTreeMap<u64, u32>], checkpoints: &[u64], horizon: u64) -> SafeFrequencyStats {
    let mut out = SafeFrequencyStats {
        checkpoints: Vec::new(),
        doubling: Vec::new(),
    };
    for &t in checkpoints {
        if t == 0 || t > horizon {
            continue;
        }
        let mut ratios: Vec<f64> = lookup
            .iter()
            .filter_map(|m| m.get(&t))
            .map(|&f| f as f64 / (t as f64).sqrt())
            .collect();
        if ratios.is_empty() {
            continue;
        }
        let always = lookup
            .iter()
            .filter(|m| m.get(&t).is_some_and(|&f| f as u64 == t))
            .count();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let runs = ratios.len();
        out.checkpoints.push(CheckpointRatios {
            stage: t,
            runs,
            mean,
            median: quantile(&mut ratios, 0.5),
            p95: quantile(&mut ratios, 0.95),
            max: *ratios.last().expect("nonempty"),
            always_safe_runs: always,
        });
        if 2 * t <= horizon {
            let ratios: Vec<f64> = lookup
                .iter()
                .filter_map(|m| Some(*m.get(&(2 * t))? as f64 / (*m.get(&t)?).max(1) as f64))
                .collect();
            let mut sorted = ratios.clone();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            out.doubling.push(DoublingRatios {
                stage: t,
                mean,
                p95: quantile(&mut sorted, 0.95),
                max: *sorted.last().expect("nonempty"),
                ratios,
            });
        }
    }
    out
}

/// Distribution of `f(h_t)/√t` at `checkpoints` and the doubling ratios
/// `f(h_{2t})/f(h_t)`.
pub fn safe_frequency_growth(traces: &[RunTrace], checkpoints: &[u64]) -> Result<SafeFrequencyStats> {
    let horizon = traces.iter().map(|t| t.stages).min().unwrap_or(0);
    let mut lookup = Vec::with_capacity(traces.len());
    for tr in traces {
        let curve = tr.safe_count_curve.as_ref().ok_or(Error::MissingSafeCounts)?;
        let mut m = BTreeMap::new();
        for &t in checkpoints {
            for s in [t, 2 * t] {
                if s >= 1 && s <= tr.stages {
                    m.insert(s, curve[(s - 1) as usize]);
                }
            }
        }
        lookup.push(m);
    }
    Ok(safe_stats(&lookup, checkpoints, horizon))
}

/// Earliest stage from which `d(g_t, A) < ε` held in more than a `1 − ε`
/// fraction of runs; `None` if not within the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonAttainment {
    pub epsilon: f64,
    pub stage: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl DistributionSummary {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        Some(Self {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&mut v, 0.5),
            p95: quantile(&mut v, 0.95),
            max: *v.last().expect("nonempty"),
        })
    }
}

/// What a report keeps of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub stages: u64,
    pub stayed: bool,
    pub first_exit: Option<u64>,
    pub final_average: Point,
    pub final_distance: f64,
    /// `d(g_t, A)` at the report's fit stages.
    pub sampled_distances: Vec<f64>,
    pub safe_counts: Option<BTreeMap<u64, u32>>,
    /// Per ε, the last stage with `d(g_t, A) ≥ ε` (0 if none).
    pub last_violation: Vec<u64>,
    pub phase_entry_stages: Vec<u64>,
    pub diagnostics: RunDiagnostics,
}

impl RunSummary {
    pub fn from_trace(trace: &RunTrace, settings: &MonteCarloSettings, fit_stages: &[u64]) -> Self {
        let last_violation = settings
            .epsilons
            .iter()
            .map(|&eps| {
                trace
                    .dist_to_target
                    .iter()
                    .rposition(|&d| d >= eps)
                    .map_or(0, |k| k as u64 + 1)
            })
            .collect();
        let safe_counts = trace.safe_count_curve.as_ref().map(|curve| {
            settings
                .safe_stages(trace.stages)
                .into_iter()
                .map(|t| (t, curve[(t - 1) as usize]))
                .collect()
        });
        Self {
            seed: trace.seed,
            stages: trace.stages,
            stayed: trace.stayed(),
            first_exit: trace.first_exit(),
            final_average: trace.final_average().clone(),
            final_distance: *trace.dist_to_target.last().expect("nonempty run"),
            sampled_distances: fit_stages
                .iter()
                .filter(|&&t| t <= trace.stages)
                .map(|&t| trace.dist_to_target[(t - 1) as usize])
                .collect(),
            safe_counts,
            last_violation,
            phase_entry_stages: trace.phase_entry_stages.clone(),
            diagnostics: trace.diagnostics.clone(),
        }
    }
}

/// Aggregated statistics of a Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub runs: usize,
    pub horizon: u64,
    pub base_seed: u64,
    /// Fraction of runs with `g_t ∈ D` at every stage.
    pub stay_in_region_rate: f64,
    /// First exit stage → number of runs.
    pub exit_stage_histogram: BTreeMap<u64, u64>,
    /// Fit of the cross-run quantile of `d(g_t, A)` on log-spaced stages.
    pub rate_fit: Option<RateFit>,
    pub rate_fit_note: Option<String>,
    pub safe_frequency: Option<SafeFrequencyStats>,
    pub epsilon_attainment: Vec<EpsilonAttainment>,
    pub final_distance: Option<DistributionSummary>,
    /// Final distances of the runs that never left `D`.
    pub final_distance_surviving: Option<DistributionSummary>,
    pub diagnostics: RunDiagnostics,
}

impl MonteCarloReport {
    /// Independent of the order of `summaries`.
    pub fn aggregate(
        mut summaries: Vec<RunSummary>,
        horizon: u64,
        base_seed: u64,
        settings: &MonteCarloSettings,
        fit_stages: &[u64],
    ) -> Self {
        summaries.sort_by_key(|s| s.seed);
        let n = summaries.len();
        let stayed = summaries.iter().filter(|s| s.stayed).count();
        let mut exit_stage_histogram = BTreeMap::new();
        for s in &summaries {
            if let Some(t) = s.first_exit {
                *exit_stage_histogram.entry(t).or_insert(0) += 1;
            }
        }

        let mut points = Vec::new();
        let mut column = Vec::with_capacity(n);
        for (k, &t) in fit_stages.iter().enumerate() {
            column.clear();
            column.extend(summaries.iter().filter_map(|s| s.sampled_distances.get(k).copied()));
            if column.len() == n && n > 0 {
                points.push((t, quantile(&mut column, settings.quantile)));
            }
        }
        let (rate_fit, rate_fit_note) = match fit_rate_points(&points) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };

        let safe_frequency = if !summaries.is_empty() && summaries.iter().all(|s| s.safe_counts.is_some()) {
            let lookup: Vec<BTreeMap<u64, u32>> = summaries
                .iter()
                .map(|s| s.safe_counts.clone().expect("checked"))
                .collect();
            Some(safe_stats(&lookup, &settings.safe_checkpoints, horizon))
        } else {
            None
        };

        let epsilon_attainment = settings
            .epsilons
            .iter()
            .enumerate()
            .map(|(k, &eps)| {
                let mut last: Vec<u64> = summaries.iter().map(|s| s.last_violation[k]).collect();
                last.sort_unstable();
                let needed = ((1.0 - eps) * n as f64).floor() as usize + 1;
                let stage = (needed <= n)
                    .then(|| last[needed - 1] + 1)
                    .filter(|&t| t <= horizon);
                EpsilonAttainment { epsilon: eps, stage }
            })
            .collect();

        let finals: Vec<f64> = summaries.iter().map(|s| s.final_distance).collect();
        let surviving: Vec<f64> = summaries
            .iter()
            .filter(|s| s.stayed)
            .map(|s| s.final_distance)
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            runs: n,
            horizon,
            base_seed,
            stay_in_region_rate: if n == 0 { 0.0 } else { stayed as f64 / n as f64 },
            exit_stage_histogram,
            rate_fit,
            rate_fit_note,
            safe_frequency,
            epsilon_attainment,
            final_distance: DistributionSummary::of(&finals),
            final_distance_surviving: DistributionSummary::of(&surviving),
            diagnostics: merge_diagnostics(summaries.iter().map(|s| &s.diagnostics)),
        }
    }
}
