//! Acceptance criteria 1 to 10. Each test writes one PASS/FAIL line to
//! stderr, outside the test harness's output capture.

use std::io::Write;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use approach::game::{solve_matrix_game, SOLVER_TOLERANCE};
use approach::geometry::{
    distance_to_complement, distance_to_region, ConvexBody, Halfspace, Hyperplane, Point, Region, Side,
};
use approach::scenarios::{build_scenario, Scenario, ScenarioOverrides, StrategyConfig};
use approach::simulate::{
    fit_rate, merge_diagnostics, run_many, safe_frequency_growth, RunDiagnostics, RunOptions,
    RunTrace,
};
use approach::strategies::AdversaryModel;

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "acceptance criterion {id:<3} {verdict}  {detail}");
}

const SUITE: [&str; 6] = [
    "uniform",
    "skewed",
    "adaptive_push",
    "scripted_first",
    "scripted_ssf",
    "scripted_alternate",
];
const CONVEX_RUNS: u64 = 500;
const CONVEX_HORIZON: u64 = 10_000;

/// Everything criteria 1, 2, 3, 9 and 10 read from the shared convex-demo runs.
struct ConvexRuns {
    /// Traces without their action sequences.
    traces: Vec<RunTrace>,
    per_adversary_stay: Vec<(String, f64)>,
    diagnostics: RunDiagnostics,
    /// Largest residual of the decomposition rebuilt here from the actions
    /// and the safe-count curve.
    rebuilt_residual: f64,
    /// Stages counted as safe on which player 1 did not play the safe action.
    safe_stage_mismatches: u64,
}

/// Residual of `g_t = (f/t)·α_t + ((t−f)/t)·β_t` at every stage, with the
/// split between the two averages taken from the increments of `f`.
fn rebuilt_decomposition(trace: &RunTrace, scenario: &Scenario, safe_row: usize) -> (f64, u64) {
    let game = &scenario.game;
    let curve = trace.safe_count_curve.as_ref().expect("σ* trace");
    let n = game.dim();
    let (mut sa, mut sb, mut total) = (Point::zeros(n), Point::zeros(n), Point::zeros(n));
    let mut prev = 0u32;
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for (k, &(i, j)) in trace.actions.iter().enumerate() {
        let t = (k + 1) as f64;
        let u = game.payoff(i as usize, j as usize);
        let f = curve[k];
        if f > prev {
            sa.axpy(1.0, u);
            if i as usize != safe_row {
                mismatches += 1;
            }
        } else {
            sb.axpy(1.0, u);
        }
        prev = f;
        total.axpy(1.0, u);
        let g = total.divided(t);
        let f = f as f64;
        let mut rebuilt = Point::zeros(n);
        if f > 0.0 {
            rebuilt.axpy(f / t, &sa.divided(f));
        }
        if t - f > 0.0 {
            rebuilt.axpy((t - f) / t, &sb.divided(t - f));
        }
        worst = worst.max(g.distance(&rebuilt));
    }
    (worst, mismatches)
}

fn convex_runs() -> &'static ConvexRuns {
    static RUNS: OnceLock<ConvexRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let scenario = build_scenario("convex_demo", &ScenarioOverrides::default()).unwrap();
        let safe_row = scenario.game.row_index("T").unwrap();
        let options = RunOptions {
            stride: Some(CONVEX_HORIZON),
        };
        let mut traces = Vec::new();
        let mut per_adversary_stay = Vec::new();
        let mut rebuilt_residual = 0.0f64;
        let mut safe_stage_mismatches = 0;
        for (k, name) in SUITE.iter().enumerate() {
            let adversary = scenario.adversary(name).unwrap().clone();
            let batch = run_many(
                &scenario.game,
                |_| scenario.strategy("sigma_star"),
                |_| Ok(adversary.clone()),
                CONVEX_HORIZON,
                CONVEX_RUNS,
                1_000_000 * k as u64,
                &scenario.region,
                &scenario.target,
                &options,
                |mut trace| {
                    let (res, mis) = rebuilt_decomposition(&trace, &scenario, safe_row);
                    trace.actions = Vec::new();
                    (trace, res, mis)
                },
            )
            .unwrap();
            let stayed = batch.iter().filter(|(t, _, _)| t.stayed()).count();
            per_adversary_stay.push((name.to_string(), stayed as f64 / batch.len() as f64));
            for (trace, res, mis) in batch {
                rebuilt_residual = rebuilt_residual.max(res);
                safe_stage_mismatches += mis;
                traces.push(trace);
            }
        }
        let diagnostics = merge_diagnostics(traces.iter().map(|t| &t.diagnostics));
        ConvexRuns {
            traces,
            per_adversary_stay,
            diagnostics,
            rebuilt_residual,
            safe_stage_mismatches,
        }
    })
}

#[test]
fn criterion_01_stay_in_region() {
    let runs = convex_runs();
    let stayed = runs.traces.iter().filter(|t| t.stayed()).count();
    let rate = stayed as f64 / runs.traces.len() as f64;
    let pass = rate == 1.0 && runs.per_adversary_stay.iter().all(|(_, r)| *r == 1.0);
    let detail = format!(
        "stay-in-D rate {rate} over {} runs of {} stages; per adversary {:?}",
        runs.traces.len(),
        CONVEX_HORIZON,
        runs.per_adversary_stay
    );
    report("1", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_rate() {
    let runs = convex_runs();
    let fit = fit_rate(&runs.traces, 100, 0.95).unwrap();
    let pass = (-0.65..=-0.35).contains(&fit.slope) && fit.r2 >= 0.8;
    let detail = format!(
        "slope {:.4} r2 {:.4} over {} stages ({} zero quantiles dropped)",
        fit.slope, fit.r2, fit.points, fit.zeros_excluded
    );
    report("2", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_03_safe_frequency() {
    let runs = convex_runs();
    let stats = safe_frequency_growth(&runs.traces, &[2500, 5000]).unwrap();
    assert_eq!(stats.doubling.len(), 2);
    let fractions: Vec<(u64, f64)> = stats
        .doubling
        .iter()
        .map(|d| (d.stage, d.fraction_at_most(2.5)))
        .collect();
    let pass = fractions.iter().all(|(_, f)| *f >= 0.95);
    let detail = format!(
        "fraction of runs with f(2t)/max(f(t),1) <= 2.5: {:?}; max ratios {:?}",
        fractions,
        stats.doubling.iter().map(|d| d.max).collect::<Vec<_>>()
    );
    report("3", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_04_impossibility() {
    let scenario = build_scenario("impossibility_closed_halfplane", &ScenarioOverrides::default()).unwrap();
    assert!(scenario.region.contains(&Point::from([0.0, 5.0])).unwrap());
    let adversary = scenario.adversary("uniform").unwrap().clone();
    let exits = run_many(
        &scenario.game,
        |_| scenario.strategy("blackwell"),
        |_| Ok(adversary.clone()),
        1000,
        1000,
        0,
        &scenario.region,
        &scenario.target,
        &RunOptions { stride: Some(1000) },
        |trace| trace.first_exit().is_some(),
    )
    .unwrap();
    let fraction = exits.iter().filter(|&&e| e).count() as f64 / exits.len() as f64;
    let pass = fraction >= 0.3;
    let detail = format!("fraction of runs leaving D {fraction} over 1000 runs");
    report("4", pass, &detail);
    assert!(pass, "{detail}");
}

struct WaypointRuns {
    /// `(T₀, stay rate, surviving runs, fraction of survivors with d(g_T, A) < α')`
    rows: Vec<(u64, f64, usize, f64)>,
    alpha_prime: f64,
}

fn waypoint_runs() -> &'static WaypointRuns {
    static RUNS: OnceLock<WaypointRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let scenario = build_scenario("waypoint_ladder", &ScenarioOverrides::default()).unwrap();
        let adversary = scenario.adversary("uniform").unwrap().clone();
        let horizon = 100_000;
        let mut rows = Vec::new();
        for t0 in [100u64, 1000, 10_000] {
            let strategy = StrategyConfig::Waypoint {
                initial_duration: Some(t0),
                plan: None,
            };
            let out = run_many(
                &scenario.game,
                |_| strategy.build(&scenario),
                |_| Ok(adversary.clone()),
                horizon,
                500,
                7_000_000 + t0,
                &scenario.region,
                &scenario.target,
                &RunOptions {
                    stride: Some(horizon),
                },
                |trace| (trace.stayed(), *trace.dist_to_target.last().unwrap()),
            )
            .unwrap();
            let survivors: Vec<f64> = out.iter().filter(|(s, _)| *s).map(|(_, d)| *d).collect();
            let close = survivors.iter().filter(|&&d| d < scenario.alpha_prime).count();
            rows.push((
                t0,
                survivors.len() as f64 / out.len() as f64,
                survivors.len(),
                if survivors.is_empty() {
                    0.0
                } else {
                    close as f64 / survivors.len() as f64
                },
            ));
        }
        WaypointRuns {
            rows,
            alpha_prime: scenario.alpha_prime,
        }
    })
}

#[test]
fn criterion_05a_waypoint_stays_in_region() {
    let w = waypoint_runs();
    let rates: Vec<f64> = w.rows.iter().map(|r| r.1).collect();
    let pass = rates.windows(2).all(|p| p[0] <= p[1]) && rates[2] >= 0.95;
    let detail = format!(
        "stay-in-D rate by T0: {:?}",
        w.rows.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>()
    );
    report("5a", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_05b_waypoint_reaches_target() {
    let w = waypoint_runs();
    let pass = w.rows.iter().all(|r| r.3 >= 0.95);
    let detail = format!(
        "fraction of surviving runs with d(g_T, A) < {} at T = 100000, by T0: {:?}",
        w.alpha_prime,
        w.rows.iter().map(|r| (r.0, r.2, r.3)).collect::<Vec<_>>()
    );
    report("5b", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_06_block_determinism() {
    let scenario = build_scenario("block_reactive", &ScenarioOverrides::default()).unwrap();
    let horizon = 10_000u64;
    let sequences = |seed: u64| -> approach::Result<AdversaryModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        Ok(AdversaryModel::Scripted {
            actions: (0..horizon).map(|_| rng.gen_range(0..2)).collect(),
        })
    };
    let target = Point::from([2.0, 2.0]);
    let results = run_many(
        &scenario.game,
        |_| scenario.strategy("block"),
        sequences,
        horizon,
        100,
        0,
        &scenario.region,
        &scenario.target,
        &RunOptions { stride: Some(1) },
        |trace| {
            let worst = (1..=horizon / 2)
                .map(|k| {
                    let g = trace.average_at(2 * k).unwrap();
                    g.coords()
                        .iter()
                        .zip(target.coords())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            (worst, trace.stayed())
        },
    )
    .unwrap();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let stayed = results.iter().filter(|r| r.1).count();
    let pass = worst <= 1e-12 && stayed == results.len();
    let detail = format!(
        "max |g_2k - (2,2)| {worst:e}; runs always in D {stayed}/{}",
        results.len()
    );
    report("6", pass, &detail);
    assert!(pass, "{detail}");
}

/// `d(z, F∖D)` with `F = {a_k·x ≤ b_k}` and `D = {n_l·x < o_l}`: the
/// least distance to `F ∩ {n_l·x ≥ o_l}` over `l`, `∞` if all are empty.
fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Point {
    loop {
        let v = Point::new((0..n).map(|_| rng.gen_range(-1.0..1.0)));
        let r = v.norm();
        if r > 0.1 && r <= 1.0 {
            return v.scaled(1.0 / r);
        }
    }
}

fn sample_in(rng: &mut ChaCha8Rng, n: usize, half: f64, pred: impl Fn(&Point) -> bool) -> Point {
    loop {
        let p = Point::new((0..n).map(|_| rng.gen_range(-half..half)));
        if pred(&p) {
            return p;
        }
    }
}

#[test]
fn criterion_07_distance_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    while checked < 10_000 {
        let n = if checked % 2 == 0 { 2 } else { 3 };
        // F: the box [-1, 1]^n cut by up to three half-spaces keeping the origin
        let mut f: Vec<(Point, f64)> = Vec::new();
        for k in 0..n {
            f.push((Point::unit(n, k), 1.0));
            f.push((Point::unit(n, k).scaled(-1.0), 1.0));
        }
        for _ in 0..rng.gen_range(0..=3) {
            f.push((random_unit(&mut rng, n), rng.gen_range(0.2..1.0)));
        }
        let in_f = |p: &Point| f.iter().all(|(a, b)| a.dot(p) <= *b);
        // D: up to four open half-spaces, each leaving an anchor of F inside
        let anchor = sample_in(&mut rng, n, 1.0, in_f);
        let d: Vec<(Point, f64)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let normal = random_unit(&mut rng, n);
                let offset = normal.dot(&anchor) + rng.gen_range(0.05..1.0);
                (normal, offset)
            })
            .collect();
        let region = Region::halfspaces(
            d.iter()
                .map(|(a, b)| Hyperplane::new(a.clone(), *b).unwrap())
                .collect(),
        )
        .unwrap();
        let body = ConvexBody::polytope(
            f.iter()
                .map(|(a, b)| Halfspace {
                    plane: Hyperplane::new(a.clone(), *b).unwrap(),
                    side: Side::Below,
                })
                .collect(),
        )
        .unwrap();
        let x = sample_in(&mut rng, n, 1.0, |p| in_f(p) && region.contains(p).unwrap());
        let y = sample_in(&mut rng, n, 1.0, in_f);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let z = x.lerp(&y, 1.0 - lambda);
        let lhs = distance_to_complement(&z, &region, &body).unwrap();
        let rhs = lambda * distance_to_complement(&x, &region, &body).unwrap()
            - (1.0 - lambda) * distance_to_region(&y, &region).unwrap();
        worst = worst.max(rhs - lhs);
        checked += 1;
    }
    let pass = worst <= 1e-7;
    let detail = format!("max (rhs - lhs) {worst:e} over {checked} instances");
    report("7", pass, &detail);
    assert!(pass, "{detail}");
}

fn simplex_grid(k: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    fn rec(pos: usize, left: usize, steps: usize, w: &mut Vec<f64>, visit: &mut dyn FnMut(&[f64])) {
        if pos + 1 == w.len() {
            w[pos] = left as f64 / steps as f64;
            visit(w);
            return;
        }
        for c in 0..=left {
            w[pos] = c as f64 / steps as f64;
            rec(pos + 1, left - c, steps, w, visit);
        }
    }
    let mut w = vec![0.0; k];
    rec(0, steps, steps, &mut w, &mut visit);
}

/// `min_p max_j pᵀM_j` with `p` on the 10⁻³ simplex grid.
fn grid_value_rows(m: &[Vec<f64>]) -> f64 {
    let cols = m[0].len();
    let mut best = f64::INFINITY;
    simplex_grid(m.len(), 1000, |p| {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..cols {
            let v: f64 = p.iter().zip(m).map(|(w, r)| w * r[j]).sum();
            worst = worst.max(v);
        }
        best = best.min(worst);
    });
    best
}

/// `max_q min_i (Mq)_i` with `q` on the 10⁻³ simplex grid.
fn grid_value_cols(m: &[Vec<f64>]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    simplex_grid(m[0].len(), 1000, |q| {
        let worst = m
            .iter()
            .map(|r| r.iter().zip(q).map(|(a, w)| a * w).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    });
    best
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let factor = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= factor * a[c][k];
            }
            b[r] -= factor * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact value by enumerating equal-size support pairs.
fn support_enumeration_value(m: &[Vec<f64>]) -> Option<f64> {
    let (r, c) = (m.len(), m[0].len());
    let subsets = |n: usize, k: usize| -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|s| s.count_ones() as usize == k)
            .map(|s| (0..n).filter(|&i| s >> i & 1 == 1).collect())
            .collect()
    };
    for k in 1..=r.min(c) {
        for rows in subsets(r, k) {
            for cols in subsets(c, k) {
                // p on rows: Σ p_i M_ij − v = 0 for j in cols, Σ p_i = 1
                let mut a = Vec::new();
                let mut b = Vec::new();
                for &j in &cols {
                    let mut row: Vec<f64> = rows.iter().map(|&i| m[i][j]).collect();
                    row.push(-1.0);
                    a.push(row);
                    b.push(0.0);
                }
                let mut ones = vec![1.0; k];
                ones.push(0.0);
                a.push(ones.clone());
                b.push(1.0);
                let Some(pv) = solve_linear(a, b) else { continue };
                let mut a = Vec::new();
                let mut b = Vec::new();
                for &i in &rows {
                    let mut row: Vec<f64> = cols.iter().map(|&j| m[i][j]).collect();
                    row.push(-1.0);
                    a.push(row);
                    b.push(0.0);
                }
                a.push(ones);
                b.push(1.0);
                let Some(qv) = solve_linear(a, b) else { continue };
                if pv[..k].iter().chain(&qv[..k]).any(|&w| w < -1e-12) {
                    continue;
                }
                let v = pv[k];
                let row_ok = (0..c).all(|j| {
                    rows.iter().zip(&pv).map(|(&i, w)| w * m[i][j]).sum::<f64>() <= v + 1e-9
                });
                let col_ok = (0..r).all(|i| {
                    cols.iter().zip(&qv).map(|(&j, w)| w * m[i][j]).sum::<f64>() >= v - 1e-9
                });
                if row_ok && col_ok {
                    return Some(v);
                }
            }
        }
    }
    None
}

#[test]
fn criterion_08_solver_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_value = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut by_grid = 0;
    for _ in 0..1000 {
        let (r, c) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let m: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let sol = solve_matrix_game(&m, SOLVER_TOLERANCE).unwrap();
        let oracle = if r <= 3 {
            by_grid += 1;
            grid_value_rows(&m)
        } else if c <= 3 {
            by_grid += 1;
            grid_value_cols(&m)
        } else {
            support_enumeration_value(&m).expect("every game has an equilibrium")
        };
        worst_value = worst_value.max((sol.value - oracle).abs());
        worst_gap = worst_gap.max(sol.duality_gap);
    }
    let pass = worst_value <= 2e-3 && worst_gap <= 1e-9;
    let detail = format!(
        "max |value - oracle| {worst_value:e} (grid oracle on {by_grid} games, support enumeration on the rest); max duality gap {worst_gap:e}"
    );
    report("8", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_09_certificates() {
    let runs = convex_runs();
    let d = &runs.diagnostics;
    let pass = d.certificates > 0 && d.certificate_violations == 0;
    let detail = format!(
        "{} certificates, {} violations, max excess {:e}",
        d.certificates, d.certificate_violations, d.max_certificate_excess
    );
    report("9", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_decomposition() {
    let runs = convex_runs();
    let internal = runs.diagnostics.max_decomposition_residual;
    let pass = internal <= 1e-9 && runs.rebuilt_residual <= 1e-9 && runs.safe_stage_mismatches == 0;
    let detail = format!(
        "max residual {internal:e} (strategy state), {:e} (rebuilt from actions); safe-stage mismatches {}",
        runs.rebuilt_residual, runs.safe_stage_mismatches
    );
    report("10", pass, &detail);
    assert!(pass, "{detail}");
}
