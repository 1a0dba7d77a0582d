//! Built-in scenarios: a game, a target `A`, a constraint set `D`, and the
//! strategies and adversaries that go with them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::{feasible_set, find_safe_actions, MixedAction, VectorPayoffGame};
use crate::geometry::{AxisBox, ConvexBody, GridOracle, Hyperplane, Point, Region};
use crate::strategies::{
    AdversaryModel, BlackwellState, BlockStrategy, Checkpoint, ConstrainedState, Player1,
    WaypointPlan, WaypointState,
};

pub const SCENARIO_NAMES: [&str; 5] = [
    "impossibility_closed_halfplane",
    "convex_demo",
    "nonconvex_two_arms",
    "waypoint_ladder",
    "block_reactive",
];

pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_ALPHA_PRIME: f64 = 0.125;
pub const DEFAULT_INITIAL_DURATION: u64 = 1000;

/// What theory predicts for a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// `A` can be approached while `g_t ∈ D` at every stage, surely.
    ApproachableWhileRemaining,
    /// Only with probability close to 1.
    OnlyWithHighProbability,
    Impossible,
}

/// How to build player 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    Stationary {
        mix: MixedAction,
    },
    /// Blackwell's strategy towards the scenario's target.
    Blackwell {
        #[serde(default)]
        fallback: Option<MixedAction>,
    },
    SigmaStar {
        /// `κ` of `H*`; defaults to `3·payoff_scale`.
        #[serde(default)]
        kappa: Option<f64>,
        /// Defaults to the lowest-index safe pure action.
        #[serde(default)]
        safe_action: Option<MixedAction>,
    },
    Waypoint {
        /// Overrides the plan's `T₀`.
        #[serde(default)]
        initial_duration: Option<u64>,
        /// Defaults to the scenario's plan.
        #[serde(default)]
        plan: Option<WaypointPlan>,
    },
    /// Opening row, then a reply per column observed (column name → row name).
    Block {
        opening: String,
        replies: BTreeMap<String, String>,
    },
}

impl StrategyConfig {
    pub fn build(&self, scenario: &Scenario) -> Result<Player1> {
        let game = &scenario.game;
        Ok(match self {
            StrategyConfig::Stationary { mix } => {
                check_dim(game.num_rows(), mix.len())?;
                Player1::Stationary(mix.clone())
            }
            StrategyConfig::Blackwell { fallback } => {
                let mut s = BlackwellState::new(game, scenario.target.clone())?;
                if let Some(f) = fallback {
                    s = s.with_fallback(f.clone())?;
                }
                Player1::Blackwell(s)
            }
            StrategyConfig::SigmaStar { kappa, safe_action } => {
                let safe = match safe_action {
                    Some(s) => s.clone(),
                    None => scenario.default_safe_action()?,
                };
                Player1::SigmaStar(ConstrainedState::new(
                    game,
                    scenario.target.clone(),
                    scenario.region.clone(),
                    safe,
                    *kappa,
                )?)
            }
            StrategyConfig::Waypoint {
                initial_duration,
                plan,
            } => {
                let mut plan = plan
                    .clone()
                    .or_else(|| scenario.plan.clone())
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("scenario `{}` has no waypoint plan", scenario.name))
                    })?;
                if let Some(t0) = initial_duration {
                    plan.initial_duration = *t0;
                }
                Player1::Waypoint(WaypointState::new(game, plan)?)
            }
            StrategyConfig::Block { opening, replies } => {
                let pairs: Vec<(&str, &str)> =
                    replies.iter().map(|(c, r)| (c.as_str(), r.as_str())).collect();
                Player1::Block(BlockStrategy::by_names(game, opening, &pairs)?)
            }
        })
    }
}

/// Parameters a built-in scenario can be adjusted by.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub alpha: Option<f64>,
    pub alpha_prime: Option<f64>,
    /// `T₀` of the waypoint plan.
    pub initial_duration: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub game: VectorPayoffGame,
    /// `A`.
    pub target: ConvexBody,
    /// `D`.
    pub region: Region,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub strategies: BTreeMap<String, StrategyConfig>,
    pub adversaries: BTreeMap<String, AdversaryModel>,
    pub expectation: Expectation,
    #[serde(default)]
    pub plan: Option<WaypointPlan>,
}

impl Scenario {
    /// Checks the internal consistency of the scenario.
    pub fn validate(&self) -> Result<()> {
        let d = self.game.dim();
        self.target.validate()?;
        check_dim(d, self.target.dim()?)?;
        self.region.validate()?;
        if let Some(rd) = self.region.dim() {
            check_dim(d, rd)?;
        }
        let recomputed = (0..self.game.num_rows())
            .flat_map(|i| (0..self.game.num_cols()).map(move |j| (i, j)))
            .flat_map(|(i, j)| self.game.payoff(i, j).coords().to_vec())
            .fold(0.0f64, |b, c| b.max(c.abs()));
        if recomputed != self.game.payoff_bound() {
            return Err(Error::InvalidGame("stale payoff bound".into()));
        }
        if !(0.0 < self.alpha_prime && self.alpha_prime < self.alpha && self.alpha < 0.5) {
            return Err(Error::InvalidInput(format!(
                "need 0 < α' < α < 1/2, got α = {}, α' = {}",
                self.alpha, self.alpha_prime
            )));
        }
        let (lo, hi) = self.bounding_box()?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput("target is unbounded".into()));
        }
        for adversary in self.adversaries.values() {
            adversary.validate(&self.game)?;
        }
        if let Some(plan) = &self.plan {
            plan.validate(&self.game)?;
        }
        Ok(())
    }

    /// Box containing `F ∪ A`.
    pub fn bounding_box(&self) -> Result<(Point, Point)> {
        let (mut lo, mut hi) = feasible_set(&self.game).bounding_box()?;
        let (alo, ahi) = self.target.bounding_box()?;
        for k in 0..lo.dim() {
            lo.coords_mut()[k] = lo[k].min(alo[k]);
            hi.coords_mut()[k] = hi[k].max(ahi[k]);
        }
        Ok((lo, hi))
    }

    /// A grid over `F ∪ A` padded by one unit on every side.
    pub fn oracle(&self, resolution: usize) -> Result<GridOracle> {
        let (lo, hi) = self.bounding_box()?;
        let pad = |p: &Point, s: f64| Point::new(p.coords().iter().map(|c| c + s));
        GridOracle::new(pad(&lo, -1.0), pad(&hi, 1.0), resolution)
    }

    pub fn default_safe_action(&self) -> Result<MixedAction> {
        let safe = find_safe_actions(&self.game, &self.region)?;
        let s = *safe.first().ok_or_else(|| {
            Error::IncompatibleGame(format!("scenario `{}` has no safe action", self.name))
        })?;
        MixedAction::pure(self.game.num_rows(), s)
    }

    pub fn strategy(&self, name: &str) -> Result<Player1> {
        self.strategies
            .get(name)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "scenario `{}` has no strategy `{name}` (has: {})",
                    self.name,
                    self.strategies.keys().cloned().collect::<Vec<_>>().join(", ")
                ))
            })?
            .build(self)
    }

    pub fn adversary(&self, name: &str) -> Result<&AdversaryModel> {
        self.adversaries.get(name).ok_or_else(|| {
            Error::InvalidInput(format!(
                "scenario `{}` has no adversary `{name}` (has: {})",
                self.name,
                self.adversaries.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

/// Stationary uniform, stationary skewed towards the first column, the
/// adaptive pusher against `region`, and three scripted sequences.
pub fn adversary_suite(game: &VectorPayoffGame, region: &Region) -> BTreeMap<String, AdversaryModel> {
    let cols = game.num_cols();
    let mut skew = vec![0.1 / (cols - 1) as f64; cols];
    skew[0] = 0.9;
    let scripted = |a: &[usize]| AdversaryModel::Scripted {
        actions: a.iter().map(|&j| j.min(cols - 1)).collect(),
    };
    let mut out = BTreeMap::new();
    out.insert(
        "uniform".to_string(),
        AdversaryModel::Stationary {
            mix: MixedAction::uniform(cols),
        },
    );
    out.insert(
        "skewed".to_string(),
        AdversaryModel::Stationary {
            mix: MixedAction::new(skew).expect("weights sum to one"),
        },
    );
    out.insert(
        "adaptive_push".to_string(),
        AdversaryModel::AdaptivePush {
            region: region.clone(),
        },
    );
    out.insert("scripted_first".to_string(), scripted(&[0]));
    out.insert("scripted_ssf".to_string(), scripted(&[1, 1, 0]));
    out.insert("scripted_alternate".to_string(), scripted(&[0, 1]));
    out
}

fn open_box(lo: [f64; 2], hi: [f64; 2]) -> Result<AxisBox> {
    AxisBox::new(lo, hi)
}

fn impossibility_game() -> Result<VectorPayoffGame> {
    VectorPayoffGame::from_arrays(
        &["T", "B1", "B2"],
        &["L", "R"],
        &[
            &[[0.0, 1.0], [0.0, 1.0]],
            &[[1.0, 0.0], [-1.0, 0.0]],
            &[[-1.0, 0.0], [1.0, 0.0]],
        ],
    )
}

fn strategies(items: Vec<(&str, StrategyConfig)>) -> BTreeMap<String, StrategyConfig> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Builds a built-in scenario by name.
pub fn build_scenario(name: &str, overrides: &ScenarioOverrides) -> Result<Scenario> {
    let alpha = overrides.alpha.unwrap_or(DEFAULT_ALPHA);
    let alpha_prime = overrides.alpha_prime.unwrap_or(DEFAULT_ALPHA_PRIME);
    let t0 = overrides.initial_duration.unwrap_or(DEFAULT_INITIAL_DURATION);
    let (a, ap) = (alpha, alpha_prime);
    if !(0.0 < ap && ap < a && a < 0.5) {
        return Err(Error::InvalidInput(format!(
            "need 0 < α' < α < 1/2, got α = {a}, α' = {ap}"
        )));
    }
    let blackwell = StrategyConfig::Blackwell { fallback: None };
    let scenario = match name {
        "impossibility_closed_halfplane" => {
            let game = impossibility_game()?;
            // {x ≥ 0}, closed
            let region =
                Region::halfspaces(vec![Hyperplane::new(Point::from([-1.0, 0.0]), 0.0)?])?.closed();
            Scenario {
                name: name.into(),
                adversaries: adversary_suite(&game, &region),
                strategies: strategies(vec![
                    ("blackwell", blackwell),
                    (
                        "stationary_b",
                        StrategyConfig::Stationary {
                            mix: MixedAction::new(vec![0.0, 0.5, 0.5])?,
                        },
                    ),
                ]),
                game,
                target: ConvexBody::point([0.0, 0.0]),
                region,
                alpha,
                alpha_prime,
                expectation: Expectation::Impossible,
                plan: None,
            }
        }
        "convex_demo" => {
            let game = impossibility_game()?;
            // {x > -1/4}
            let region = Region::halfspaces(vec![Hyperplane::new(Point::from([-1.0, 0.0]), 0.25)?])?;
            Scenario {
                name: name.into(),
                adversaries: adversary_suite(&game, &region),
                strategies: strategies(vec![
                    (
                        "sigma_star",
                        StrategyConfig::SigmaStar {
                            kappa: None,
                            safe_action: None,
                        },
                    ),
                    ("blackwell", blackwell),
                ]),
                game,
                target: ConvexBody::point([0.0, 0.0]),
                region,
                alpha,
                alpha_prime,
                expectation: Expectation::ApproachableWhileRemaining,
                plan: None,
            }
        }
        "nonconvex_two_arms" => {
            let game = VectorPayoffGame::from_arrays(
                &["T1", "T2", "B1", "B2"],
                &["L", "R"],
                &[
                    &[[1.0, 2.0], [2.0, 2.0]],
                    &[[2.0, 2.0], [1.0, 2.0]],
                    &[[1.0, 1.0], [2.0, 1.0]],
                    &[[2.0, 1.0], [1.0, 1.0]],
                ],
            )?;
            let region = Region::boxes(vec![
                open_box([1.0 - a, 2.0 - a], [2.0 + a, 2.0 + a])?,
                open_box([1.5 - a, 1.0 - a], [1.5 + a, 2.0 + a])?,
            ])?;
            let target = ConvexBody::ball([1.5, 1.0], ap)?;
            let bottom = MixedAction::new(vec![0.0, 0.0, 0.5, 0.5])?;
            let plan = WaypointPlan {
                safe_mix: MixedAction::new(vec![0.5, 0.5, 0.0, 0.0])?,
                phase_mixes: vec![bottom.clone()],
                checkpoints: vec![Checkpoint::Body {
                    body: target.clone(),
                }],
                initial_duration: t0,
                final_target: target.clone(),
                delta: a / 4.0,
            };
            Scenario {
                name: name.into(),
                adversaries: adversary_suite(&game, &region),
                strategies: strategies(vec![
                    (
                        "waypoint",
                        StrategyConfig::Waypoint {
                            initial_duration: None,
                            plan: None,
                        },
                    ),
                    ("stationary_b", StrategyConfig::Stationary { mix: bottom }),
                    ("blackwell", blackwell),
                ]),
                game,
                target,
                region,
                alpha,
                alpha_prime,
                expectation: Expectation::OnlyWithHighProbability,
                plan: Some(plan),
            }
        }
        "waypoint_ladder" => {
            let game = VectorPayoffGame::from_arrays(
                &["x0", "x1", "x2", "x3"],
                &["L", "R"],
                &[
                    &[[1.0, 1.0], [1.0, 1.0]],
                    &[[4.0, 1.0], [4.0, 1.0]],
                    &[[2.0, 3.0], [4.0, 3.0]],
                    &[[4.0, 3.0], [2.0, 3.0]],
                ],
            )?;
            let region = Region::boxes(vec![
                open_box([1.0 - a, 1.0 - a], [3.0 + a, 1.0 + a])?,
                open_box([3.0 - a, 1.0 - a], [3.0 + a, 3.0 + a])?,
            ])?;
            let target = ConvexBody::ball([3.0, 3.0], ap)?;
            let plan = WaypointPlan {
                safe_mix: MixedAction::pure(4, 0)?,
                phase_mixes: vec![MixedAction::pure(4, 1)?, MixedAction::new(vec![0.0, 0.0, 0.5, 0.5])?],
                checkpoints: vec![
                    Checkpoint::Region {
                        region: Region::boxes(vec![AxisBox::around(&Point::from([3.0, 1.0]), a / 2.0)?])?,
                    },
                    Checkpoint::Body {
                        body: target.clone(),
                    },
                ],
                initial_duration: t0,
                final_target: target.clone(),
                delta: a / 4.0,
            };
            Scenario {
                name: name.into(),
                adversaries: adversary_suite(&game, &region),
                strategies: strategies(vec![
                    (
                        "waypoint",
                        StrategyConfig::Waypoint {
                            initial_duration: None,
                            plan: None,
                        },
                    ),
                    ("blackwell", blackwell),
                ]),
                game,
                target,
                region,
                alpha,
                alpha_prime,
                expectation: Expectation::OnlyWithHighProbability,
                plan: Some(plan),
            }
        }
        "block_reactive" => {
            let game = VectorPayoffGame::from_arrays(
                &["T1", "T2", "B"],
                &["L", "R"],
                &[
                    &[[1.0, 2.0], [1.0, 2.0]],
                    &[[2.0, 1.0], [2.0, 1.0]],
                    &[[2.0, 3.0], [3.0, 2.0]],
                ],
            )?;
            let region = Region::boxes(vec![
                open_box([2.0 - a, 2.0 - a], [2.0 + a, 3.0 + a])?,
                open_box([2.0 - a, 2.0 - a], [3.0 + a, 2.0 + a])?,
            ])?;
            let replies = [("L", "T2"), ("R", "T1")]
                .into_iter()
                .map(|(c, r)| (c.to_string(), r.to_string()))
                .collect();
            Scenario {
                name: name.into(),
                adversaries: adversary_suite(&game, &region),
                strategies: strategies(vec![
                    (
                        "block",
                        StrategyConfig::Block {
                            opening: "B".into(),
                            replies,
                        },
                    ),
                    ("blackwell", blackwell),
                ]),
                game,
                target: ConvexBody::point([2.0, 2.0]),
                region,
                alpha,
                alpha_prime,
                expectation: Expectation::ApproachableWhileRemaining,
                plan: None,
            }
        }
        other => {
            return Err(Error::UnknownScenario {
                name: other.to_string(),
                valid: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{response_set, safety_gap};

    #[test]
    fn all_builtins_are_consistent() {
        for name in SCENARIO_NAMES {
            let s = build_scenario(name, &ScenarioOverrides::default()).unwrap();
            s.validate().unwrap();
            for k in s.strategies.keys() {
                s.strategy(k).unwrap();
            }
        }
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = build_scenario("nope", &ScenarioOverrides::default()).unwrap_err();
        let msg = err.to_string();
        for name in SCENARIO_NAMES {
            assert!(msg.contains(name));
        }
    }

    #[test]
    fn alpha_order_enforced() {
        let bad = ScenarioOverrides {
            alpha: Some(0.1),
            alpha_prime: Some(0.2),
            ..Default::default()
        };
        assert!(build_scenario("waypoint_ladder", &bad).is_err());
        let half = ScenarioOverrides {
            alpha: Some(0.5),
            ..Default::default()
        };
        assert!(build_scenario("waypoint_ladder", &half).is_err());
    }

    #[test]
    fn closed_halfplane_keeps_boundary() {
        let s = build_scenario("impossibility_closed_halfplane", &ScenarioOverrides::default()).unwrap();
        assert!(s.region.contains(&Point::from([0.0, 0.0])).unwrap());
        assert!(!s.region.contains(&Point::from([-1e-12, 0.0])).unwrap());
    }

    #[test]
    fn block_reactive_safe_set() {
        let s = build_scenario("block_reactive", &ScenarioOverrides::default()).unwrap();
        assert_eq!(find_safe_actions(&s.game, &s.region).unwrap(), vec![2]);
        let r1 = response_set(&s.game, &MixedAction::pure(3, 2).unwrap()).unwrap();
        // the midpoint of R1(B) is outside D
        assert!(r1.contains(&Point::from([2.5, 2.5]), 1e-12).unwrap());
        assert!(!s.region.contains(&Point::from([2.5, 2.5])).unwrap());
    }

    #[test]
    fn convex_demo_gap() {
        let s = build_scenario("convex_demo", &ScenarioOverrides::default()).unwrap();
        assert_eq!(find_safe_actions(&s.game, &s.region).unwrap(), vec![0]);
        let gap = safety_gap(&s.game, &s.region, &MixedAction::pure(3, 0).unwrap()).unwrap();
        assert!((gap - 0.25).abs() < 1e-12);
    }

    #[test]
    fn scenario_json_round_trip() {
        for name in SCENARIO_NAMES {
            let s = build_scenario(name, &ScenarioOverrides::default()).unwrap();
            let text = serde_json::to_string(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }
}
