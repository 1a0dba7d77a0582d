use approach::game::{feasible_set, response_set, MixedAction, VectorPayoffGame};
use approach::geometry::{AxisBox, ConvexBody, Hyperplane, Point, Region};
use approach::scenarios::{build_scenario, Scenario, ScenarioOverrides};
use approach::strategies::{
    check_waypoint_conditions, AdversaryModel, BlackwellState, BlockStrategy, Branch, Checkpoint,
    ConstrainedState, PublicHistory, WaypointPlan, WaypointState,
};
use proptest::prelude::*;

fn scenario(name: &str) -> Scenario {
    build_scenario(name, &ScenarioOverrides::default()).unwrap()
}

fn with_t0(name: &str, t0: u64) -> Scenario {
    build_scenario(
        name,
        &ScenarioOverrides {
            initial_duration: Some(t0),
            ..Default::default()
        },
    )
    .unwrap()
}

fn sigma(s: &Scenario, kappa: Option<f64>) -> ConstrainedState {
    ConstrainedState::new(
        &s.game,
        s.target.clone(),
        s.region.clone(),
        s.default_safe_action().unwrap(),
        kappa,
    )
    .unwrap()
}

/// `min_p max_j λ·U(p, j)` on a step-10⁻³ simplex grid over three rows.
fn grid_scalar_value(game: &VectorPayoffGame, dir: &Point) -> f64 {
    let m = game.scalarized(dir);
    let mut best = f64::INFINITY;
    for a in 0..=1000 {
        for b in 0..=(1000 - a) {
            let p = [a as f64 / 1000.0, b as f64 / 1000.0, (1000 - a - b) as f64 / 1000.0];
            let worst = (0..m[0].len())
                .map(|j| (0..3).map(|i| p[i] * m[i][j]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.min(worst);
        }
    }
    best
}

#[test]
fn blackwell_step_at_one_zero() {
    let s = scenario("convex_demo");
    let target = ConvexBody::point([0.0, 0.0]);
    let mut b = BlackwellState::new(&s.game, target)
        .unwrap()
        .resume(1, Point::from([1.0, 0.0]))
        .unwrap();
    let (mix, cert) = b.step(&s.game).unwrap();
    let cert = cert.unwrap();
    assert!(cert.direction.distance(&Point::from([1.0, 0.0])) < 1e-12);
    assert_eq!(cert.projection_point, Point::from([0.0, 0.0]));
    assert!((mix.weight(1) - mix.weight(2)).abs() < 1e-9);
    assert!(cert.scalar_value.abs() < 1e-12);
    let oracle = grid_scalar_value(&s.game, &cert.direction);
    assert!((cert.scalar_value - oracle).abs() < 1e-3);
    assert!(cert.max_excess(&s.game) <= 1e-9);
}

#[test]
fn blackwell_fallbacks() {
    let s = scenario("convex_demo");
    let mut b = BlackwellState::new(&s.game, feasible_set(&s.game)).unwrap();
    assert_eq!(b.step(&s.game).unwrap().0, MixedAction::uniform(3));
    for (i, j) in [(0, 0), (1, 1), (2, 0), (1, 0)] {
        b.observe(s.game.payoff(i, j));
        let (mix, cert) = b.step(&s.game).unwrap();
        assert!(cert.is_none());
        assert_eq!(mix, MixedAction::uniform(3));
    }

    // inside the target after a certified step: replay the last mix
    let mut b = BlackwellState::new(&s.game, ConvexBody::point([0.0, 0.0])).unwrap();
    b.observe(&Point::from([1.0, 0.0]));
    let (first, _) = b.step(&s.game).unwrap();
    b.observe(&Point::from([-1.0, 0.0]));
    let (again, cert) = b.step(&s.game).unwrap();
    assert!(cert.is_none());
    assert_eq!(again, first);
}

#[test]
fn blackwell_average_bookkeeping() {
    let s = scenario("convex_demo");
    let mut b = BlackwellState::new(&s.game, ConvexBody::point([0.0, 0.0])).unwrap();
    b.observe(&Point::from([1.0, 0.0]));
    assert_eq!(b.running_average(), &Point::from([1.0, 0.0]));
    b.observe(&Point::from([0.0, 1.0]));
    assert_eq!(b.running_average(), &Point::from([0.5, 0.5]));
    let mut c = BlackwellState::new(&s.game, ConvexBody::point([0.0, 0.0])).unwrap();
    for _ in 0..1000 {
        c.observe(&Point::from([0.3, -0.7]));
        assert!(c.running_average().distance(&Point::from([0.3, -0.7])) < 1e-12);
    }
}

#[test]
fn sigma_star_branches() {
    let s = scenario("convex_demo");
    let mut st = sigma(&s, None);
    assert!((st.delta() - 0.25).abs() < 1e-15);
    assert_eq!(st.threshold_coefficient(), 3.0);
    let (mix, branch, _) = st.step(&s.game).unwrap();
    assert_eq!(branch, Branch::Safe);
    assert_eq!(mix, MixedAction::pure(3, 0).unwrap());

    // one safe stage paying (0, 1)
    st.observe(&Point::from([0.0, 1.0]), Branch::Safe);
    assert_eq!(st.safe_count(), 1);
    assert_eq!(st.safe_average(), Some(Point::from([0.0, 1.0])));
    assert_eq!(st.inner().stage_count(), 0);
    assert_eq!(st.overall_average(), &Point::from([0.0, 1.0]));

    // a = (0, 1), b = (1, 0), alternating
    let mut alt = sigma(&s, None);
    alt.observe(&Point::from([0.0, 1.0]), Branch::Safe);
    alt.observe(&Point::from([1.0, 0.0]), Branch::Inner);
    assert_eq!(alt.overall_average(), &Point::from([0.5, 0.5]));
    assert_eq!(alt.safe_average(), Some(Point::from([0.0, 1.0])));
    assert_eq!(alt.inner().running_average(), &Point::from([1.0, 0.0]));
    assert!(alt.decomposition_residual() < 1e-15);

    let mut inner_only = sigma(&s, None);
    for _ in 0..10 {
        inner_only.observe(&Point::from([1.0, 0.0]), Branch::Inner);
    }
    assert_eq!(inner_only.inner().stage_count(), 10);
    assert_eq!(inner_only.stage_count() - inner_only.safe_count(), 10);
}

#[test]
fn sigma_star_threshold() {
    // D = {x > −1.25}: clearance of (0, y) is 1.25
    let s = scenario("convex_demo");
    let region = Region::halfspaces(vec![Hyperplane::new(Point::from([-1.0, 0.0]), 1.25).unwrap()]).unwrap();
    let mut st = ConstrainedState::new(&s.game, s.target.clone(), region, MixedAction::pure(3, 0).unwrap(), Some(3.0)).unwrap();
    for _ in 0..100 {
        st.observe(&Point::from([0.0, 1.0]), Branch::Safe);
    }
    // clearance 1.25 > 3/100
    assert!(!st.in_h_star());
    assert_eq!(st.step(&s.game).unwrap().1, Branch::Inner);

    // clearance 0.2 at t = 10 is below 3/10
    let near = Region::halfspaces(vec![Hyperplane::new(Point::from([-1.0, 0.0]), 0.2).unwrap()]).unwrap();
    let mut st = ConstrainedState::new(&s.game, s.target.clone(), near, MixedAction::pure(3, 0).unwrap(), Some(3.0)).unwrap();
    for _ in 0..10 {
        st.observe(&Point::from([0.0, 1.0]), Branch::Safe);
    }
    assert!(st.in_h_star());
    assert_eq!(st.step(&s.game).unwrap().1, Branch::Safe);
}

#[test]
fn waypoint_phases_on_the_ladder() {
    let t0 = 200;
    let s = with_t0("waypoint_ladder", t0);
    let mut plan = s.plan.clone().unwrap();
    // a tight first checkpoint so entry happens close to (3, 1)
    plan.checkpoints[0] = Checkpoint::Region {
        region: Region::boxes(vec![AxisBox::around(&Point::from([3.0, 1.0]), 0.01).unwrap()]).unwrap(),
    };
    let mut w = WaypointState::new(&s.game, plan.clone()).unwrap();
    let mut t = 0u64;
    let mut phase_one_end = None;
    while t < 20 * t0 {
        let (mix, _) = w.step(&s.game).unwrap();
        if t < t0 {
            assert_eq!(mix, MixedAction::pure(4, 0).unwrap());
        }
        if w.current_phase() == 2 && phase_one_end.is_none() {
            phase_one_end = Some((t, w.average().clone()));
        }
        // the x0 and x1 rows do not depend on the column
        let i = mix.sample(0.5);
        w.observe(s.game.payoff(i, (t % 2) as usize));
        t += 1;
    }
    let (tau, g) = phase_one_end.unwrap();
    assert!(g.distance(&Point::from([3.0, 1.0])) < 0.02, "{g}");
    assert!(tau <= 3 * t0);
    assert_eq!(w.current_phase(), 2);
    let entries = w.phase_entry_stages();
    assert_eq!(entries[0], t0);
    assert!(entries.windows(2).all(|p| p[0] < p[1]));

    // x0 for T0 stages then x1 for 2·T0 stages lands exactly on (3, 1)
    let mut sum = Point::zeros(2);
    for k in 0..3 * t0 {
        sum.axpy(1.0, s.game.payoff(if k < t0 { 0 } else { 1 }, 0));
    }
    assert_eq!(sum.divided((3 * t0) as f64), Point::from([3.0, 1.0]));
}

#[test]
fn waypoint_final_phase_plays_the_half_mix() {
    let s = with_t0("waypoint_ladder", 100);
    let mut w = WaypointState::new(&s.game, s.plan.clone().unwrap()).unwrap();
    let half = MixedAction::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
    let mut finals = 0;
    for t in 0..20_000u64 {
        let (mix, _) = w.step(&s.game).unwrap();
        if w.current_phase() == 2 {
            assert_eq!(mix, half);
            finals += 1;
        }
        // alternate so the realized x2/x3 payoffs average to (3, 3)
        let i = if mix.weight(2) == 0.5 { 2 + (t % 2) as usize } else { mix.sample(0.5) };
        w.observe(s.game.payoff(i, 0));
    }
    assert!(finals > 0);
}

#[test]
fn waypoint_conditions() {
    for name in ["waypoint_ladder", "nonconvex_two_arms"] {
        let s = scenario(name);
        let oracle = s.oracle(400).unwrap();
        let report = check_waypoint_conditions(s.plan.as_ref().unwrap(), &s.game, &s.region, &oracle).unwrap();
        assert!(report.all_pass(), "{name}: {report:?}");
        assert!(report.approximate);
    }

    // a plan whose path leaves D
    let s = scenario("waypoint_ladder");
    let mut plan = s.plan.clone().unwrap();
    plan.checkpoints[0] = Checkpoint::Region {
        region: Region::boxes(vec![AxisBox::around(&Point::from([2.0, 2.5]), 0.1).unwrap()]).unwrap(),
    };
    let oracle = s.oracle(200).unwrap();
    let report = check_waypoint_conditions(&plan, &s.game, &s.region, &oracle).unwrap();
    assert_eq!(report.transitions[0].hull_in_region, Some(false));
    assert!(!report.all_pass());

    // m = 1 with an open ball well inside D
    let game = VectorPayoffGame::from_arrays(
        &["a", "b"],
        &["L", "R"],
        &[&[[0.0, 0.0], [0.0, 0.0]], &[[1.0, 0.0], [1.0, 0.0]]],
    )
    .unwrap();
    let region = Region::boxes(vec![AxisBox::new([-0.5, -0.5], [1.5, 0.5]).unwrap()]).unwrap();
    let ball = ConvexBody::ball([1.0, 0.0], 0.1).unwrap();
    let plan = WaypointPlan {
        safe_mix: MixedAction::pure(2, 0).unwrap(),
        phase_mixes: vec![MixedAction::pure(2, 1).unwrap()],
        checkpoints: vec![Checkpoint::Body { body: ball.clone() }],
        initial_duration: 10,
        final_target: ball,
        delta: 0.05,
    };
    let oracle = approach::geometry::GridOracle::new([-1.0, -1.0], [2.0, 1.0], 200).unwrap();
    let report = check_waypoint_conditions(&plan, &game, &region, &oracle).unwrap();
    assert!(report.all_pass(), "{report:?}");
}

#[test]
fn block_replies() {
    let s = scenario("block_reactive");
    let mut b = BlockStrategy::by_names(&s.game, "B", &[("L", "T2"), ("R", "T1")]).unwrap();
    assert_eq!(b.step(), 2);
    b.observe(0);
    assert_eq!(b.step(), 1);
    b.observe(1);
    assert_eq!(b.step(), 2);
    b.observe(1);
    assert_eq!(b.step(), 0);
    let block = s.game.payoff(2, 0) + s.game.payoff(1, 0);
    assert_eq!(block, Point::from([4.0, 4.0]));
    assert!(BlockStrategy::by_names(&s.game, "B", &[("L", "B"), ("R", "T1")]).is_err());
    assert!(BlockStrategy::by_names(&s.game, "B", &[("L", "T1"), ("R", "T2")]).is_err());
}

#[test]
fn adversary_examples() {
    let s = scenario("convex_demo");
    let mut h = PublicHistory::new(2);
    let half = AdversaryModel::Stationary { mix: MixedAction::uniform(2) };
    let script = AdversaryModel::Scripted { actions: vec![0, 1] };
    for t in 0..5 {
        assert_eq!(half.step(&s.game, &h), MixedAction::uniform(2));
        assert_eq!(script.step(&s.game, &h), MixedAction::pure(2, t % 2).unwrap());
        h.record(&s.game, 0, t % 2);
    }
    assert!(AdversaryModel::Scripted { actions: vec![2] }.validate(&s.game).is_err());

    // near x = −¼: the column whose average payoff has the least first coordinate
    let push = AdversaryModel::AdaptivePush { region: s.region.clone() };
    let guess = MixedAction::uniform(3);
    let expected = (0..2)
        .min_by(|&a, &b| s.game.row_mix_payoff(&guess, a)[0].total_cmp(&s.game.row_mix_payoff(&guess, b)[0]))
        .unwrap();
    let mut h = PublicHistory::new(2);
    h.record(&s.game, 2, 0);
    h.record(&s.game, 0, 0);
    h.record(&s.game, 0, 0);
    h.record(&s.game, 0, 0);
    assert_eq!(h.average, Point::from([-0.25, 0.75]));
    let chosen = push.step(&s.game, &h);
    let best_j = (0..2).find(|&j| chosen.weight(j) == 1.0).unwrap();
    // both columns average to x = 0 against a uniform guess, so the tie goes to L
    assert_eq!(expected, 0);
    assert_eq!(best_j, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Decomposition, counts and certificate separation along random plays.
    #[test]
    fn sigma_star_invariants(cols in prop::collection::vec(0usize..2, 1..400), seed in 0u64..1000) {
        let s = scenario("convex_demo");
        let mut st = sigma(&s, None);
        let f = feasible_set(&s.game);
        for (t, j) in cols.iter().enumerate() {
            let (mix, branch, cert) = st.step(&s.game).unwrap();
            let w: f64 = mix.weights().iter().sum();
            prop_assert!((w - 1.0).abs() <= 1e-12);
            if let Some(c) = &cert {
                prop_assert!((c.direction.norm() - 1.0).abs() <= 1e-9);
                prop_assert!(c.max_excess(&s.game) <= 1e-6);
            }
            let u = ((seed.wrapping_mul(6364136223846793005).wrapping_add(t as u64)) >> 33) as f64 / (1u64 << 31) as f64;
            let i = mix.sample(u);
            st.observe(s.game.payoff(i, *j), branch);
            prop_assert!(st.safe_count() <= st.stage_count());
            prop_assert!(st.decomposition_residual() <= 1e-9);
            prop_assert!(f.distance(st.overall_average()).unwrap() <= 1e-9);
            prop_assert!(s.region.contains(st.overall_average()).unwrap());
        }
    }

    #[test]
    fn block_averages_two_two(cols in prop::collection::vec(0usize..2, 2..200)) {
        let s = scenario("block_reactive");
        let mut b = BlockStrategy::by_names(&s.game, "B", &[("L", "T2"), ("R", "T1")]).unwrap();
        let mut sum = Point::zeros(2);
        for (t, &j) in cols.iter().enumerate() {
            let i = b.step();
            sum.axpy(1.0, s.game.payoff(i, j));
            b.observe(j);
            if t % 2 == 1 {
                prop_assert_eq!(sum.divided((t + 1) as f64), Point::from([2.0, 2.0]));
            }
        }
    }

    #[test]
    fn blackwell_certificates_separate(
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
        cx in -0.5..0.5f64,
        cy in 0.0..0.8f64,
        r in 0.0..0.3f64,
    ) {
        let s = scenario("convex_demo");
        // balls containing the origin, which is approachable in this game
        let target = ConvexBody::ball([cx, cy], (cx * cx + cy * cy).sqrt() + r).unwrap();
        let mut b = BlackwellState::new(&s.game, target.clone()).unwrap().resume(1, Point::from([x, y])).unwrap();
        let (mix, cert) = b.step(&s.game).unwrap();
        if let Some(c) = cert {
            prop_assert_eq!(&c.chosen_mix, &mix);
            prop_assert!(c.max_excess(&s.game) <= 1e-6);
            prop_assert!(target.distance(&c.projection_point).unwrap() <= 1e-9);
        } else {
            prop_assert!(target.distance(&Point::from([x, y])).unwrap() <= 1e-9);
        }
        let _ = response_set(&s.game, &mix).unwrap();
    }
}
