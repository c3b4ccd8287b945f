use dualplan_core::geom::Vec3;
use dualplan_core::map::{SlidingGrid, VoxelState};
use dualplan_core::replan::{
    project_goal, replan_once, select_a, select_r, CommittedTrajectory, KeepReason, Latency, PlanSpace, PlannerConfig,
    PlannerState, ReplanResult,
};
use dualplan_core::traj::{JerkSpline, State};

const RES: f64 = 0.25;

fn inflation() -> f64 {
    0.2 + RES * 3f64.sqrt() / 2.0
}

/// 20 × 20 × 4 m grid centred at (0, 0, 1) with every voxel set by `label`.
fn grid_with(label: impl Fn(Vec3) -> VoxelState) -> SlidingGrid {
    let mut g = SlidingGrid::new(Vec3::new(0.0, 0.0, 1.0), RES, [80, 80, 16], inflation()).unwrap();
    let [nx, ny, nz] = g.dims();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let c = g.voxel_center([x, y, z]);
                g.set_state([x, y, z], label(c));
            }
        }
    }
    g
}

const FIXED: Latency = Latency::Fixed { seconds: 0.05 };

#[test]
fn empty_world_commits_a_safe_stopping_trajectory() {
    let grid = grid_with(|_| VoxelState::FreeKnown);
    let cfg = PlannerConfig::default();
    let mut st = PlannerState::new(&cfg);
    let start = Vec3::new(-5.0, 0.0, 1.0);
    let prev = CommittedTrajectory::at_rest(start, 0.0);
    let out = replan_once(&mut st, &grid, &prev, Vec3::new(5.0, 0.0, 1.0), 0.0, &cfg, 1.0, FIXED);
    let ReplanResult::NewCommit(c) = &out.result else { panic!("{:?}", out.result) };
    let t0 = c.t_start();
    let t1 = c.t_end();
    for i in 0..=1000 {
        let t = t0 + (t1 - t0) * i as f64 / 1000.0;
        assert_eq!(grid.classify(&c.sample(t).x, true), VoxelState::FreeKnown, "t = {t}");
    }
    let end = c.terminal();
    assert!(end.v.norm() < 1e-6 && end.a.norm() < 1e-6);
    // everything known and free: no unknown crossing, so R is the whole end
    assert!(out.points.h.is_none());
    assert!((out.points.r.unwrap() - out.points.e.unwrap()).norm() < 1e-6);
    for w in c.pieces.windows(2) {
        assert!((w[0].t_end - w[1].t_start).abs() < 1e-12);
        let l = w[0].spline.at(w[0].t_end);
        let r = w[1].spline.at(w[1].t_start);
        assert!((l.x - r.x).norm() < 1e-6 && (l.v - r.v).norm() < 1e-6 && (l.a - r.a).norm() < 1e-6);
    }
}

#[test]
fn unknown_ahead_branches_before_it() {
    // known free for x < 0, unknown beyond
    let grid = grid_with(|c| if c.x < 0.0 { VoxelState::FreeKnown } else { VoxelState::Unknown });
    let cfg = PlannerConfig::default();
    let mut st = PlannerState::new(&cfg);
    let prev = CommittedTrajectory::at_rest(Vec3::new(-5.0, 0.0, 1.0), 0.0);
    let out = replan_once(&mut st, &grid, &prev, Vec3::new(8.0, 0.0, 1.0), 0.0, &cfg, 1.0, FIXED);
    let c = out.committed().unwrap_or_else(|| panic!("{:?}", out.result));
    assert!(out.points.h.is_some());
    for (_, s) in c.samples(0.01) {
        assert_eq!(grid.classify(&s.x, true), VoxelState::FreeKnown);
    }
    // the long trajectory does enter unknown space
    let whole = out.whole.as_ref().unwrap();
    assert!(whole.end().x.x > 0.0);
    let (w0, w1) = c.whole_prefix;
    let (s0, _) = c.safe;
    assert!(w1 >= w0 && (w1 - s0).abs() < 1e-12);
}

#[test]
fn enclosed_vehicle_keeps_previous() {
    // occupied shell around the start
    let grid = grid_with(|c| {
        let d = (c - Vec3::new(0.0, 0.0, 1.0)).abs().max();
        if (1.0..1.3).contains(&d) {
            VoxelState::OccupiedKnown
        } else {
            VoxelState::FreeKnown
        }
    });
    let cfg = PlannerConfig::default();
    let mut st = PlannerState::new(&cfg);
    let prev = CommittedTrajectory::at_rest(Vec3::new(0.0, 0.0, 1.0), 0.0);
    let out = replan_once(&mut st, &grid, &prev, Vec3::new(6.0, 0.0, 1.0), 0.0, &cfg, 1.0, FIXED);
    assert_eq!(out.keep_reason(), Some(KeepReason::OptInfeasible));
}

#[test]
fn zero_budget_is_overtime() {
    let grid = grid_with(|_| VoxelState::FreeKnown);
    let cfg = PlannerConfig::default();
    let mut st = PlannerState::new(&cfg);
    let prev = CommittedTrajectory::at_rest(Vec3::new(-5.0, 0.0, 1.0), 0.0);
    let out = replan_once(&mut st, &grid, &prev, Vec3::new(5.0, 0.0, 1.0), 0.0, &cfg, 0.0, FIXED);
    assert_eq!(out.keep_reason(), Some(KeepReason::Overtime));
}

#[test]
fn free_only_space_never_plans_into_unknown() {
    let grid = grid_with(|c| if c.x < 0.0 { VoxelState::FreeKnown } else { VoxelState::Unknown });
    let cfg = PlannerConfig { plan_space: PlanSpace::FreeOnly, ..PlannerConfig::default() };
    let mut st = PlannerState::new(&cfg);
    let prev = CommittedTrajectory::at_rest(Vec3::new(-5.0, 0.0, 1.0), 0.0);
    let out = replan_once(&mut st, &grid, &prev, Vec3::new(8.0, 0.0, 1.0), 0.0, &cfg, 1.0, FIXED);
    let c = out.committed().unwrap();
    for (_, s) in c.samples(0.01) {
        assert_eq!(grid.classify(&s.x, true), VoxelState::FreeKnown);
    }
}

#[test]
fn point_a_selection() {
    let init = State { x: Vec3::zeros(), v: Vec3::new(1.0, 0.0, 0.0), a: Vec3::zeros() };
    let s = JerkSpline::from_jerks(&init, &[Vec3::new(-1.0, 0.0, 0.0); 4], 0.5, 0.0);
    let mut c = CommittedTrajectory::at_rest(Vec3::zeros(), 0.0);
    c.pieces[0].t_end = s.t_end();
    c.pieces[0].spline = s.clone();
    let (a, t) = select_a(&c, 0.3, 0.0);
    assert_eq!(t, 0.3);
    assert_eq!(a, s.at(0.3));
    let (a, t) = select_a(&c, 0.3, 0.4);
    assert!((t - 0.7).abs() < 1e-15);
    assert!((a.x - s.at(0.7).x).norm() < 1e-15);
    let (a, _) = select_a(&c, 0.3, 10.0);
    assert_eq!(a.v, Vec3::zeros());
    assert_eq!(a.a, Vec3::zeros());
    assert_eq!(a.x, s.end().x);
}

#[test]
fn goal_projection() {
    let grid = grid_with(|_| VoxelState::Unknown);
    let ext = grid.extent();
    let a = Vec3::new(0.0, 0.0, 1.0);
    let inside = Vec3::new(3.0, -2.0, 1.5);
    assert_eq!(project_goal(inside, a, &grid, 0.5), inside);
    let g = project_goal(Vec3::new(100.0, 0.0, 1.0), a, &grid, 0.5);
    assert!((g - Vec3::new(ext.max.x - 0.5, 0.0, 1.0)).norm() < 1e-12);
    // diagonal: exits through +x at y = x
    let g = project_goal(Vec3::new(100.0, 100.0, 1.0), a, &grid, 0.0);
    assert!((g.x - ext.max.x).abs() < 1e-12 && (g.y - ext.max.x).abs() < 1e-12);
    assert_eq!(project_goal(a, a, &grid, 0.5), a);
}

#[test]
fn branching_point_stopping_rule() {
    // constant 2 m/s along x from x = 0
    let init = State { x: Vec3::zeros(), v: Vec3::new(2.0, 0.0, 0.0), a: Vec3::zeros() };
    let s = JerkSpline::from_jerks(&init, &[Vec3::zeros(); 10], 0.1, 0.0);
    let amax = Vec3::repeat(5.0);
    // stopping distance 0.4 m; H at x = 1.5 → last admissible x just below 1.1
    let h = Vec3::new(1.5, 0.0, 0.0);
    let (r, t) = select_r(&s, Some((h, 0.75)), &amax, 0.01);
    assert!(h.x - r.x.x > 0.4 && h.x - r.x.x < 0.4 + 0.02 + 1e-9, "{}", r.x.x);
    assert!((r.x.x - 2.0 * t).abs() < 1e-9);
    // no crossing: R is the end
    let (r, t) = select_r(&s, None, &amax, 0.01);
    assert_eq!(t, s.t_end());
    assert_eq!(r, s.end());
    // already too close at the start: fall back to A
    let h = Vec3::new(0.3, 0.0, 0.0);
    let (r, t) = select_r(&s, Some((h, 0.15)), &amax, 0.01);
    assert_eq!(t, 0.0);
    assert_eq!(r.x, Vec3::zeros());
    // moving away from H is always admissible
    let hb = Vec3::new(-0.1, 0.0, 0.0);
    let (_, t) = select_r(&s, Some((hb, 0.5)), &amax, 0.01);
    assert!(t < 0.5 && 0.5 - t <= 0.01 + 1e-9);
}

mod chained {
    use super::*;
    use proptest::prelude::*;

    fn pillars_and_fog(pillars: &[(f64, f64)], fog_x: f64) -> SlidingGrid {
        grid_with(|c| {
            if pillars.iter().any(|&(x, y)| (c.x - x).hypot(c.y - y) < 0.3) {
                VoxelState::OccupiedKnown
            } else if c.x > fog_x {
                VoxelState::Unknown
            } else {
                VoxelState::FreeKnown
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        /// Successive cycles on one grid: every commitment is continuous,
        /// its executed prefix stays in known-free space, its whole span
        /// avoids occupied space, and a kept cycle leaves the previous
        /// commitment untouched.
        #[test]
        fn commitments_are_continuous_and_safe(
            pillars in prop::collection::vec((-3.0..6.0f64, -4.0..4.0f64), 0..8),
            fog_x in -1.0..5.0f64,
            goal_y in -5.0..5.0f64,
        ) {
            let grid = pillars_and_fog(&pillars, fog_x);
            let cfg = PlannerConfig::default();
            let mut st = PlannerState::new(&cfg);
            let mut prev = CommittedTrajectory::at_rest(Vec3::new(-6.0, 0.0, 1.0), 0.0);
            for k in 0..6 {
                let now = 0.1 * k as f64;
                let before = prev.clone();
                let out = replan_once(&mut st, &grid, &prev, Vec3::new(8.0, goal_y, 1.0), now, &cfg, 1.0, FIXED);
                prop_assert_eq!(&prev, &before);
                let Some(c) = out.committed() else { continue };
                for w in c.pieces.windows(2) {
                    prop_assert!((w[0].t_end - w[1].t_start).abs() < 1e-9);
                    let (l, r) = (w[0].spline.at(w[0].t_end), w[1].spline.at(w[1].t_start));
                    prop_assert!((l.x - r.x).norm() < 1e-6 && (l.v - r.v).norm() < 1e-6 && (l.a - r.a).norm() < 1e-6);
                }
                let step = RES / 4.0 / cfg.limits.v_max.norm();
                let (w0, w1) = c.whole_prefix;
                for (t, s) in c.samples(step) {
                    let label = grid.classify(&s.x, true);
                    prop_assert_ne!(label, VoxelState::OccupiedKnown, "t = {}", t);
                    if (w0..=w1).contains(&t) {
                        prop_assert_eq!(label, VoxelState::FreeKnown, "prefix at t = {}", t);
                    }
                }
                let end = c.terminal();
                prop_assert!(end.v.norm() < 1e-6);
                prev = c.clone();
            }
        }
    }
}
