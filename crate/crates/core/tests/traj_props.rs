use dualplan_core::decomp::{Corridor, CorridorKind, Polyhedron};
use dualplan_core::geom::{Aabb, Vec3};
use dualplan_core::solver::{enumerate_assignments, solve_miqp, MiqpStatus, TOL_FEAS};
use dualplan_core::traj::{
    bezier_point, build_miqp, control_points, line_search_factors, line_search_solve, spline_from_solution, Cubic,
    FinalMode, JerkSpline, Limits, State, TrajRequest,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn boxed(lo: [f64; 3], hi: [f64; 3]) -> Polyhedron {
    let b = Aabb::new(Vec3::from(lo), Vec3::from(hi));
    Polyhedron::from_box(&b, (b.min, b.max))
}

/// Barycentric weights of `p` in the tetrahedron `r` (non-degenerate).
fn barycentric(r: &[Vec3; 4], p: &Vec3) -> Option<[f64; 4]> {
    let m = nalgebra::Matrix3::from_columns(&[r[1] - r[0], r[2] - r[0], r[3] - r[0]]);
    let w = m.try_inverse()? * (p - r[0]);
    Some([1.0 - w.sum(), w.x, w.y, w.z])
}

#[test]
fn curve_lies_in_control_point_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let v = |rng: &mut ChaCha8Rng| Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let c = Cubic { a: v(&mut rng), b: v(&mut rng), c: v(&mut rng), d: v(&mut rng) };
        let dt = rng.gen_range(0.05..2.0);
        let r = control_points(&c, dt);
        for s in 0..=100 {
            let u = s as f64 / 100.0;
            let x = c.eval(u * dt).x;
            // the Bézier form reproduces the cubic exactly
            assert!((bezier_point(&r, u) - x).norm() <= 1e-9 * (1.0 + x.norm()));
            // Bernstein weights are a convex combination
            let w = [(1.0 - u).powi(3), 3.0 * (1.0 - u).powi(2) * u, 3.0 * (1.0 - u) * u * u, u.powi(3)];
            assert!(w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
    // independent check: barycentric coordinates in the control tetrahedron
    for _ in 0..2000 {
        let v = |rng: &mut ChaCha8Rng| Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let c = Cubic { a: v(&mut rng), b: v(&mut rng), c: v(&mut rng), d: v(&mut rng) };
        let r = control_points(&c, 1.0);
        let Some(_) = barycentric(&r, &r[0]) else { continue };
        for s in 0..=100 {
            let w = barycentric(&r, &c.eval(s as f64 / 100.0).x).unwrap();
            assert!(w.iter().all(|&x| x >= -1e-9), "{w:?}");
        }
    }
}

#[test]
fn random_polynomial_sampling_matches_direct_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let init = State {
            x: Vec3::new(rng.gen_range(-1.0..1.0), 0.3, -0.2),
            v: Vec3::new(rng.gen_range(-1.0..1.0), 0.1, 0.0),
            a: Vec3::new(0.0, rng.gen_range(-1.0..1.0), 0.5),
        };
        let jerks: Vec<Vec3> = (0..5).map(|_| Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
        let dt = rng.gen_range(0.1..0.6);
        let s = JerkSpline::from_jerks(&init, &jerks, dt, 1.0);
        let t = 1.0 + rng.gen_range(0.0..s.duration());
        // integrate by hand
        let mut st = init;
        let mut rem = t - 1.0;
        let mut k = 0;
        while rem > dt && k < 4 {
            let j = jerks[k];
            st = State {
                x: st.x + st.v * dt + st.a * (dt * dt / 2.0) + j * (dt.powi(3) / 6.0),
                v: st.v + st.a * dt + j * (dt * dt / 2.0),
                a: st.a + j * dt,
            };
            rem -= dt;
            k += 1;
        }
        let j = jerks[k];
        let want = st.x + st.v * rem + st.a * (rem * rem / 2.0) + j * (rem.powi(3) / 6.0);
        assert!((s.at(t).x - want).norm() < 1e-9);
    }
}

fn two_box_corridor() -> Corridor {
    Corridor { polys: vec![boxed([-0.5, -0.5, -0.5], [3.0, 0.5, 0.5]), boxed([2.5, -0.5, -0.5], [3.5, 4.0, 0.5])], kind: CorridorKind::Whole }
}

#[test]
fn resting_start_at_goal_costs_nothing() {
    let c = two_box_corridor();
    let s = State::at_rest(Vec3::new(0.5, 0.0, 0.0));
    let p = build_miqp(&s, FinalMode::FixedStop(s.x), &c, 5, 0.3, &Limits::uniform(5.0, 5.0, 8.0));
    let sol = solve_miqp(&p, 1000, None).unwrap();
    assert_eq!(sol.status, MiqpStatus::Optimal);
    assert!(sol.objective.abs() < 1e-12);
    assert!(sol.x.amax() < 1e-9);
}

#[test]
fn corner_corridor_uses_both_boxes_and_matches_enumeration() {
    let c = two_box_corridor();
    let s = State::at_rest(Vec3::new(0.0, 0.0, 0.0));
    let goal = Vec3::new(3.0, 3.5, 0.0);
    let limits = Limits::uniform(5.0, 5.0, 8.0);
    let p = build_miqp(&s, FinalMode::FixedStop(goal), &c, 4, 1.2, &limits);
    let sol = solve_miqp(&p, 20_000, None).unwrap();
    assert_eq!(sol.status, MiqpStatus::Optimal);
    assert!(sol.assignment.contains(&0) && sol.assignment.contains(&1));
    let (_, best) = enumerate_assignments(&p).unwrap();
    assert!((sol.objective - best).abs() <= 1e-6 * best);
    let spline = spline_from_solution(&s, &sol.x, 1.2, 0.0);
    assert!((spline.jerk_cost() - sol.objective).abs() <= 1e-9 * sol.objective.max(1.0));
    for (n, &poly) in sol.assignment.iter().enumerate() {
        for r in spline.control_points(n) {
            assert!(c.polys[poly].slack(&r) >= -TOL_FEAS);
        }
    }
    for n in 1..=4 {
        let k = spline.knot(n);
        assert!(k.v.amax() <= 5.0 + 1e-7 && k.a.amax() <= 5.0 + 1e-7);
    }
    for iv in &spline.intervals {
        assert!(iv.jerk().amax() <= 8.0 + 1e-7);
    }
    assert!((spline.end().x - goal).norm() < 1e-7 && spline.end().v.norm() < 1e-7);
}

#[test]
fn free_stop_is_no_worse_than_any_fixed_stop() {
    let c = Corridor { polys: vec![boxed([-1.0, -1.0, -1.0], [2.0, 1.0, 1.0])], kind: CorridorKind::Safe };
    let s = State { x: Vec3::zeros(), v: Vec3::new(2.0, 0.5, 0.0), a: Vec3::zeros() };
    let limits = Limits::uniform(5.0, 5.0, 20.0);
    let free = solve_miqp(&build_miqp(&s, FinalMode::FreeStop, &c, 5, 0.3, &limits), 100, None).unwrap();
    assert_eq!(free.status, MiqpStatus::Optimal);
    let spline = spline_from_solution(&s, &free.x, 0.3, 0.0);
    assert!(c.polys[0].slack(&spline.end().x) >= -1e-7);
    let mut best_fixed = f64::INFINITY;
    for i in 0..=12 {
        for j in 0..=8 {
            let goal = Vec3::new(-1.0 + 3.0 * i as f64 / 12.0, -1.0 + 2.0 * j as f64 / 8.0, 0.0);
            let f = solve_miqp(&build_miqp(&s, FinalMode::FixedStop(goal), &c, 5, 0.3, &limits), 100, None).unwrap();
            if f.status == MiqpStatus::Optimal {
                best_fixed = best_fixed.min(f.objective);
            }
        }
    }
    assert!(free.objective <= best_fixed + 1e-9);
}

#[test]
fn line_search_returns_smallest_feasible_factor() {
    assert_eq!(line_search_factors(1.2, 0.5, 1.0, 6)[0], 1.0);
    let fs = line_search_factors(3.0, 1.0, 2.0, 6);
    assert_eq!(fs.len(), 7);
    assert!((fs[6] - 5.0).abs() < 1e-12);

    // moving fast toward a short box end: small time factors are infeasible
    let c = Corridor { polys: vec![boxed([-1.0, -1.0, -1.0], [6.0, 1.0, 1.0])], kind: CorridorKind::Whole };
    let s = State { x: Vec3::zeros(), v: Vec3::new(4.0, 0.0, 0.0), a: Vec3::zeros() };
    let limits = Limits::uniform(5.0, 5.0, 8.0);
    let goal = Vec3::new(5.0, 0.0, 0.0);
    let req = TrajRequest {
        init: s,
        mode: FinalMode::FixedStop(goal),
        target: goal,
        corridor: &c,
        intervals: 8,
        limits,
        t0: 0.0,
        node_budget: 200,
        warm: None,
    };
    let feasible = |f: f64| {
        let dt = dualplan_core::traj::dt_lower_bound(&s, &goal, &limits, 8, f);
        solve_miqp(&build_miqp(&s, FinalMode::FixedStop(goal), &c, 8, dt, &limits), 200, None).unwrap().status == MiqpStatus::Optimal
    };
    // bisection for the feasibility threshold
    let (mut lo, mut hi) = (1.0, 6.0);
    assert!(!feasible(lo) && feasible(hi));
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let out = line_search_solve(&req, 1.0, 0.0, 5.0, 20).unwrap();
    let lattice = line_search_factors(1.0, 0.0, 5.0, 20);
    let expected = lattice.iter().copied().find(|&f| f >= hi - 1e-9).unwrap();
    assert!((out.factor - expected).abs() < 1e-12, "{} vs {expected} (threshold {hi})", out.factor);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Optimal trajectories respect corridor, limits and continuity.
    #[test]
    fn optimal_trajectories_satisfy_constraints(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = two_box_corridor();
        let s = State { x: Vec3::new(rng.gen_range(0.0..1.0), 0.0, 0.0), v: Vec3::new(rng.gen_range(0.0..2.0), 0.0, 0.0), a: Vec3::zeros() };
        let goal = Vec3::new(3.0, rng.gen_range(1.0..3.5), 0.0);
        let limits = Limits::uniform(5.0, 5.0, 8.0);
        let dt = rng.gen_range(0.4..0.9);
        let p = build_miqp(&s, FinalMode::FixedStop(goal), &c, 5, dt, &limits);
        let sol = solve_miqp(&p, 20_000, None).unwrap();
        if sol.status == MiqpStatus::Optimal {
            let spline = spline_from_solution(&s, &sol.x, dt, 0.0);
            for (n, &poly) in sol.assignment.iter().enumerate() {
                for r in spline.control_points(n) {
                    prop_assert!(c.polys[poly].slack(&r) >= -TOL_FEAS);
                }
            }
            for n in 0..4 {
                let l = spline.intervals[n].eval(dt);
                let r = spline.intervals[n + 1].eval(0.0);
                prop_assert!((l.x - r.x).norm() < 1e-9 && (l.v - r.v).norm() < 1e-9 && (l.a - r.a).norm() < 1e-9);
            }
            for n in 1..=5 {
                let k = spline.knot(n);
                prop_assert!(k.v.amax() <= 5.0 + 1e-7 && k.a.amax() <= 5.0 + 1e-7);
            }
            prop_assert!((spline.jerk_cost() - sol.objective).abs() <= 1e-9 * sol.objective.max(1.0));
        }
    }
}
