//! One receding-horizon cycle: a long trajectory through free and unknown
//! space toward the goal, a stopping trajectory inside known-free space
//! branching off it, and the fallbacks that keep the previous commitment.

use serde::{Deserialize, Serialize};

use crate::decomp::{decompose, split_and_truncate, Corridor, CorridorKind, DEFAULT_LOCAL_BOX};
use crate::geom::{closest_on_segment, Vec3};
use crate::map::{SlidingGrid, StateSet, VoxelState};
use crate::path::{
    blocked_mask, choose_direction, find_intersection, jps_search_with, path_sphere_exit, repair_previous, shortcut,
    DirectionParams, GridPath, Snap,
};
use crate::solver::DEFAULT_NODE_BUDGET;
use crate::traj::{line_search_solve, FinalMode, JerkSpline, Limits, State, TrajRequest};

/// Which space the long trajectory may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSpace {
    /// Free and unknown space, with a separate stopping trajectory.
    FreeAndUnknown,
    /// Known-free space only; the trajectory itself stops in free space.
    FreeOnly,
}

/// How the branching point R is chosen on the long trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RRule {
    /// Last sample before H whose per-axis stopping distance fits.
    StoppingDistance,
    /// Fixed time offset `beta · Δt_{k-1}` after A, capped at H.
    TimeOffset { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub alpha: f64,
    /// Direction-change threshold in radians.
    pub alpha0: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// Number of lattice steps spanning `[f - gamma, f + gamma']`.
    pub line_search_steps: usize,
    pub r: f64,
    pub l_max: f64,
    pub p_max: usize,
    pub n_whole: usize,
    pub n_safe: usize,
    pub limits: Limits,
    /// Intersection threshold; `None` means half a voxel.
    pub eps: Option<f64>,
    /// Goal projection margin; `None` means two voxels.
    pub goal_margin: Option<f64>,
    pub local_box: f64,
    pub node_budget: usize,
    pub r_rule: RRule,
    /// Commit only to the stopping trajectory branch (disable to commit the
    /// whole trajectory directly).
    pub safe_trajectory: bool,
    pub plan_space: PlanSpace,
    pub path_shortcut: bool,
    /// Extra branching points tried, evenly spaced back toward A, when no
    /// stopping trajectory exists from R.
    pub safe_backoff: usize,
    /// Replanning time assumed before the first cycle.
    pub initial_dt: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.25,
            alpha0: 15f64.to_radians(),
            gamma: 0.2,
            gamma_prime: 1.0,
            line_search_steps: 6,
            r: 6.0,
            l_max: 3.0,
            p_max: 2,
            n_whole: 10,
            n_safe: 7,
            limits: Limits::uniform(5.0, 5.0, 8.0),
            eps: None,
            goal_margin: None,
            local_box: DEFAULT_LOCAL_BOX,
            node_budget: DEFAULT_NODE_BUDGET,
            r_rule: RRule::StoppingDistance,
            safe_trajectory: true,
            plan_space: PlanSpace::FreeAndUnknown,
            path_shortcut: true,
            safe_backoff: 2,
            initial_dt: 0.1,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let checks = [
            (self.alpha >= 1.0, "alpha must be >= 1"),
            (self.alpha0 >= 0.0, "alpha0 must be >= 0"),
            (self.gamma >= 0.0 && self.gamma_prime >= 0.0, "gamma, gamma_prime must be >= 0"),
            (self.r > 0.0, "r must be > 0"),
            (self.l_max > 0.0, "l_max must be > 0"),
            (self.p_max >= 1, "p_max must be >= 1"),
            (self.n_whole >= 1 && self.n_safe >= 1, "interval counts must be >= 1"),
            (self.limits.is_valid(), "limits must be positive"),
            (self.eps.is_none_or(|e| e > 0.0), "eps must be > 0"),
            (self.goal_margin.is_none_or(|m| m >= 0.0), "goal_margin must be >= 0"),
            (self.local_box > 0.0, "local_box must be > 0"),
            (self.initial_dt > 0.0, "initial_dt must be > 0"),
        ];
        match checks.iter().find(|c| !c.0) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }

    fn eps_for(&self, grid: &SlidingGrid) -> f64 {
        self.eps.unwrap_or(grid.resolution() / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Previous,
    WholePrefix,
    Safe,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub spline: JerkSpline,
    pub t_start: f64,
    pub t_end: f64,
    pub kind: PieceKind,
}

/// The trajectory the vehicle follows: contiguous pieces ending at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommittedTrajectory {
    pub pieces: Vec<Piece>,
    pub whole_prefix: (f64, f64),
    pub safe: (f64, f64),
    pub k: usize,
}

impl CommittedTrajectory {
    /// Hovering at `x` from `t0` on.
    pub fn at_rest(x: Vec3, t0: f64) -> Self {
        let spline = JerkSpline::hold(x, t0, 1e-3);
        let t_end = spline.t_end();
        Self { pieces: vec![Piece { spline, t_start: t0, t_end, kind: PieceKind::Hold }], whole_prefix: (t0, t0), safe: (t0, t_end), k: 0 }
    }

    pub fn t_start(&self) -> f64 {
        self.pieces[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.pieces.last().expect("non-empty").t_end
    }

    /// State at `t`; clamps to the ends outside the covered span.
    pub fn sample(&self, t: f64) -> State {
        let p = self
            .pieces
            .iter()
            .find(|p| t < p.t_end)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty"));
        p.spline.at(t.clamp(p.t_start, p.t_end))
    }

    pub fn terminal(&self) -> State {
        let p = self.pieces.last().expect("non-empty");
        p.spline.at(p.t_end)
    }

    /// Pieces restricted to `[from, to]`, padded with a hold at the terminal
    /// state if the trajectory ends earlier.
    fn clipped(&self, from: f64, to: f64) -> Vec<Piece> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let a = p.t_start.max(from);
            let b = p.t_end.min(to);
            if b > a {
                out.push(Piece { spline: p.spline.clone(), t_start: a, t_end: b, kind: PieceKind::Previous });
            }
        }
        let end = self.t_end();
        if to > end {
            let start = from.max(end);
            let x = self.terminal().x;
            out.push(Piece { spline: JerkSpline::hold(x, start, to - start), t_start: start, t_end: to, kind: PieceKind::Hold });
        }
        out
    }

    /// Dense samples `(t, state)` over the whole covered span.
    pub fn samples(&self, step: f64) -> Vec<(f64, State)> {
        let mut out = Vec::new();
        for p in &self.pieces {
            out.extend(p.spline.samples(p.t_start, p.t_end, step));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeepReason {
    /// An optimisation (or the global search feeding it) failed.
    OptInfeasible,
    /// The executed prefix A→R touches unknown space.
    PrefixHitsUnknown,
    /// The cycle took longer than its time budget.
    Overtime,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplanResult {
    NewCommit(CommittedTrajectory),
    KeepPrevious(KeepReason),
}

/// Wall-clock durations of the cycle stages in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub jps_ms: f64,
    pub decomp_whole_ms: f64,
    pub whole_ms: f64,
    pub decomp_safe_ms: f64,
    pub safe_ms: f64,
    pub total_ms: f64,
}

/// Landmarks of one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyPoints {
    pub a: Option<Vec3>,
    pub g: Option<Vec3>,
    pub e: Option<Vec3>,
    pub h: Option<Vec3>,
    pub r: Option<Vec3>,
    pub f: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanOutcome {
    pub k: usize,
    pub result: ReplanResult,
    pub timings: StageTimings,
    pub f_whole: Option<f64>,
    pub f_safe: Option<f64>,
    pub jps_k: Option<GridPath>,
    pub points: KeyPoints,
    pub corridor_whole: Option<Corridor>,
    pub corridor_safe: Option<Corridor>,
    pub whole: Option<JerkSpline>,
    pub safe: Option<JerkSpline>,
    pub nodes_whole: usize,
    pub nodes_safe: usize,
    /// Time charged against the budget (simulated or measured), in seconds.
    pub elapsed: f64,
}

impl ReplanOutcome {
    pub fn committed(&self) -> Option<&CommittedTrajectory> {
        match &self.result {
            ReplanResult::NewCommit(c) => Some(c),
            ReplanResult::KeepPrevious(_) => None,
        }
    }

    pub fn keep_reason(&self) -> Option<KeepReason> {
        match self.result {
            ReplanResult::KeepPrevious(r) => Some(r),
            ReplanResult::NewCommit(_) => None,
        }
    }
}

/// How the elapsed time of a cycle is accounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Latency {
    /// Every cycle is charged this many seconds.
    Fixed { seconds: f64 },
    /// Measured wall-clock time.
    WallClock,
}

/// Memory carried between cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    pub k: usize,
    pub f_whole: f64,
    pub f_safe: f64,
    /// Duration of the previous cycle.
    pub last_dt: f64,
    pub prev_jps: Option<GridPath>,
    pub warm_whole: Option<Vec<usize>>,
    pub warm_safe: Option<Vec<usize>>,
}

impl PlannerState {
    pub fn new(cfg: &PlannerConfig) -> Self {
        Self { k: 0, f_whole: 1.0, f_safe: 1.0, last_dt: cfg.initial_dt, prev_jps: None, warm_whole: None, warm_safe: None }
    }

    /// Offset of point A for the next cycle.
    pub fn delta_t(&self, cfg: &PlannerConfig) -> f64 {
        cfg.alpha * self.last_dt
    }
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: web_time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: web_time::Instant::now(),
        }
    }

    fn ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Point A: the previous commitment sampled `delta_t` ahead of `now`.
pub fn select_a(prev: &CommittedTrajectory, now: f64, delta_t: f64) -> (State, f64) {
    let t = now + delta_t.max(0.0);
    let s = if t >= prev.t_end() { State::at_rest(prev.terminal().x) } else { prev.sample(t) };
    (s, t)
}

/// Keeps the goal if it lies in the map, otherwise moves it along the ray
/// from `a` to where the ray leaves the map, `margin` short of the boundary.
pub fn project_goal(g_term: Vec3, a: Vec3, grid: &SlidingGrid, margin: f64) -> Vec3 {
    let ext = grid.extent();
    if ext.contains(&g_term) {
        return g_term;
    }
    let d = g_term - a;
    let len = d.norm();
    if len < 1e-12 {
        return a;
    }
    let u = d / len;
    match ext.ray_interval(&a, &u) {
        Some((_, t_exit)) if t_exit > 0.0 => a + u * (t_exit - margin).max(0.0),
        _ => a,
    }
}

fn stopping_ok(s: &State, h: &Vec3, a_max: &Vec3) -> bool {
    (0..2).all(|j| {
        let delta = h[j] - s.x[j];
        let v = s.v[j];
        // no approach toward H on this axis: nothing to stop for
        if v * delta < 0.0 || v == 0.0 {
            return true;
        }
        v * v / (2.0 * a_max[j].abs()) < delta.abs()
    })
}

/// Branching point R on `whole`, scanning from its start toward H (given
/// with its time).
pub fn select_r(whole: &JerkSpline, h: Option<(Vec3, f64)>, a_max: &Vec3, sample_step: f64) -> (State, f64) {
    let Some((hp, th)) = h else {
        return (whole.end(), whole.t_end());
    };
    let mut best = (whole.start(), whole.t0);
    let th = th.min(whole.t_end());
    // H itself is never a valid branching point
    for (t, s) in whole.samples(whole.t0, th, sample_step).into_iter().filter(|(t, _)| *t < th - 1e-9) {
        if stopping_ok(&s, &hp, a_max) {
            best = (s, t);
        }
    }
    best
}

/// Clips `path` (starting inside the sphere) at its first exit of the sphere.
fn clip_to_sphere(path: &GridPath, center: Vec3, radius: f64) -> GridPath {
    match path_sphere_exit(path, center, radius) {
        Some(c) => path.prefix_to(arc_of(path, &c)),
        None => path.clone(),
    }
}

/// Arc length of the first point of `path` within 1e-7 of `p`.
fn arc_of(path: &GridPath, p: &Vec3) -> f64 {
    let mut acc = 0.0;
    for (a, b) in path.segments() {
        let (q, t) = closest_on_segment(&a, &b, p);
        let l = (b - a).norm();
        if (q - p).norm() < 1e-7 {
            return acc + t * l;
        }
        acc += l;
    }
    path.project(p).0
}

/// First point where the sampled trajectory meets the inflated `states`,
/// with its time.
fn trajectory_intersection(
    spline: &JerkSpline,
    t_from: f64,
    grid: &SlidingGrid,
    states: StateSet,
    eps: f64,
    v_bound: f64,
) -> Option<(Vec3, f64)> {
    let step = (grid.resolution() / 2.0 / v_bound.max(1e-6)).min(spline.dt / 4.0).max(1e-4);
    let samples = spline.samples(t_from, spline.t_end(), step);
    let path = GridPath::new(samples.iter().map(|s| s.1.x));
    let hit = find_intersection(&path, grid, states, eps)?;
    for w in samples.windows(2) {
        let (q, u) = closest_on_segment(&w[0].1.x, &w[1].1.x, &hit);
        if (q - hit).norm() < 1e-7 {
            return Some((hit, w[0].0 + u * (w[1].0 - w[0].0)));
        }
    }
    Some((hit, samples[0].0))
}

/// First dense sample (quarter-voxel spacing) whose inflated state is not
/// known-free.
fn first_unsafe(spline: &JerkSpline, from: f64, to: f64, grid: &SlidingGrid, v_bound: f64) -> Option<VoxelState> {
    let step = (grid.resolution() / 4.0 / v_bound.max(1e-6)).min(spline.dt / 4.0).max(1e-4);
    spline.samples(from, to, step).into_iter().map(|(_, s)| grid.classify(&s.x, true)).find(|c| *c != VoxelState::FreeKnown)
}

fn speed_bound(limits: &Limits, whole: &JerkSpline) -> f64 {
    let knots = (0..=whole.len()).map(|n| whole.knot(n).v.norm()).fold(0.0, f64::max);
    // knot limits do not bound the speed between knots; be generous
    (limits.v_max.norm()).max(knots) * 1.5
}

/// Executes one planning cycle against a frozen map snapshot.
pub fn replan_once(
    state: &mut PlannerState,
    grid: &SlidingGrid,
    prev: &CommittedTrajectory,
    g_term: Vec3,
    now: f64,
    cfg: &PlannerConfig,
    time_budget: f64,
    latency: Latency,
) -> ReplanOutcome {
    let clock = Stopwatch::start();
    state.k += 1;
    let mut out = ReplanOutcome {
        k: state.k,
        result: ReplanResult::KeepPrevious(KeepReason::OptInfeasible),
        timings: StageTimings::default(),
        f_whole: None,
        f_safe: None,
        jps_k: None,
        points: KeyPoints::default(),
        corridor_whole: None,
        corridor_safe: None,
        whole: None,
        safe: None,
        nodes_whole: 0,
        nodes_safe: 0,
        elapsed: 0.0,
    };
    let verdict = plan_cycle(state, grid, prev, g_term, now, cfg, &mut out);
    out.timings.total_ms = clock.ms();
    out.elapsed = match latency {
        Latency::Fixed { seconds } => seconds,
        Latency::WallClock => out.timings.total_ms / 1e3,
    };
    state.last_dt = out.elapsed;
    out.result = match verdict {
        Err(reason) => ReplanResult::KeepPrevious(reason),
        Ok(_) if out.elapsed > time_budget => ReplanResult::KeepPrevious(KeepReason::Overtime),
        Ok(c) => {
            if let Some(f) = out.f_whole {
                state.f_whole = f;
            }
            if let Some(f) = out.f_safe {
                state.f_safe = f;
            }
            ReplanResult::NewCommit(c)
        }
    };
    out
}

#[allow(clippy::too_many_lines)]
fn plan_cycle(
    state: &mut PlannerState,
    grid: &SlidingGrid,
    prev: &CommittedTrajectory,
    g_term: Vec3,
    now: f64,
    cfg: &PlannerConfig,
    out: &mut ReplanOutcome,
) -> Result<CommittedTrajectory, KeepReason> {
    let eps = cfg.eps_for(grid);
    let res = grid.resolution();
    let (a, t_a) = select_a(prev, now, state.delta_t(cfg));
    out.points.a = Some(a.x);
    let g = project_goal(g_term, a.x, grid, cfg.goal_margin.unwrap_or(2.0 * res));
    out.points.g = Some(g);

    // global direction
    let sw = Stopwatch::start();
    let blocked = blocked_mask(grid);
    let snap = Snap { start_reach: 2, goal_reach: Some(3) };
    let jps_a = jps_search_with(grid, &blocked, a.x, g, snap).map_err(|_| KeepReason::OptInfeasible)?;
    let jps_a = if cfg.path_shortcut { shortcut(&jps_a, grid, StateSet::OCCUPIED) } else { jps_a };
    let mut jps_k = jps_a.clone();
    if let Some(prev_jps) = &state.prev_jps {
        let c = path_sphere_exit(&jps_a, a.x, cfg.r).unwrap_or(jps_a.end());
        let d = path_sphere_exit(prev_jps, a.x, cfg.r).unwrap_or(prev_jps.end());
        if crate::geom::angle_between(&(c - a.x), &(d - a.x)) > cfg.alpha0 {
            if let Ok(jps_b) = repair_previous(prev_jps, grid, &blocked, a.x, g) {
                let params = DirectionParams { radius: cfg.r, alpha0: cfg.alpha0, limits: cfg.limits, intervals: cfg.n_whole };
                jps_k = choose_direction(&jps_a, &jps_b, a.x, &params).chosen;
            }
        }
    }
    state.prev_jps = Some(jps_k.clone());
    out.jps_k = Some(jps_k.clone());
    let jps_in = split_and_truncate(&clip_to_sphere(&jps_k, a.x, cfg.r), cfg.l_max, cfg.p_max);
    out.timings.jps_ms = sw.ms();

    if cfg.plan_space == PlanSpace::FreeOnly {
        return plan_free_only(state, grid, &a, t_a, &jps_in, now, prev, cfg, eps, out);
    }

    // long trajectory through free and unknown space
    let e = jps_in.end();
    out.points.e = Some(e);
    let sw = Stopwatch::start();
    let poly_whole = decompose(grid, &jps_in, CorridorKind::Whole, cfg.local_box);
    out.timings.decomp_whole_ms = sw.ms();
    let sw = Stopwatch::start();
    let req = TrajRequest {
        init: a,
        mode: FinalMode::FixedStop(e),
        target: e,
        corridor: &poly_whole,
        intervals: cfg.n_whole,
        limits: cfg.limits,
        t0: t_a,
        node_budget: cfg.node_budget,
        warm: state.warm_whole.clone(),
    };
    let whole = line_search_solve(&req, state.f_whole, cfg.gamma, cfg.gamma_prime, cfg.line_search_steps);
    out.timings.whole_ms = sw.ms();
    out.corridor_whole = Some(poly_whole.clone());
    let whole = whole.map_err(|_| KeepReason::OptInfeasible)?;
    out.nodes_whole = whole.nodes;
    out.f_whole = Some(whole.factor);
    state.warm_whole = Some(whole.solution.assignment.clone());
    let whole_spline = whole.spline;
    out.whole = Some(whole_spline.clone());
    let v_bound = speed_bound(&cfg.limits, &whole_spline);

    if !cfg.safe_trajectory {
        // commit straight to the long trajectory
        let t_end = whole_spline.t_end();
        out.points.r = Some(e);
        let mut pieces = prev.clipped(now, t_a);
        pieces.push(Piece { spline: whole_spline, t_start: t_a, t_end, kind: PieceKind::WholePrefix });
        return Ok(CommittedTrajectory { pieces, whole_prefix: (t_a, t_end), safe: (t_end, t_end), k: state.k });
    }

    let h = trajectory_intersection(&whole_spline, t_a, grid, StateSet::UNKNOWN, eps, v_bound);
    out.points.h = h.map(|x| x.0);
    let (r0, t_r0) = match cfg.r_rule {
        RRule::StoppingDistance => select_r(&whole_spline, h, &cfg.limits.a_max, whole_spline.dt / 10.0),
        RRule::TimeOffset { beta } => {
            let cap = h.map_or(whole_spline.t_end(), |x| x.1);
            let t = (t_a + beta * state.last_dt).min(cap);
            (whole_spline.at(t), t)
        }
    };

    // the prefix actually flown must stay in known-free space
    if t_r0 > t_a && first_unsafe(&whole_spline, t_a, t_r0, grid, v_bound).is_some() {
        out.points.r = Some(r0.x);
        return Err(KeepReason::PrefixHitsUnknown);
    }

    // stopping trajectory inside known-free space; if none exists from R,
    // back R off toward A
    let mut candidates = vec![(r0, t_r0)];
    for i in 1..=cfg.safe_backoff {
        let t = t_r0 - (t_r0 - t_a) * i as f64 / cfg.safe_backoff as f64;
        if t < candidates.last().expect("non-empty").1 - 1e-9 {
            candidates.push((whole_spline.at(t), t));
        }
    }
    let mut found = None;
    for (r, t_r) in candidates {
        out.points.r = Some(r.x);
        let seed = free_seed(grid, &jps_in, &r.x, eps, cfg);
        let sw = Stopwatch::start();
        let poly_safe = decompose(grid, &seed, CorridorKind::Safe, cfg.local_box);
        out.timings.decomp_safe_ms += sw.ms();
        let sw = Stopwatch::start();
        let req = TrajRequest {
            init: r,
            mode: FinalMode::FreeStop,
            target: seed.end(),
            corridor: &poly_safe,
            intervals: cfg.n_safe,
            limits: cfg.limits,
            t0: t_r,
            node_budget: cfg.node_budget,
            warm: state.warm_safe.clone(),
        };
        let safe = line_search_solve(&req, state.f_safe, cfg.gamma, cfg.gamma_prime, cfg.line_search_steps);
        out.timings.safe_ms += sw.ms();
        out.corridor_safe = Some(poly_safe);
        if let Ok(safe) = safe {
            found = Some((safe, t_r));
            break;
        }
    }
    let (safe, t_r) = found.ok_or(KeepReason::OptInfeasible)?;
    out.nodes_safe = safe.nodes;
    out.f_safe = Some(safe.factor);
    state.warm_safe = Some(safe.solution.assignment.clone());
    let safe_spline = safe.spline;
    out.safe = Some(safe_spline.clone());
    out.points.f = Some(safe_spline.end().x);
    if first_unsafe(&safe_spline, safe_spline.t0, safe_spline.t_end(), grid, speed_bound(&cfg.limits, &safe_spline)).is_some() {
        return Err(KeepReason::OptInfeasible);
    }

    let t_f = safe_spline.t_end();
    let mut pieces = prev.clipped(now, t_a);
    if t_r > t_a {
        pieces.push(Piece { spline: whole_spline, t_start: t_a, t_end: t_r, kind: PieceKind::WholePrefix });
    }
    pieces.push(Piece { spline: safe_spline, t_start: t_r, t_end: t_f, kind: PieceKind::Safe });
    Ok(CommittedTrajectory { pieces, whole_prefix: (t_a, t_r), safe: (t_r, t_f), k: state.k })
}

/// Seed path for the stopping trajectory: from R along the part of the
/// global path after R's projection, up to where it leaves known-free space.
fn free_seed(grid: &SlidingGrid, jps_in: &GridPath, r: &Vec3, eps: f64, cfg: &PlannerConfig) -> GridPath {
    let (s, _) = jps_in.project(r);
    let rest = jps_in.suffix_from(s);
    let joined = GridPath::new(std::iter::once(*r).chain(rest.vertices));
    // R may legitimately sit closer than `eps` to the inflated set (the Whole
    // corridor only keeps it outside); march finely enough not to cut at R
    let eps = match grid.clearance(r, StateSet::BLOCKED) {
        Some(c) if c > 1e-6 => eps.min(c / 2.0),
        _ => eps,
    };
    let known = match find_intersection(&joined, grid, StateSet::BLOCKED, eps) {
        Some(p) => joined.prefix_to(arc_of(&joined, &p)),
        None => joined,
    };
    split_and_truncate(&known, cfg.l_max, cfg.p_max)
}

/// Ablation: a single stopping trajectory from A restricted to known-free
/// space, committed in full.
#[allow(clippy::too_many_arguments)]
fn plan_free_only(
    state: &mut PlannerState,
    grid: &SlidingGrid,
    a: &State,
    t_a: f64,
    jps_in: &GridPath,
    now: f64,
    prev: &CommittedTrajectory,
    cfg: &PlannerConfig,
    eps: f64,
    out: &mut ReplanOutcome,
) -> Result<CommittedTrajectory, KeepReason> {
    let seed = free_seed(grid, jps_in, &a.x, eps, cfg);
    out.points.e = Some(seed.end());
    let sw = Stopwatch::start();
    let poly = decompose(grid, &seed, CorridorKind::Safe, cfg.local_box);
    out.timings.decomp_whole_ms = sw.ms();
    out.corridor_whole = Some(poly.clone());
    let sw = Stopwatch::start();
    let req = TrajRequest {
        init: *a,
        mode: FinalMode::FreeStop,
        target: seed.end(),
        corridor: &poly,
        intervals: cfg.n_whole,
        limits: cfg.limits,
        t0: t_a,
        node_budget: cfg.node_budget,
        warm: state.warm_whole.clone(),
    };
    let res = line_search_solve(&req, state.f_whole, cfg.gamma, cfg.gamma_prime, cfg.line_search_steps);
    out.timings.whole_ms = sw.ms();
    let res = res.map_err(|_| KeepReason::OptInfeasible)?;
    out.nodes_whole = res.nodes;
    out.f_whole = Some(res.factor);
    state.warm_whole = Some(res.solution.assignment.clone());
    let spline = res.spline;
    out.whole = Some(spline.clone());
    let t_end = spline.t_end();
    out.points.r = Some(spline.end().x);
    out.points.f = Some(spline.end().x);
    if first_unsafe(&spline, t_a, t_end, grid, speed_bound(&cfg.limits, &spline)).is_some() {
        return Err(KeepReason::PrefixHitsUnknown);
    }
    let mut pieces = prev.clipped(now, t_a);
    pieces.push(Piece { spline, t_start: t_a, t_end, kind: PieceKind::WholePrefix });
    Ok(CommittedTrajectory { pieces, whole_prefix: (t_a, t_end), safe: (t_end, t_end), k: state.k })
}
