//! Lockstep episode runner with a perfectly tracking vehicle.

use serde::{Deserialize, Serialize};

use super::sensor::{render_scan, SensorModel};
use super::world::World;
use crate::decomp::{monte_carlo_volume, Corridor, VolumeEstimate};
use crate::geom::Vec3;
use crate::map::{SlidingGrid, StateSet, VoxelState};
use crate::path::find_intersection;
use crate::replan::{
    replan_once, CommittedTrajectory, KeepReason, KeyPoints, Latency, PlannerConfig, PlannerState, ReplanOutcome,
    StageTimings,
};
use crate::traj::{JerkSpline, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub resolution: f64,
    /// Extent in metres along x, y, z.
    pub size: [f64; 3],
    pub vehicle_radius: f64,
    /// The map follows the vehicle in x and y; its centre height is fixed.
    pub center_z: f64,
    /// Radius of the region known to be free at take-off.
    pub initial_free_radius: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { resolution: 0.25, size: [20.0, 20.0, 2.0], vehicle_radius: 0.2, center_z: 1.25, initial_free_radius: 1.0 }
    }
}

impl MapConfig {
    /// Vehicle radius plus half a voxel diagonal.
    pub fn inflation_radius(&self) -> f64 {
        self.vehicle_radius + self.resolution * 3f64.sqrt() / 2.0
    }

    pub fn dims(&self) -> [usize; 3] {
        self.size.map(|s| ((s / self.resolution).round() as usize).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyMode {
    Fixed,
    Wallclock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub sim_step: f64,
    pub planner_latency: f64,
    pub latency_mode: LatencyMode,
    pub max_time: f64,
    pub map: MapConfig,
    /// Keep per-cycle geometry (global path, corridors, splines) in the records.
    pub record: bool,
    /// Monte-Carlo samples per corridor volume estimate (0 disables).
    pub volume_samples: usize,
    /// A second planner run on every cycle's inputs without being executed.
    pub shadow: Option<PlannerConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim_step: 0.05,
            planner_latency: 0.1,
            latency_mode: LatencyMode::Fixed,
            max_time: 60.0,
            map: MapConfig::default(),
            record: false,
            volume_samples: 0,
            shadow: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sim_step > 0.0) || !(self.planner_latency > 0.0) || !(self.max_time > 0.0) {
            return Err("sim_step, planner_latency and max_time must be positive".into());
        }
        if !(self.map.resolution > 0.0) || self.map.size.iter().any(|s| !(*s > 0.0)) || !(self.map.vehicle_radius >= 0.0) {
            return Err("map resolution and size must be positive".into());
        }
        if let Some(s) = &self.shadow {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub reached_goal: bool,
    pub flight_time: f64,
    pub distance: f64,
    pub max_speed: f64,
    pub min_true_clearance: f64,
    pub collisions: usize,
    pub cycles: usize,
    pub commits: usize,
    pub opt_infeasible: usize,
    pub prefix_hits_unknown: usize,
    pub overtime: usize,
    /// Committed trajectories that came within the vehicle radius of a true
    /// obstacle anywhere along their span (checked at commit time).
    pub unsafe_commits: usize,
    pub cycle_timings: Vec<StageTimings>,
}

/// Compact corridor description for logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRecord {
    pub normals: Vec<Vec3>,
    pub offsets: Vec<f64>,
}

fn polys(c: &Corridor) -> Vec<PolyRecord> {
    c.polys.iter().map(|p| PolyRecord { normals: p.normals.clone(), offsets: p.offsets.clone() }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub k: usize,
    pub t: f64,
    pub committed: bool,
    pub reason: Option<KeepReason>,
    pub f_whole: Option<f64>,
    pub f_safe: Option<f64>,
    pub timings: StageTimings,
    pub nodes_whole: usize,
    pub nodes_safe: usize,
    pub points: KeyPoints,
    pub speed_a: f64,
    /// Highest speed on the executed A→R part of a new commitment.
    pub prefix_speed: Option<f64>,
    pub shadow_prefix_speed: Option<f64>,
    pub volume_whole: Option<VolumeEstimate>,
    pub volume_safe: Option<VolumeEstimate>,
    pub jps: Option<Vec<Vec3>>,
    pub corridor_whole: Option<Vec<PolyRecord>>,
    pub corridor_safe: Option<Vec<PolyRecord>>,
    pub whole: Option<JerkSpline>,
    pub safe: Option<JerkSpline>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSample {
    pub t: f64,
    pub state: State,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub cycles: Vec<CycleRecord>,
    pub trajectory: Vec<TrajSample>,
}

/// Highest sampled speed over the executed prefix of a commitment.
pub fn prefix_speed(c: &CommittedTrajectory) -> f64 {
    let (t0, t1) = c.whole_prefix;
    let n = 200;
    (0..=n).map(|i| c.sample(t0 + (t1 - t0) * i as f64 / n as f64).v.norm()).fold(0.0, f64::max)
}

fn true_clearance(world: &World, p: &Vec3, radius: f64) -> f64 {
    world.distance(p) - radius
}

fn commitment_is_safe(world: &World, c: &CommittedTrajectory, radius: f64, step: f64) -> bool {
    c.samples(step).iter().all(|(_, s)| true_clearance(world, &s.x, radius) >= 0.0)
}

pub fn initial_grid(world: &World, cfg: &MapConfig) -> SlidingGrid {
    let center = Vec3::new(world.start.x, world.start.y, cfg.center_z);
    let mut grid = SlidingGrid::new(center, cfg.resolution, cfg.dims(), cfg.inflation_radius()).expect("valid map config");
    let [nx, ny, nz] = grid.dims();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let c = grid.voxel_center([x, y, z]);
                if (c - world.start).norm() <= cfg.initial_free_radius && world.distance(&c) > 0.0 {
                    grid.set_state([x, y, z], VoxelState::FreeKnown);
                }
            }
        }
    }
    grid
}

/// Runs one episode until the goal is reached, a collision happens, or
/// `max_time` elapses.
pub fn run_episode(world: &World, planner: &PlannerConfig, sensor: &SensorModel, goal: Vec3, sim: &SimConfig) -> EpisodeResult {
    let radius = sim.map.vehicle_radius;
    let mut grid = initial_grid(world, &sim.map);
    let mut committed = CommittedTrajectory::at_rest(world.start, 0.0);
    let mut pstate = PlannerState::new(planner);
    let mut metrics = EpisodeMetrics { min_true_clearance: f64::INFINITY, ..Default::default() };
    let mut cycles = Vec::new();
    let mut trajectory = Vec::new();
    let mut t = 0.0;
    let mut next_replan = 0.0;
    let mut yaw = (goal.y - world.start.y).atan2(goal.x - world.start.x);
    let mut last_jps = None;
    let mut gaze: Option<Vec3> = None;
    let mut x = committed.sample(0.0);
    let eps = sim.map.resolution / 2.0;
    let latency = match sim.latency_mode {
        LatencyMode::Fixed => Latency::Fixed { seconds: sim.planner_latency },
        LatencyMode::Wallclock => Latency::WallClock,
    };
    let sense = |grid: &mut SlidingGrid, p: Vec3, yaw: f64| {
        let scan = render_scan(world, p, yaw, sensor);
        grid.recenter(Vec3::new(p.x, p.y, sim.map.center_z));
        // a pose outside the map band leaves the map unchanged
        let _ = grid.fuse_scan(&scan);
    };
    sense(&mut grid, x.x, yaw);

    loop {
        if t >= next_replan - 1e-9 {
            let budget = pstate.delta_t(planner);
            let shadow_state = sim.shadow.as_ref().map(|_| pstate.clone());
            let out = replan_once(&mut pstate, &grid, &committed, goal, t, planner, budget, latency);
            let shadow_speed = sim.shadow.as_ref().zip(shadow_state).and_then(|(scfg, mut s)| {
                let o = replan_once(&mut s, &grid, &committed, goal, t, scfg, f64::INFINITY, latency);
                o.committed().map(prefix_speed)
            });
            metrics.cycles += 1;
            metrics.cycle_timings.push(out.timings);
            match out.keep_reason() {
                None => metrics.commits += 1,
                Some(KeepReason::OptInfeasible) => metrics.opt_infeasible += 1,
                Some(KeepReason::PrefixHitsUnknown) => metrics.prefix_hits_unknown += 1,
                Some(KeepReason::Overtime) => metrics.overtime += 1,
            }
            let record = cycle_record(&out, t, &grid, sim, shadow_speed);
            if let Some(c) = out.committed() {
                if !commitment_is_safe(world, c, radius, sim.map.resolution / 4.0 / planner.limits.v_max.norm().max(1.0)) {
                    metrics.unsafe_commits += 1;
                }
                committed = c.clone();
            }
            if out.jps_k.is_some() {
                last_jps = out.jps_k.clone();
            }
            // look toward where the global plan enters unknown space; updated
            // once per cycle since the plan only changes here
            gaze = last_jps.as_ref().and_then(|p| find_intersection(p, &grid, StateSet::UNKNOWN, eps));
            cycles.push(record);
            next_replan = t + out.elapsed.max(sim.sim_step);
        }

        t += sim.sim_step;
        let prev_x = x.x;
        x = committed.sample(t);
        metrics.distance += (x.x - prev_x).norm();
        metrics.max_speed = metrics.max_speed.max(x.v.norm());
        let clearance = true_clearance(world, &x.x, radius);
        metrics.min_true_clearance = metrics.min_true_clearance.min(clearance);

        let look = match gaze {
            Some(m) if (m - x.x).xy().norm() > 0.5 => Some(m - x.x),
            _ if x.v.xy().norm() > 0.1 => Some(x.v),
            _ => None,
        };
        if let Some(d) = look {
            yaw = d.y.atan2(d.x);
        }
        trajectory.push(TrajSample { t, state: x, yaw });
        if clearance < 0.0 {
            metrics.collisions = 1;
            break;
        }
        if (x.x - goal).norm() < 2.0 * sim.map.resolution && x.v.norm() < 0.1 {
            metrics.reached_goal = true;
            break;
        }
        if t >= sim.max_time {
            break;
        }
        sense(&mut grid, x.x, yaw);
    }
    metrics.flight_time = t;
    EpisodeResult { metrics, cycles, trajectory }
}

fn cycle_record(out: &ReplanOutcome, t: f64, grid: &SlidingGrid, sim: &SimConfig, shadow_speed: Option<f64>) -> CycleRecord {
    let volume = |c: &Option<Corridor>| {
        (sim.volume_samples > 0).then_some(()).and(c.as_ref()).map(|c| monte_carlo_volume(c, grid, sim.volume_samples, out.k as u64))
    };
    let detail = sim.record;
    CycleRecord {
        k: out.k,
        t,
        committed: out.committed().is_some(),
        reason: out.keep_reason(),
        f_whole: out.f_whole,
        f_safe: out.f_safe,
        timings: out.timings,
        nodes_whole: out.nodes_whole,
        nodes_safe: out.nodes_safe,
        points: out.points,
        speed_a: out.whole.as_ref().map_or(0.0, |w| w.start().v.norm()),
        prefix_speed: out.committed().map(prefix_speed),
        shadow_prefix_speed: shadow_speed,
        volume_whole: volume(&out.corridor_whole),
        volume_safe: volume(&out.corridor_safe),
        jps: detail.then(|| out.jps_k.as_ref().map(|p| p.vertices.clone())).flatten(),
        corridor_whole: detail.then(|| out.corridor_whole.as_ref().map(polys)).flatten(),
        corridor_safe: detail.then(|| out.corridor_safe.as_ref().map(polys)).flatten(),
        whole: detail.then(|| out.whole.clone()).flatten(),
        safe: detail.then(|| out.safe.clone()).flatten(),
    }
}
