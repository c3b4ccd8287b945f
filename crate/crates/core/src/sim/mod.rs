//! Deterministic simulation: ground-truth worlds, a synthetic depth sensor and
//! an episode loop in which the vehicle follows the committed trajectory exactly.

mod episode;
mod experiments;
mod scenario;
mod sensor;
mod world;

pub use episode::{
    initial_grid, prefix_speed, run_episode, CycleRecord, EpisodeMetrics, EpisodeResult, LatencyMode, MapConfig,
    PolyRecord, SimConfig, TrajSample,
};
pub use experiments::{corner_turn_cycle, corner_turn_speeds, miqp_times_ms, percentile, VolumeSummary};
pub use scenario::{Scenario, ScenarioError};
pub use sensor::{render_scan, SensorModel};
pub use world::{Generator, Obstacle, World, ALTITUDE};
