//! Browser bindings. Every entry point takes plain values and returns a JSON
//! string, so the same functions are exercised natively by the tests.
//!
//! Grid maps are text: one row per line, top row first; `#` occupied,
//! `.` free, `?` unknown. Coordinates are in cells (x right, y up).

use dualplan_core::decomp::{decompose, Corridor, CorridorKind};
use dualplan_core::geom::Vec3;
use dualplan_core::map::{SlidingGrid, StateSet, VoxelState};
use dualplan_core::path::{jps_search, shortcut, GridPath};
use dualplan_core::sim::{Obstacle, Scenario};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const RES: f64 = 0.25;
const LAYERS: usize = 5;
const INFLATION: f64 = 0.2;
const LOCAL_BOX: f64 = 2.0;

struct TextMap {
    grid: SlidingGrid,
    width: usize,
    height: usize,
}

impl TextMap {
    fn parse(text: &str) -> Result<Self, String> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if width == 0 {
            return Err("empty map".into());
        }
        if let Some(i) = rows.iter().position(|r| r.chars().count() != width) {
            return Err(format!("row {} has {} cells, expected {width}", i + 1, rows[i].chars().count()));
        }
        let dims = [width, height, LAYERS];
        let center = Vec3::new(width as f64, height as f64, LAYERS as f64) * (RES / 2.0);
        let mut grid = SlidingGrid::new(center, RES, dims, INFLATION).map_err(|e| e.to_string())?;
        for (r, row) in rows.iter().enumerate() {
            let y = height - 1 - r;
            for (x, ch) in row.chars().enumerate() {
                let s = match ch {
                    '#' => VoxelState::OccupiedKnown,
                    '.' => VoxelState::FreeKnown,
                    '?' => VoxelState::Unknown,
                    other => return Err(format!("row {}, column {}: unexpected `{other}`", r + 1, x + 1)),
                };
                for z in 0..LAYERS {
                    grid.set_state([x, y, z], s);
                }
            }
        }
        Ok(Self { grid, width, height })
    }

    fn plane_z(&self) -> f64 {
        self.grid.voxel_center([0, 0, LAYERS / 2]).z
    }

    fn to_world(&self, x: f64, y: f64) -> Vec3 {
        Vec3::new(x * RES, y * RES, self.plane_z())
    }
}

fn cells(p: &Vec3) -> [f64; 2] {
    [p.x / RES, p.y / RES]
}

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn global_path(m: &TextMap, start: [f64; 2], goal: [f64; 2], short: bool) -> Result<GridPath, String> {
    let (s, g) = (m.to_world(start[0], start[1]), m.to_world(goal[0], goal[1]));
    let p = jps_search(&m.grid, s, g).map_err(|e| e.to_string())?;
    Ok(if short { shortcut(&p, &m.grid, StateSet::OCCUPIED) } else { p })
}

/// Jump point search through free and unknown cells (occupied cells are
/// inflated by the vehicle size); optionally shortened by line of sight.
#[wasm_bindgen]
pub fn plan_path(map: &str, sx: f64, sy: f64, gx: f64, gy: f64, line_of_sight: bool) -> String {
    let m = match TextMap::parse(map) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    match global_path(&m, [sx, sy], [gx, gy], line_of_sight) {
        Ok(p) => json!({
            "width": m.width,
            "height": m.height,
            "path": p.vertices.iter().map(cells).collect::<Vec<_>>(),
            "length_cells": p.length() / RES,
        })
        .to_string(),
        Err(e) => error(e),
    }
}

#[derive(Serialize)]
struct Slice {
    /// Polygon vertices (cells) of each polyhedron cut by the map plane.
    polygons: Vec<Vec<[f64; 2]>>,
}

/// Cuts each polyhedron with the horizontal plane `z` (half-plane clipping of its local box).
fn slice(c: &Corridor, z: f64) -> Slice {
    let polygons = c
        .polys
        .iter()
        .map(|p| {
            let b = &p.local_box;
            let mut poly = vec![[b.min.x, b.min.y], [b.max.x, b.min.y], [b.max.x, b.max.y], [b.min.x, b.max.y]];
            for (n, off) in p.normals.iter().zip(&p.offsets) {
                poly = clip(&poly, [n.x, n.y], off - n.z * z);
            }
            poly.iter().map(|q| [q[0] / RES, q[1] / RES]).collect()
        })
        .collect();
    Slice { polygons }
}

/// Keeps the part of `poly` with `n·p <= d`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], d: f64) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - d;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (i, a) in poly.iter().enumerate() {
        let b = &poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(*a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Global path plus the two corridors around it: `whole` may cross unknown
/// cells, `safe` stays in known-free space.
#[wasm_bindgen]
pub fn corridors(map: &str, sx: f64, sy: f64, gx: f64, gy: f64) -> String {
    let m = match TextMap::parse(map) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    let p = match global_path(&m, [sx, sy], [gx, gy], true) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let z = m.plane_z();
    let whole = decompose(&m.grid, &p, CorridorKind::Whole, LOCAL_BOX);
    let safe = decompose(&m.grid, &p, CorridorKind::Safe, LOCAL_BOX);
    json!({
        "path": p.vertices.iter().map(cells).collect::<Vec<_>>(),
        "whole": slice(&whole, z),
        "safe": slice(&safe, z),
    })
    .to_string()
}

const FOREST: &str = include_str!("../../../scenarios/forest.toml");
const CORNER: &str = include_str!("../../../scenarios/corner_hidden.toml");

/// Flies one simulated episode (`world` is `forest` or `corner`) and returns
/// the obstacles, the executed path (metres, top view) and the metrics.
#[wasm_bindgen]
pub fn fly(world: &str, seed: u32, v_max: f64, safe_trajectory: bool) -> String {
    let text = match world {
        "forest" => FOREST,
        "corner" => CORNER,
        other => return error(format!("unknown world `{other}`")),
    };
    let mut s = match Scenario::parse(world, text) {
        Ok(s) => s.seeded(seed.into()),
        Err(e) => return error(e),
    };
    if !(v_max > 0.0) {
        return error("v_max must be positive");
    }
    s.planner.limits.v_max = Vec3::repeat(v_max);
    s.planner.safe_trajectory = safe_trajectory;
    s.sim.shadow = None;
    s.sim.max_time = s.sim.max_time.min(30.0);
    let w = s.build_world();
    let r = s.run();
    let obstacles: Vec<_> = w
        .obstacles
        .iter()
        .map(|o| match o {
            Obstacle::Box { min, max } => json!({ "box": [min.x, min.y, max.x, max.y] }),
            Obstacle::Cylinder { x, y, radius, .. } => json!({ "circle": [x, y, radius] }),
        })
        .collect();
    let track: Vec<[f64; 3]> = r.trajectory.iter().step_by(2).map(|p| [p.state.x.x, p.state.x.y, p.state.v.norm()]).collect();
    json!({
        "start": [w.start.x, w.start.y],
        "goal": [w.goal.x, w.goal.y],
        "obstacles": obstacles,
        "track": track,
        "metrics": {
            "reached_goal": r.metrics.reached_goal,
            "flight_time": r.metrics.flight_time,
            "max_speed": r.metrics.max_speed,
            "collisions": r.metrics.collisions,
            "min_clearance": r.metrics.min_true_clearance,
        }
    })
    .to_string()
}
