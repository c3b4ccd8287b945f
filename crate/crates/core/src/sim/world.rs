//! Ground-truth worlds made of boxes and vertical cylinders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Vec3};

/// Height of extruded obstacles; well above any map band.
const TOP: f64 = 10.0;
const GROUND: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Obstacle {
    Box { min: Vec3, max: Vec3 },
    Cylinder { x: f64, y: f64, radius: f64, z_min: f64, z_max: f64 },
}

impl Obstacle {
    pub fn pillar(x: f64, y: f64, radius: f64) -> Self {
        Obstacle::Cylinder { x, y, radius, z_min: GROUND, z_max: TOP }
    }

    /// Full-height wall between two corners in the plane.
    pub fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Obstacle::Box { min: Vec3::new(x0.min(x1), y0.min(y1), GROUND), max: Vec3::new(x0.max(x1), y0.max(y1), TOP) }
    }

    /// Euclidean distance from `p` to the solid (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        match *self {
            Obstacle::Box { min, max } => Aabb::new(min, max).distance(p),
            Obstacle::Cylinder { x, y, radius, z_min, z_max } => {
                let radial = ((p.x - x).hypot(p.y - y) - radius).max(0.0);
                let vertical = (z_min - p.z).max(p.z - z_max).max(0.0);
                radial.hypot(vertical)
            }
        }
    }

    /// Smallest `t ≥ 0` with `o + t d` on the solid (`d` unit length).
    pub fn ray_hit(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        match *self {
            Obstacle::Box { min, max } => {
                let (t0, t1) = Aabb::new(min, max).ray_interval(o, d)?;
                (t1 >= 0.0).then_some(t0.max(0.0))
            }
            Obstacle::Cylinder { x, y, radius, z_min, z_max } => {
                // radial slab
                let (ox, oy) = (o.x - x, o.y - y);
                let a = d.x * d.x + d.y * d.y;
                let c = ox * ox + oy * oy - radius * radius;
                let (mut t0, mut t1) = if a < 1e-15 {
                    if c > 0.0 {
                        return None;
                    }
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    let b = ox * d.x + oy * d.y;
                    let disc = b * b - a * c;
                    if disc < 0.0 {
                        return None;
                    }
                    let s = disc.sqrt();
                    ((-b - s) / a, (-b + s) / a)
                };
                // vertical slab
                if d.z.abs() < 1e-15 {
                    if o.z < z_min || o.z > z_max {
                        return None;
                    }
                } else {
                    let u0 = (z_min - o.z) / d.z;
                    let u1 = (z_max - o.z) / d.z;
                    t0 = t0.max(u0.min(u1));
                    t1 = t1.min(u0.max(u1));
                }
                (t0 <= t1 && t1 >= 0.0).then_some(t0.max(0.0))
            }
        }
    }

    /// Conservative planar reach used for broad-phase culling.
    fn planar_distance(&self, p: &Vec3) -> f64 {
        match *self {
            Obstacle::Box { min, max } => {
                let dx = (min.x - p.x).max(p.x - max.x).max(0.0);
                let dy = (min.y - p.y).max(p.y - max.y).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Cylinder { x, y, radius, .. } => ((p.x - x).hypot(p.y - y) - radius).max(0.0),
        }
    }
}

/// Parameters the world was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Generator {
    Empty { length: f64 },
    /// Random pillars over a `size × size` square.
    Forest { density: f64, size: f64, seed: u64 },
    /// Long block whose corner must be rounded; optionally a pillar just behind it.
    Corner { hidden_cylinder: bool, seed: u64 },
    /// U-shaped trap opening toward the start.
    Bugtrap { opening: f64, depth: f64, width: f64 },
    /// Grid of rooms connected by doors.
    Rooms { rows: usize, cols: usize, room: f64, door: f64, seed: u64 },
}

impl Default for Generator {
    fn default() -> Self {
        Generator::Forest { density: 0.1, size: 25.0, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub obstacles: Vec<Obstacle>,
    pub start: Vec3,
    pub goal: Vec3,
    pub generator: Generator,
}

/// Flight altitude of start and goal.
pub const ALTITUDE: f64 = 1.0;

impl World {
    /// Distance from `p` to the nearest obstacle surface.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.obstacles.iter().map(|o| o.distance(p)).fold(f64::INFINITY, f64::min)
    }

    /// Nearest hit along a unit ray within `range`.
    pub fn ray_cast(&self, o: &Vec3, d: &Vec3, range: f64) -> Option<f64> {
        self.obstacles.iter().filter_map(|ob| ob.ray_hit(o, d)).filter(|&t| t <= range).fold(None, |m, t| Some(m.map_or(t, |m: f64| m.min(t))))
    }

    /// Obstacles that could be hit by a ray of length `range` from `o`.
    pub fn nearby(&self, o: &Vec3, range: f64) -> Vec<Obstacle> {
        self.obstacles.iter().filter(|ob| ob.planar_distance(o) <= range).copied().collect()
    }

    pub fn generate(generator: &Generator, clearance: f64) -> World {
        let ground = Obstacle::Box { min: Vec3::new(-1e3, -1e3, GROUND), max: Vec3::new(1e3, 1e3, 0.0) };
        let mut obstacles = vec![ground];
        let (start, goal) = match *generator {
            Generator::Empty { length } => (Vec3::new(0.0, 0.0, ALTITUDE), Vec3::new(length, 0.0, ALTITUDE)),
            Generator::Forest { density, size, seed } => {
                let start = Vec3::new(-2.0, 0.0, ALTITUDE);
                let goal = Vec3::new(size + 2.0, 0.0, ALTITUDE);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let count = (density * size * size).round() as usize;
                let mut placed = 0;
                while placed < count {
                    let x = rng.gen_range(0.0..size);
                    let y = rng.gen_range(-size / 2.0..size / 2.0);
                    let radius = rng.gen_range(0.15..0.4);
                    let p = Obstacle::pillar(x, y, radius);
                    if p.distance(&start) < 2.0 * clearance + 1.0 || p.distance(&goal) < 2.0 * clearance + 1.0 {
                        continue;
                    }
                    obstacles.push(p);
                    placed += 1;
                }
                (start, goal)
            }
            Generator::Corner { hidden_cylinder, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // block occupying x ≤ 0, y ≥ 0; the vehicle flies east along its
                // south face and turns north around the corner at the origin
                obstacles.push(Obstacle::wall(-30.0, 0.0, 0.0, 20.0));
                if hidden_cylinder {
                    let cx = rng.gen_range(0.8..1.1);
                    let cy = rng.gen_range(1.3..1.9);
                    obstacles.push(Obstacle::pillar(cx, cy, 0.35));
                }
                let lane = rng.gen_range(-1.8..-1.2);
                (Vec3::new(-16.0, lane, ALTITUDE), Vec3::new(rng.gen_range(2.0..3.0), 12.0, ALTITUDE))
            }
            Generator::Bugtrap { opening, depth, width } => {
                let x0 = 6.0;
                let x1 = x0 + depth;
                let h = width / 2.0;
                let t = 0.4;
                obstacles.push(Obstacle::wall(x1, -h - t, x1 + t, h + t)); // back
                obstacles.push(Obstacle::wall(x0, h, x1, h + t)); // sides
                obstacles.push(Obstacle::wall(x0, -h - t, x1, -h));
                let lip = ((width - opening) / 2.0).max(0.0);
                if lip > 0.0 {
                    obstacles.push(Obstacle::wall(x0 - t, h - lip, x0, h + t));
                    obstacles.push(Obstacle::wall(x0 - t, -h - t, x0, -h + lip));
                }
                (Vec3::new(0.0, 0.0, ALTITUDE), Vec3::new(x1 + 6.0, 0.0, ALTITUDE))
            }
            Generator::Rooms { rows, cols, room, door, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let t = 0.2;
                let (w, h) = (cols as f64 * room, rows as f64 * room);
                // outer shell
                obstacles.push(Obstacle::wall(-t, -t, w + t, 0.0));
                obstacles.push(Obstacle::wall(-t, h, w + t, h + t));
                obstacles.push(Obstacle::wall(-t, 0.0, 0.0, h));
                obstacles.push(Obstacle::wall(w, 0.0, w + t, h));
                // interior walls, each with one door
                for c in 1..cols {
                    let x = c as f64 * room;
                    for r in 0..rows {
                        let (y0, y1) = (r as f64 * room, (r + 1) as f64 * room);
                        let d = rng.gen_range(y0 + 0.3..y1 - door - 0.3);
                        obstacles.push(Obstacle::wall(x - t / 2.0, y0, x + t / 2.0, d));
                        obstacles.push(Obstacle::wall(x - t / 2.0, d + door, x + t / 2.0, y1));
                    }
                }
                for r in 1..rows {
                    let y = r as f64 * room;
                    for c in 0..cols {
                        let (x0, x1) = (c as f64 * room, (c + 1) as f64 * room);
                        let d = rng.gen_range(x0 + 0.3..x1 - door - 0.3);
                        obstacles.push(Obstacle::wall(x0, y - t / 2.0, d, y + t / 2.0));
                        obstacles.push(Obstacle::wall(d + door, y - t / 2.0, x1, y + t / 2.0));
                    }
                }
                (Vec3::new(room / 2.0, room / 2.0, ALTITUDE), Vec3::new(w - room / 2.0, h - room / 2.0, ALTITUDE))
            }
        };
        World { obstacles, start, goal, generator: generator.clone() }
    }
}
