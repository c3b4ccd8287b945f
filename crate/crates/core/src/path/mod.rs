//! Global planning on the voxel grid: jump point search, path/voxel-set
//! intersection by sphere marching, repair of the previous plan, and the
//! choice between the fresh and the repaired direction.

pub mod jps;

use serde::{Deserialize, Serialize};

use crate::geom::{angle_between, Vec3};
use crate::map::{SlidingGrid, StateSet};
use crate::traj::{dt_lower_bound, Limits, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("no path on the grid")]
    NoPath,
    #[error("start lies in occupied space")]
    StartBlocked,
}

/// Piece-wise linear path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub vertices: Vec<Vec3>,
}

impl GridPath {
    /// Builds a path, dropping repeated consecutive vertices. A single point
    /// is kept as a degenerate two-vertex path.
    pub fn new(points: impl IntoIterator<Item = Vec3>) -> Self {
        let mut vertices: Vec<Vec3> = Vec::new();
        for p in points {
            if vertices.last().is_none_or(|q| (q - p).norm() > 1e-9) {
                vertices.push(p);
            }
        }
        if vertices.len() == 1 {
            vertices.push(vertices[0]);
        }
        Self { vertices }
    }

    pub fn start(&self) -> Vec3 {
        self.vertices[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn reversed(&self) -> Self {
        Self { vertices: self.vertices.iter().rev().copied().collect() }
    }

    /// Arc-length position of the point on the path closest to `p`.
    pub fn project(&self, p: &Vec3) -> (f64, Vec3) {
        let mut acc = 0.0;
        let mut best = (0.0, self.start(), f64::INFINITY);
        for (a, b) in self.segments() {
            let (q, t) = crate::geom::closest_on_segment(&a, &b, p);
            let d = (q - p).norm();
            if d < best.2 {
                best = (acc + t * (b - a).norm(), q, d);
            }
            acc += (b - a).norm();
        }
        (best.0, best.1)
    }

    /// The sub-path from arc length `s` to the end.
    pub fn suffix_from(&self, s: f64) -> Self {
        let mut acc = 0.0;
        for (i, (a, b)) in self.segments().enumerate() {
            let l = (b - a).norm();
            if acc + l >= s {
                let t = if l > 0.0 { ((s - acc) / l).clamp(0.0, 1.0) } else { 0.0 };
                let mut pts = vec![a + (b - a) * t];
                pts.extend_from_slice(&self.vertices[i + 1..]);
                return Self::new(pts);
            }
            acc += l;
        }
        Self::new([self.end()])
    }

    /// The sub-path from the start up to arc length `s`.
    pub fn prefix_to(&self, s: f64) -> Self {
        let mut acc = 0.0;
        let mut pts = vec![self.start()];
        for (a, b) in self.segments() {
            let l = (b - a).norm();
            if acc + l >= s {
                let t = if l > 0.0 { ((s - acc) / l).clamp(0.0, 1.0) } else { 0.0 };
                pts.push(a + (b - a) * t);
                return Self::new(pts);
            }
            pts.push(b);
            acc += l;
        }
        Self::new(pts)
    }

    /// Length of the path after the point closest to `p`.
    pub fn remaining_length_from(&self, p: &Vec3) -> f64 {
        let (s, _) = self.project(p);
        (self.length() - s).max(0.0)
    }

    /// Drops vertices that lie on the straight line through their neighbours.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<Vec3> = vec![self.start()];
        for i in 1..self.vertices.len() {
            let p = self.vertices[i];
            if out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                let u = b - a;
                let v = p - b;
                if u.cross(&v).norm() <= 1e-9 * u.norm() * v.norm() && u.dot(&v) > 0.0 {
                    out.pop();
                }
            }
            out.push(p);
        }
        Self::new(out)
    }
}

/// Per-voxel "blocked for the global planner" mask: occupied after inflation.
pub fn blocked_mask(grid: &SlidingGrid) -> Vec<bool> {
    grid.inflated_occupied_mask()
}

fn nearest_open(grid: &SlidingGrid, mask: &jps::Mask<'_>, p: &Vec3, reach: i64) -> Option<jps::Cell> {
    let l = grid.lattice(p);
    let mut best: Option<(f64, jps::Cell)> = None;
    for dz in -reach..=reach {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let c = [l[0] + dx, l[1] + dy, l[2] + dz];
                use jps::Lattice;
                if !mask.open(c) {
                    continue;
                }
                let u = grid.in_bounds(c).expect("open cells are in bounds");
                let d = (grid.voxel_center(u) - p).norm();
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, c));
                }
            }
        }
    }
    best.map(|b| b.1)
}

fn cell_center(grid: &SlidingGrid, c: jps::Cell) -> Vec3 {
    grid.voxel_center([c[0] as usize, c[1] as usize, c[2] as usize])
}

/// Search options for snapping the continuous endpoints onto the lattice.
#[derive(Debug, Clone, Copy)]
pub struct Snap {
    pub start_reach: i64,
    /// `None` requires the goal voxel itself to be open.
    pub goal_reach: Option<i64>,
}

impl Default for Snap {
    fn default() -> Self {
        Self { start_reach: 1, goal_reach: None }
    }
}

/// Jump point search from `start` to `goal` (continuous points). The
/// continuous endpoints are kept as the first and last vertices.
pub fn jps_search(grid: &SlidingGrid, start: Vec3, goal: Vec3) -> Result<GridPath, PathError> {
    let blocked = blocked_mask(grid);
    jps_search_with(grid, &blocked, start, goal, Snap::default())
}

pub fn jps_search_with(
    grid: &SlidingGrid,
    blocked: &[bool],
    start: Vec3,
    goal: Vec3,
    snap: Snap,
) -> Result<GridPath, PathError> {
    let mask = jps::Mask { dims: grid.dims(), blocked };
    let s = nearest_open(grid, &mask, &start, snap.start_reach).ok_or(PathError::StartBlocked)?;
    let g = match snap.goal_reach {
        None => {
            use jps::Lattice;
            let c = grid.lattice(&goal);
            if !mask.open(c) {
                return Err(PathError::NoPath);
            }
            c
        }
        Some(r) => nearest_open(grid, &mask, &goal, r).ok_or(PathError::NoPath)?,
    };
    let cells = jps::search(&mask, s, g).ok_or(PathError::NoPath)?;
    let mut pts = vec![start];
    pts.extend(cells.iter().map(|&c| cell_center(grid, c)));
    pts.push(goal);
    Ok(GridPath::new(pts).simplified())
}

/// Sphere-marching intersection of `path` with the inflated voxel set
/// `states`. Returns the first point whose clearance drops below `eps`.
pub fn find_intersection(path: &GridPath, grid: &SlidingGrid, states: StateSet, eps: f64) -> Option<Vec3> {
    assert!(eps > 0.0, "eps must be positive");
    let mut rest = path.clone();
    loop {
        let v = rest.start();
        let r = grid.clearance(&v, states)?;
        if r < eps {
            return Some(v);
        }
        let s = first_crossing_arc(&rest, &v, r)?;
        rest = rest.suffix_from(s);
        if rest.length() <= 0.0 {
            return None;
        }
    }
}

/// Arc length along `path` of its first point at distance `r` from `c`.
fn first_crossing_arc(path: &GridPath, c: &Vec3, r: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (a, b) in path.segments() {
        let l = (b - a).norm();
        if let Some(t) = first_crossing(&a, &b, c, r) {
            return Some(acc + t * l);
        }
        acc += l;
    }
    None
}

/// Smallest t in [0, 1] with |a + t (b - a) - c| = r.
fn first_crossing(a: &Vec3, b: &Vec3, c: &Vec3, r: f64) -> Option<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_squared();
    if qa < 1e-24 {
        return None;
    }
    let qb = 2.0 * f.dot(&d);
    let qc = f.norm_squared() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut roots = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
    roots.sort_by(f64::total_cmp);
    roots.into_iter().find(|t| (0.0..=1.0).contains(t))
}

/// First point along `path` at distance `radius` from `center`; `None` if
/// the path never reaches that distance.
pub fn path_sphere_exit(path: &GridPath, center: Vec3, radius: f64) -> Option<Vec3> {
    assert!(radius > 0.0, "radius must be positive");
    for (a, b) in path.segments() {
        if let Some(t) = first_crossing(&a, &b, &center, radius) {
            return Some(a + (b - a) * t);
        }
    }
    None
}

/// Reroutes the previous global plan around newly seen obstacles by joining
/// searches A -> I1 -> I2 -> G, where I1 and I2 are the first and last
/// intersections of the old plan with occupied space.
pub fn repair_previous(
    prev: &GridPath,
    grid: &SlidingGrid,
    blocked: &[bool],
    a: Vec3,
    g: Vec3,
) -> Result<GridPath, PathError> {
    let eps = grid.resolution() / 2.0;
    let (s0, _) = prev.project(&a);
    let rooted = GridPath::new(std::iter::once(a).chain(prev.suffix_from(s0).vertices.into_iter().skip(1)));
    let Some(i1) = find_intersection(&rooted, grid, StateSet::OCCUPIED, eps) else {
        return Ok(rooted);
    };
    let i2 = find_intersection(&rooted.reversed(), grid, StateSet::OCCUPIED, eps).unwrap_or(i1);
    let snap = Snap { start_reach: 2, goal_reach: Some(2) };
    let p1 = jps_search_with(grid, blocked, a, i1, snap)?;
    let p2 = jps_search_with(grid, blocked, i1, i2, snap)?;
    let p3 = jps_search_with(grid, blocked, i2, g, Snap { start_reach: 2, goal_reach: Some(2) })?;
    let mut pts = p1.vertices;
    pts.extend(p2.vertices.into_iter().skip(1));
    pts.extend(p3.vertices.into_iter().skip(1));
    Ok(GridPath::new(pts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionChoice {
    pub chosen: GridPath,
    pub chose_a: bool,
    pub cost_a: f64,
    pub cost_b: f64,
    pub angle: f64,
    pub evaluated: bool,
}

/// Parameters of the direction heuristic.
#[derive(Debug, Clone, Copy)]
pub struct DirectionParams {
    pub radius: f64,
    pub alpha0: f64,
    pub limits: Limits,
    pub intervals: usize,
}

/// Cost-to-go of following `path` from `a`: time lower bound to reach the
/// sphere exit plus the remaining length flown at top speed.
fn cost_to_go(path: &GridPath, a: Vec3, exit: Vec3, p: &DirectionParams) -> f64 {
    let start = State::at_rest(a);
    let dt = dt_lower_bound(&start, &exit, &p.limits, p.intervals, 1.0);
    let vmax = p.limits.v_max.min();
    p.intervals as f64 * dt + path.remaining_length_from(&exit) / vmax
}

pub fn choose_direction(jps_a: &GridPath, jps_b: &GridPath, a: Vec3, p: &DirectionParams) -> DirectionChoice {
    let c = path_sphere_exit(jps_a, a, p.radius).unwrap_or(jps_a.end());
    let d = path_sphere_exit(jps_b, a, p.radius).unwrap_or(jps_b.end());
    let angle = angle_between(&(c - a), &(d - a));
    if angle <= p.alpha0 {
        return DirectionChoice { chosen: jps_a.clone(), chose_a: true, cost_a: 0.0, cost_b: 0.0, angle, evaluated: false };
    }
    let cost_a = cost_to_go(jps_a, a, c, p);
    let cost_b = cost_to_go(jps_b, a, d, p);
    let chose_a = cost_a <= cost_b;
    DirectionChoice {
        chosen: if chose_a { jps_a.clone() } else { jps_b.clone() },
        chose_a,
        cost_a,
        cost_b,
        angle,
        evaluated: true,
    }
}

/// Whether the straight segment keeps positive clearance from the inflated
/// voxels in `states`, checked every quarter voxel.
pub fn segment_clear(grid: &SlidingGrid, a: &Vec3, b: &Vec3, states: StateSet) -> bool {
    let step = grid.resolution() / 4.0;
    let n = (((b - a).norm() / step).ceil() as usize).max(1);
    (0..=n).all(|i| {
        let p = a + (b - a) * (i as f64 / n as f64);
        grid.extent().contains(&p) && grid.clearance(&p, states).is_none_or(|c| c > 0.0)
    })
}

/// Greedy line-of-sight shortcutting: from each kept vertex, jump to the
/// farthest later vertex reachable by a clear straight segment.
pub fn shortcut(path: &GridPath, grid: &SlidingGrid, states: StateSet) -> GridPath {
    let v = &path.vertices;
    let mut out = vec![v[0]];
    let mut i = 0;
    while i + 1 < v.len() {
        let mut j = i + 1;
        for k in (i + 2..v.len()).rev() {
            if segment_clear(grid, &v[i], &v[k], states) {
                j = k;
                break;
            }
        }
        out.push(v[j]);
        i = j;
    }
    GridPath::new(out)
}
