//! Body-centred sliding occupancy grid.
//!
//! Voxels carry one of three labels: known free, known occupied, or unknown.
//! Everything outside the grid extent is unknown. Obstacle and unknown
//! inflation by the robot radius is answered at query time from distance
//! transforms that are rebuilt lazily after the grid changes.

mod edt;

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Vec3};
pub use edt::{distance_transform, DistanceField};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MapError {
    #[error("sensor pose {0:?} lies outside the grid extent")]
    PoseOutsideGrid([f64; 3]),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoxelState {
    FreeKnown,
    OccupiedKnown,
    Unknown,
}

impl VoxelState {
    fn code(self) -> char {
        match self {
            VoxelState::FreeKnown => 'F',
            VoxelState::OccupiedKnown => 'O',
            VoxelState::Unknown => 'U',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'F' => Some(VoxelState::FreeKnown),
            'O' => Some(VoxelState::OccupiedKnown),
            'U' => Some(VoxelState::Unknown),
            _ => None,
        }
    }
}

/// A non-empty set of voxel labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateSet(u8);

impl StateSet {
    pub const FREE: StateSet = StateSet(1);
    pub const OCCUPIED: StateSet = StateSet(2);
    pub const UNKNOWN: StateSet = StateSet(4);
    pub const BLOCKED: StateSet = StateSet(6);

    pub fn contains(self, s: VoxelState) -> bool {
        let bit = match s {
            VoxelState::FreeKnown => 1,
            VoxelState::OccupiedKnown => 2,
            VoxelState::Unknown => 4,
        };
        self.0 & bit != 0
    }

    pub fn union(self, other: StateSet) -> StateSet {
        StateSet(self.0 | other.0)
    }
}

/// One sensor ray. `hit` holds the range of the return, `None` for a miss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub dir: Vec3,
    pub hit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub position: Vec3,
    pub yaw: f64,
    pub rays: Vec<Ray>,
    pub max_range: f64,
    pub horizontal_fov: f64,
}

/// Distance fields, each built on first use after the labels change.
#[derive(Debug, Clone, Default)]
struct Fields {
    occupied: OnceLock<DistanceField>,
    unknown: OnceLock<DistanceField>,
}

#[derive(Debug, Clone)]
pub struct SlidingGrid {
    center: Vec3,
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    cells: Vec<VoxelState>,
    inflation_radius: f64,
    fields: Fields,
}

impl PartialEq for SlidingGrid {
    fn eq(&self, other: &Self) -> bool {
        self.origin == other.origin
            && self.resolution == other.resolution
            && self.dims == other.dims
            && self.cells == other.cells
            && self.inflation_radius == other.inflation_radius
    }
}

fn snap_origin(center: &Vec3, res: f64, dims: [usize; 3]) -> Vec3 {
    Vec3::from_fn(|k, _| ((center[k] - dims[k] as f64 * res / 2.0) / res).round() * res)
}

impl SlidingGrid {
    /// An all-unknown grid centred (on the voxel lattice) at `center`.
    pub fn new(center: Vec3, resolution: f64, dims: [usize; 3], inflation_radius: f64) -> Result<Self, MapError> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidGrid(format!("resolution {resolution}")));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(MapError::InvalidGrid(format!("dims {dims:?}")));
        }
        if !(inflation_radius >= 0.0) {
            return Err(MapError::InvalidGrid(format!("inflation radius {inflation_radius}")));
        }
        let origin = snap_origin(&center, resolution, dims);
        let mut g = Self {
            center: Vec3::zeros(),
            origin,
            resolution,
            dims,
            cells: vec![VoxelState::Unknown; dims[0] * dims[1] * dims[2]],
            inflation_radius,
            fields: Fields::default(),
        };
        g.center = g.origin + g.half_size();
        Ok(g)
    }

    fn half_size(&self) -> Vec3 {
        Vec3::from_fn(|k, _| self.dims[k] as f64 * self.resolution / 2.0)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn inflation_radius(&self) -> f64 {
        self.inflation_radius
    }
    pub fn len(&self) -> usize {
        self.cells.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
    pub fn cells(&self) -> &[VoxelState] {
        &self.cells
    }

    pub fn extent(&self) -> Aabb {
        Aabb::new(self.origin, self.origin + 2.0 * self.half_size())
    }

    pub fn index(&self, v: [usize; 3]) -> usize {
        v[0] + self.dims[0] * (v[1] + self.dims[1] * v[2])
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        [i % self.dims[0], (i / self.dims[0]) % self.dims[1], i / (self.dims[0] * self.dims[1])]
    }

    /// Signed lattice coordinates of the voxel containing `p` (may lie outside the grid).
    pub fn lattice(&self, p: &Vec3) -> [i64; 3] {
        let q = (p - self.origin) / self.resolution;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    pub fn in_bounds(&self, v: [i64; 3]) -> Option<[usize; 3]> {
        (0..3)
            .all(|k| v[k] >= 0 && (v[k] as usize) < self.dims[k])
            .then(|| [v[0] as usize, v[1] as usize, v[2] as usize])
    }

    pub fn voxel_of(&self, p: &Vec3) -> Option<[usize; 3]> {
        if !self.extent().contains(p) {
            return None;
        }
        let l = self.lattice(p);
        // points on the upper faces belong to the last voxel
        Some([0, 1, 2].map(|k| (l[k].max(0) as usize).min(self.dims[k] - 1)))
    }

    pub fn voxel_center(&self, v: [usize; 3]) -> Vec3 {
        Vec3::from_fn(|k, _| self.origin[k] + (v[k] as f64 + 0.5) * self.resolution)
    }

    pub fn center_of_index(&self, i: usize) -> Vec3 {
        self.voxel_center(self.coords(i))
    }

    pub fn state_at(&self, v: [usize; 3]) -> VoxelState {
        self.cells[self.index(v)]
    }

    pub fn set_state(&mut self, v: [usize; 3], s: VoxelState) {
        let i = self.index(v);
        self.cells[i] = s;
        self.fields = Fields::default();
    }

    /// Raw label of the voxel containing `p`; Unknown outside the extent.
    pub fn raw_state(&self, p: &Vec3) -> VoxelState {
        self.voxel_of(p).map_or(VoxelState::Unknown, |v| self.state_at(v))
    }

    fn occupied_field(&self) -> &DistanceField {
        self.fields.occupied.get_or_init(|| distance_transform(self.dims, |i| self.cells[i] == VoxelState::OccupiedKnown))
    }

    fn unknown_field(&self) -> &DistanceField {
        self.fields.unknown.get_or_init(|| distance_transform(self.dims, |i| self.cells[i] == VoxelState::Unknown))
    }

    /// Ray-cast a depth scan into the grid with 3-D Bresenham traversal.
    ///
    /// Free labels from every ray are written first, then hits. Voxels that
    /// are already occupied are never freed.
    pub fn fuse_scan(&mut self, scan: &DepthScan) -> Result<(), MapError> {
        let Some(start) = self.voxel_of(&scan.position) else {
            return Err(MapError::PoseOutsideGrid(scan.position.into()));
        };
        let start = start.map(|c| c as i64);
        let mut free = Vec::new();
        let mut occupied = Vec::new();
        for ray in &scan.rays {
            let range = ray.hit.unwrap_or(scan.max_range);
            let end = self.lattice(&(scan.position + ray.dir * range));
            let mut last = None;
            let mut left_grid = false;
            bresenham_3d(start, end, |v| {
                match self.in_bounds(v) {
                    Some(u) => {
                        if let Some(prev) = last.replace(u) {
                            free.push(self.index(prev));
                        }
                        true
                    }
                    None => {
                        left_grid = true;
                        false
                    }
                }
            });
            if let Some(u) = last {
                if ray.hit.is_some() && !left_grid {
                    occupied.push(self.index(u));
                } else {
                    free.push(self.index(u));
                }
            }
        }
        if free.is_empty() && occupied.is_empty() {
            return Ok(());
        }
        for i in free {
            if self.cells[i] != VoxelState::OccupiedKnown {
                self.cells[i] = VoxelState::FreeKnown;
            }
        }
        for i in occupied {
            self.cells[i] = VoxelState::OccupiedKnown;
        }
        self.fields = Fields::default();
        Ok(())
    }

    /// Slide the grid so it is centred (on the lattice) at `new_center`.
    pub fn recenter(&mut self, new_center: Vec3) {
        let new_origin = snap_origin(&new_center, self.resolution, self.dims);
        let shift: [i64; 3] =
            [0, 1, 2].map(|k| ((new_origin[k] - self.origin[k]) / self.resolution).round() as i64);
        if shift == [0, 0, 0] {
            return;
        }
        let mut cells = vec![VoxelState::Unknown; self.cells.len()];
        for (i, c) in cells.iter_mut().enumerate() {
            let v = self.coords(i);
            let old = [0, 1, 2].map(|k| v[k] as i64 + shift[k]);
            if let Some(o) = self.in_bounds(old) {
                *c = self.cells[self.index(o)];
            }
        }
        self.cells = cells;
        self.origin = Vec3::from_fn(|k, _| self.origin[k] + shift[k] as f64 * self.resolution);
        self.center = self.origin + self.half_size();
        self.fields = Fields::default();
    }

    /// True when some voxel of `field`'s site set has its centre within `radius` of `p`.
    fn any_site_within(&self, p: &Vec3, field: &DistanceField, state: VoxelState, radius: f64) -> bool {
        if !field.has_sites() {
            return false;
        }
        let Some(v) = self.voxel_of(p) else { return false };
        let i = self.index(v);
        let half_diag = self.resolution * 3f64.sqrt() / 2.0;
        let dv = field.sq[i].sqrt() * self.resolution;
        if dv - half_diag > radius {
            return false;
        }
        if (self.center_of_index(field.site[i]) - p).norm() <= radius {
            return true;
        }
        let reach = (radius / self.resolution).ceil() as i64 + 1;
        let l = v.map(|c| c as i64);
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(u) = self.in_bounds([l[0] + dx, l[1] + dy, l[2] + dz]) {
                        if self.state_at(u) == state && (self.voxel_center(u) - p).norm() <= radius {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Label of `p`, optionally with occupied and unknown space grown by the
    /// inflation radius. Occupied wins over unknown.
    pub fn classify(&self, p: &Vec3, inflate: bool) -> VoxelState {
        let Some(v) = self.voxel_of(p) else {
            return VoxelState::Unknown;
        };
        let raw = self.state_at(v);
        if !inflate || raw == VoxelState::OccupiedKnown {
            return raw;
        }
        let r = self.inflation_radius;
        if self.any_site_within(p, self.occupied_field(), VoxelState::OccupiedKnown, r) {
            return VoxelState::OccupiedKnown;
        }
        if raw == VoxelState::Unknown
            || self.extent().nearest_face(p).1 <= r
            || self.any_site_within(p, self.unknown_field(), VoxelState::Unknown, r)
        {
            return VoxelState::Unknown;
        }
        VoxelState::FreeKnown
    }

    /// True when `p` is FreeKnown after inflation.
    pub fn is_free(&self, p: &Vec3) -> bool {
        self.classify(p, true) == VoxelState::FreeKnown
    }

    /// Per-voxel mask of centres lying in occupied space after inflation.
    pub fn inflated_occupied_mask(&self) -> Vec<bool> {
        let f = self.occupied_field();
        let r2 = (self.inflation_radius / self.resolution).powi(2);
        (0..self.cells.len())
            .map(|i| self.cells[i] == VoxelState::OccupiedKnown || (f.has_sites() && f.sq[i] <= r2 + 1e-9))
            .collect()
    }

    /// Traversable for the optimistic global planner: not occupied after inflation.
    pub fn is_traversable(&self, p: &Vec3) -> bool {
        self.classify(p, true) != VoxelState::OccupiedKnown
    }

    fn nearest_in_field(&self, p: &Vec3, field: &DistanceField, state: VoxelState) -> Option<(Vec3, f64)> {
        if !field.has_sites() {
            return None;
        }
        let v = self.voxel_of(p)?;
        let i = self.index(v);
        let cand = self.center_of_index(field.site[i]);
        let dc = (cand - p).norm();
        let lower = field.sq[i].sqrt() * self.resolution - self.resolution * 3f64.sqrt() / 2.0;
        if dc <= lower + 1e-12 {
            return Some((cand, dc));
        }
        let mut best = (cand, dc, field.site[i]);
        let lo = self.lattice(&(p - Vec3::repeat(dc)));
        let hi = self.lattice(&(p + Vec3::repeat(dc)));
        for z in lo[2].max(0)..=hi[2].min(self.dims[2] as i64 - 1) {
            for y in lo[1].max(0)..=hi[1].min(self.dims[1] as i64 - 1) {
                for x in lo[0].max(0)..=hi[0].min(self.dims[0] as i64 - 1) {
                    let u = [x as usize, y as usize, z as usize];
                    let j = self.index(u);
                    if self.cells[j] != state {
                        continue;
                    }
                    let c = self.voxel_center(u);
                    let d = (c - p).norm();
                    if d < best.1 || (d == best.1 && j < best.2) {
                        best = (c, d, j);
                    }
                }
            }
        }
        Some((best.0, best.1))
    }

    fn nearest_brute(&self, p: &Vec3, state: VoxelState) -> Option<(Vec3, f64)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == state)
            .map(|(i, _)| {
                let c = self.center_of_index(i);
                (c, (c - p).norm())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Exact nearest voxel centre whose label is in `states`. Unknown space
    /// beyond the extent counts through the distance to the extent boundary.
    pub fn nearest_cell(&self, p: &Vec3, states: StateSet) -> Option<(Vec3, f64)> {
        let inside = self.extent().contains(p);
        if !inside && states.contains(VoxelState::Unknown) {
            return Some((*p, 0.0));
        }
        let mut best: Option<(Vec3, f64)> = None;
        let mut offer = |c: Option<(Vec3, f64)>| {
            if let Some(c) = c {
                if best.is_none_or(|b| c.1 < b.1) {
                    best = Some(c);
                }
            }
        };
        for state in [VoxelState::OccupiedKnown, VoxelState::Unknown, VoxelState::FreeKnown] {
            if !states.contains(state) {
                continue;
            }
            let field = match state {
                VoxelState::OccupiedKnown => Some(self.occupied_field()),
                VoxelState::Unknown => Some(self.unknown_field()),
                VoxelState::FreeKnown => None,
            };
            match field {
                Some(field) if inside => offer(self.nearest_in_field(p, field, state)),
                _ => offer(self.nearest_brute(p, state)),
            }
        }
        if states.contains(VoxelState::Unknown) {
            offer(Some(self.extent().nearest_face(p)));
        }
        best
    }

    /// Distance from `p` to the inflated set of `states`: nearest-cell
    /// distance minus the inflation radius, floored at zero.
    pub fn clearance(&self, p: &Vec3, states: StateSet) -> Option<f64> {
        self.nearest_cell(p, states).map(|(_, d)| (d - self.inflation_radius).max(0.0))
    }

    /// Text dump: header `res dx dy dz cx cy cz`, then run-length encoded
    /// labels (`<count><F|O|U>`, x fastest).
    pub fn dump(&self) -> String {
        let mut s = format!(
            "{} {} {} {} {} {} {}\n",
            self.resolution, self.dims[0], self.dims[1], self.dims[2], self.center.x, self.center.y, self.center.z
        );
        let mut runs: Vec<(usize, VoxelState)> = Vec::new();
        for &c in &self.cells {
            match runs.last_mut() {
                Some((n, st)) if *st == c => *n += 1,
                _ => runs.push((1, c)),
            }
        }
        let body: Vec<String> = runs.iter().map(|(n, st)| format!("{n}{}", st.code())).collect();
        let _ = writeln!(s, "{}", body.join(" "));
        s
    }

    /// Parse a dump produced by [`SlidingGrid::dump`].
    pub fn parse_dump(text: &str, inflation_radius: f64) -> Result<Self, MapError> {
        let err = |line: usize, msg: String| MapError::Parse { line, msg };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 7 {
            return Err(err(1, format!("expected 7 header fields, found {}", toks.len())));
        }
        let res: f64 = toks[0].parse().map_err(|e| err(1, format!("resolution: {e}")))?;
        let mut dims = [0usize; 3];
        for k in 0..3 {
            dims[k] = toks[1 + k].parse().map_err(|e| err(1, format!("dims: {e}")))?;
        }
        let mut c = [0f64; 3];
        for k in 0..3 {
            c[k] = toks[4 + k].parse().map_err(|e| err(1, format!("center: {e}")))?;
        }
        let mut g = Self::new(Vec3::from(c), res, dims, inflation_radius)?;
        let mut cells = Vec::with_capacity(g.cells.len());
        for (ln, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                let (num, code) = tok.split_at(tok.len().saturating_sub(1));
                let state = code
                    .chars()
                    .next()
                    .and_then(VoxelState::from_code)
                    .ok_or_else(|| err(ln + 2, format!("bad run '{tok}'")))?;
                let n: usize = num.parse().map_err(|_| err(ln + 2, format!("bad run '{tok}'")))?;
                cells.extend(std::iter::repeat_n(state, n));
            }
        }
        if cells.len() != g.cells.len() {
            return Err(err(2, format!("expected {} voxels, found {}", g.cells.len(), cells.len())));
        }
        g.cells = cells;
        Ok(g)
    }
}

/// Integer 3-D Bresenham from `a` to `b` inclusive. `visit` returns false to stop.
pub fn bresenham_3d(a: [i64; 3], b: [i64; 3], mut visit: impl FnMut([i64; 3]) -> bool) {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ad = d.map(i64::abs);
    let step = d.map(i64::signum);
    let major = (0..3).max_by_key(|&k| (ad[k], std::cmp::Reverse(k))).unwrap_or(0);
    let n = ad[major];
    let mut p = a;
    // err_k tracks 2*n*(exact - current) offset for the minor axes
    let mut err = [0i64; 3];
    for k in 0..3 {
        err[k] = 2 * ad[k] - n;
    }
    if !visit(p) {
        return;
    }
    for _ in 0..n {
        for k in 0..3 {
            if k == major {
                continue;
            }
            if err[k] > 0 {
                p[k] += step[k];
                err[k] -= 2 * n;
            }
            err[k] += 2 * ad[k];
        }
        p[major] += step[major];
        if !visit(p) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid10() -> SlidingGrid {
        SlidingGrid::new(Vec3::new(5.0, 5.0, 5.0), 1.0, [10, 10, 10], 0.5).unwrap()
    }

    fn axis_scan(pos: Vec3, hit: Option<f64>) -> DepthScan {
        DepthScan {
            position: pos,
            yaw: 0.0,
            rays: vec![Ray { dir: Vec3::x(), hit }],
            max_range: 8.0,
            horizontal_fov: 1.0,
        }
    }

    #[test]
    fn empty_scan_leaves_grid_unknown() {
        let mut g = grid10();
        let before = g.clone();
        let scan = DepthScan { rays: vec![], ..axis_scan(Vec3::new(0.5, 0.5, 0.5), None) };
        g.fuse_scan(&scan).unwrap();
        assert_eq!(g, before);
        assert!(g.cells().iter().all(|&c| c == VoxelState::Unknown));
    }

    #[test]
    fn single_ray_hit_at_five_voxels() {
        let mut g = grid10();
        g.fuse_scan(&axis_scan(Vec3::new(0.5, 0.5, 0.5), Some(5.0))).unwrap();
        for x in 0..10 {
            let want = match x {
                0..=4 => VoxelState::FreeKnown,
                5 => VoxelState::OccupiedKnown,
                _ => VoxelState::Unknown,
            };
            assert_eq!(g.state_at([x, 0, 0]), want, "x={x}");
        }
        assert_eq!(g.cells().iter().filter(|&&c| c != VoxelState::Unknown).count(), 6);
    }

    #[test]
    fn occupied_not_overwritten_by_crossing_ray() {
        let mut g = grid10();
        let mut scan = axis_scan(Vec3::new(0.5, 0.5, 0.5), Some(3.0));
        scan.rays.push(Ray { dir: Vec3::x(), hit: Some(6.0) });
        g.fuse_scan(&scan).unwrap();
        assert_eq!(g.state_at([3, 0, 0]), VoxelState::OccupiedKnown);
        assert_eq!(g.state_at([6, 0, 0]), VoxelState::OccupiedKnown);
        // a later scan crossing the voxel does not free it either
        g.fuse_scan(&axis_scan(Vec3::new(0.5, 0.5, 0.5), None)).unwrap();
        assert_eq!(g.state_at([3, 0, 0]), VoxelState::OccupiedKnown);
    }

    #[test]
    fn pose_outside_is_rejected() {
        let mut g = grid10();
        let before = g.clone();
        let e = g.fuse_scan(&axis_scan(Vec3::new(-3.0, 0.5, 0.5), Some(1.0)));
        assert!(matches!(e, Err(MapError::PoseOutsideGrid(_))));
        assert_eq!(g, before);
    }

    #[test]
    fn recenter_identity_and_full_shift() {
        let mut g = grid10();
        g.fuse_scan(&axis_scan(Vec3::new(0.5, 0.5, 0.5), Some(5.0))).unwrap();
        let before = g.clone();
        g.recenter(g.center());
        assert_eq!(g, before);
        g.recenter(g.center() + Vec3::new(10.0, 0.0, 0.0));
        assert!(g.cells().iter().all(|&c| c == VoxelState::Unknown));
    }

    #[test]
    fn recenter_one_voxel_matches_world_lookup() {
        let mut g = grid10();
        g.fuse_scan(&axis_scan(Vec3::new(0.5, 0.5, 0.5), Some(5.0))).unwrap();
        g.fuse_scan(&axis_scan(Vec3::new(0.5, 3.5, 2.5), None)).unwrap();
        let old = g.clone();
        g.recenter(g.center() + Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(g.center(), old.center() + Vec3::new(1.0, 0.0, 0.0));
        for i in 0..g.len() {
            let c = g.center_of_index(i);
            assert_eq!(g.cells()[i], old.raw_state(&c), "voxel {i}");
        }
        // new slab on +x is unknown
        for y in 0..10 {
            assert_eq!(g.state_at([9, y, 0]), VoxelState::Unknown);
        }
    }

    #[test]
    fn recenter_snaps_to_lattice() {
        let mut g = grid10();
        g.recenter(Vec3::new(5.3, 4.8, 5.1));
        assert_eq!(g.center(), Vec3::new(5.0, 5.0, 5.0));
    }

    fn free_grid_with(occ: &[[usize; 3]]) -> SlidingGrid {
        let mut g = SlidingGrid::new(Vec3::new(10.0, 10.0, 10.0), 1.0, [20, 20, 20], 0.8).unwrap();
        for c in g.cells.iter_mut() {
            *c = VoxelState::FreeKnown;
        }
        for &v in occ {
            g.set_state(v, VoxelState::OccupiedKnown);
        }
        g
    }

    #[test]
    fn classify_rules() {
        let g = free_grid_with(&[[10, 10, 10]]);
        assert_eq!(g.classify(&Vec3::new(-1.0, 0.0, 0.0), true), VoxelState::Unknown);
        // 10 radii away from the obstacle, far from the boundary
        let far = Vec3::new(10.5, 10.5 + 8.0, 10.5);
        assert_eq!(g.classify(&far, true), VoxelState::FreeKnown);
        let near = Vec3::new(10.5 + 0.9 * 0.8, 10.5, 10.5);
        assert_eq!(g.classify(&near, true), VoxelState::OccupiedKnown);
        assert_eq!(g.classify(&Vec3::new(11.9, 10.5, 10.5), false), VoxelState::FreeKnown);
        // next to the extent boundary counts as unknown after inflation
        assert_eq!(g.classify(&Vec3::new(0.5, 10.5, 10.5), true), VoxelState::Unknown);
    }

    #[test]
    fn nearest_cell_cases() {
        let g = SlidingGrid::new(Vec3::zeros(), 1.0, [8, 8, 8], 0.3).unwrap();
        assert!(g.nearest_cell(&Vec3::zeros(), StateSet::OCCUPIED).is_none());
        let g = free_grid_with(&[[4, 4, 4]]);
        let q = Vec3::new(4.5 + 3.0, 4.5 + 4.0, 4.5);
        let (c, d) = g.nearest_cell(&q, StateSet::OCCUPIED).unwrap();
        assert_eq!(c, Vec3::new(4.5, 4.5, 4.5));
        assert!((d - 5.0).abs() < 1e-12);
        let (_, d0) = g.nearest_cell(&Vec3::new(4.5, 4.5, 4.5), StateSet::OCCUPIED).unwrap();
        assert_eq!(d0, 0.0);
        // unknown beyond the extent: distance to the boundary
        let (_, db) = g.nearest_cell(&Vec3::new(1.25, 10.0, 10.0), StateSet::UNKNOWN).unwrap();
        assert!((db - 1.25).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip_and_golden() {
        let mut g = SlidingGrid::new(Vec3::new(1.0, 1.0, 0.5), 0.5, [4, 4, 2], 0.0).unwrap();
        g.fuse_scan(&DepthScan {
            position: Vec3::new(0.25, 0.25, 0.25),
            yaw: 0.0,
            rays: vec![Ray { dir: Vec3::x(), hit: Some(1.0) }],
            max_range: 5.0,
            horizontal_fov: 1.0,
        })
        .unwrap();
        let text = g.dump();
        assert_eq!(text, "0.5 4 4 2 1 1 0.5\n2F 1O 29U\n");
        let back = SlidingGrid::parse_dump(&text, 0.0).unwrap();
        assert_eq!(back, g);
        assert!(matches!(SlidingGrid::parse_dump("0.5 4 4\n", 0.0), Err(MapError::Parse { line: 1, .. })));
        assert!(matches!(
            SlidingGrid::parse_dump("0.5 4 4 2 1 1 0.5\n3X\n", 0.0),
            Err(MapError::Parse { line: 2, .. })
        ));
    }
}
