//! Convex decomposition of the space around a piece-wise linear path into
//! overlapping polyhedra, one per segment.
//!
//! Each segment seeds an ellipsoid with the segment as major axis. Obstacle
//! voxel centres, each dilated to a ball of the map's inflation radius, are
//! cut away one at a time in order of ellipsoid distance by a plane tangent to
//! that ball. The box around the segment closes the polyhedron.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{closest_on_segment, Aabb, Vec3};
use crate::map::{SlidingGrid, StateSet};
use crate::path::GridPath;

pub const DEFAULT_LOCAL_BOX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub normals: Vec<Vec3>,
    pub offsets: Vec<f64>,
    pub seed_segment: (Vec3, Vec3),
    pub local_box: Aabb,
}

impl Polyhedron {
    pub fn from_box(b: &Aabb, seed: (Vec3, Vec3)) -> Self {
        let mut p = Self { normals: vec![], offsets: vec![], seed_segment: seed, local_box: *b };
        p.push_box_faces(b);
        p
    }

    fn push_box_faces(&mut self, b: &Aabb) {
        for k in 0..3 {
            let mut n = Vec3::zeros();
            n[k] = 1.0;
            self.normals.push(n);
            self.offsets.push(b.max[k]);
            self.normals.push(-n);
            self.offsets.push(-b.min[k]);
        }
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// min over rows of `c − n·p`; non-negative inside.
    pub fn slack(&self, p: &Vec3) -> f64 {
        self.normals.iter().zip(&self.offsets).map(|(n, c)| c - n.dot(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        self.slack(p) >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorridorKind {
    Whole,
    Safe,
}

impl CorridorKind {
    /// Voxel labels the corridor must avoid.
    pub fn obstacle_states(self) -> StateSet {
        match self {
            CorridorKind::Whole => StateSet::OCCUPIED,
            CorridorKind::Safe => StateSet::BLOCKED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub polys: Vec<Polyhedron>,
    pub kind: CorridorKind,
}

impl Corridor {
    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        self.polys.iter().any(|q| q.contains(p, tol))
    }

    /// Union of the polyhedra's local boxes.
    pub fn bounding_box(&self) -> Aabb {
        let mut b = self.polys[0].local_box;
        for p in &self.polys[1..] {
            b.min = b.min.inf(&p.local_box.min);
            b.max = b.max.sup(&p.local_box.max);
        }
        b
    }
}

/// Subdivides long segments into equal parts no longer than `l_max`, then
/// keeps the first `p_max` segments.
pub fn split_and_truncate(path: &GridPath, l_max: f64, p_max: usize) -> GridPath {
    let mut pts = vec![path.start()];
    let mut segments = 0;
    'outer: for (a, b) in path.segments() {
        let parts = ((b - a).norm() / l_max - 1e-12).ceil().max(1.0) as usize;
        for i in 1..=parts {
            if segments == p_max {
                break 'outer;
            }
            pts.push(a + (b - a) * (i as f64 / parts as f64));
            segments += 1;
        }
    }
    GridPath::new(pts)
}

/// Separates one segment from a set of dilated obstacle points.
pub fn decompose_segment(a: Vec3, b: Vec3, obstacles: &[Vec3], radius: f64, local_box: &Aabb) -> Polyhedron {
    let mut poly = Polyhedron { normals: vec![], offsets: vec![], seed_segment: (a, b), local_box: *local_box };
    let mid = (a + b) / 2.0;
    let half = (b - a).norm() / 2.0;
    // ellipsoid frame: first axis along the segment
    let e1 = if half > 1e-9 { (b - a) / (2.0 * half) } else { Vec3::x() };
    let helper = if e1.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e2 = e1.cross(&helper).normalize();
    let e3 = e1.cross(&e2);
    let local = |p: &Vec3| {
        let d = p - mid;
        Vec3::new(d.dot(&e1), d.dot(&e2), d.dot(&e3))
    };
    let mut axis = half.max(1e-9);
    let mut minor = axis;
    if half <= 1e-9 {
        // point seed: sphere through the nearest obstacle
        minor = obstacles.iter().map(|q| (q - mid).norm()).fold(f64::INFINITY, f64::min).max(1e-6);
        axis = minor;
    } else {
        // shrink the minor radius until no obstacle centre is inside
        for q in obstacles {
            let l = local(q);
            let u = 1.0 - (l.x / axis).powi(2);
            let r2 = l.y * l.y + l.z * l.z;
            if u > 0.0 && r2 < minor * minor * u {
                minor = (r2 / u).sqrt().max(1e-6);
            }
        }
    }
    let metric = |q: &Vec3| {
        let l = local(q);
        (l.x / axis).powi(2) + (l.y * l.y + l.z * l.z) / (minor * minor)
    };
    let mut remaining: Vec<(f64, Vec3)> = obstacles.iter().map(|q| (metric(q), *q)).collect();
    remaining.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.x.total_cmp(&y.1.x)).then(x.1.y.total_cmp(&y.1.y)).then(x.1.z.total_cmp(&y.1.z)));
    let mut alive = vec![true; remaining.len()];
    for i in 0..remaining.len() {
        if !alive[i] {
            continue;
        }
        let q = remaining[i].1;
        // tangent plane of the ellipsoid scaled through q, moved onto the ball
        let l = local(&q);
        let grad_local = Vec3::new(l.x / (axis * axis), l.y / (minor * minor), l.z / (minor * minor));
        let grad = e1 * grad_local.x + e2 * grad_local.y + e3 * grad_local.z;
        let mut n = if grad.norm() > 1e-12 { grad.normalize() } else { (q - mid).normalize() };
        let seed_ok = |n: &Vec3| {
            let c = n.dot(&q) - radius;
            n.dot(&a) <= c && n.dot(&b) <= c
        };
        if !seed_ok(&n) {
            // fall back to the direction separating the ball from the segment
            let (s, _) = closest_on_segment(&a, &b, &q);
            let d = q - s;
            if d.norm() > 1e-12 {
                n = d.normalize();
            }
        }
        let seed_max = n.dot(&a).max(n.dot(&b));
        // a ball overlapping the seed cannot be cleared; touch the seed instead
        let c = (n.dot(&q) - radius).max(seed_max);
        poly.normals.push(n);
        poly.offsets.push(c);
        for j in i..remaining.len() {
            if alive[j] && n.dot(&remaining[j].1) - radius >= c - 1e-12 {
                alive[j] = false;
            }
        }
        alive[i] = false;
    }
    poly.push_box_faces(local_box);
    poly
}

/// Axis-aligned box `margin` beyond the segment's bounding box.
pub fn segment_box(a: &Vec3, b: &Vec3, margin: f64) -> Aabb {
    Aabb::new(a.inf(b) - Vec3::repeat(margin), a.sup(b) + Vec3::repeat(margin))
}

/// Centres of voxels labelled in `states` whose dilated ball reaches `region`.
pub fn obstacle_points(grid: &SlidingGrid, region: &Aabb, states: StateSet) -> Vec<Vec3> {
    let r = grid.inflation_radius();
    let lo = grid.lattice(&(region.min - Vec3::repeat(r)));
    let hi = grid.lattice(&(region.max + Vec3::repeat(r)));
    let dims = grid.dims();
    let mut out = Vec::new();
    for z in lo[2].max(0)..=hi[2].min(dims[2] as i64 - 1) {
        for y in lo[1].max(0)..=hi[1].min(dims[1] as i64 - 1) {
            for x in lo[0].max(0)..=hi[0].min(dims[0] as i64 - 1) {
                let v = [x as usize, y as usize, z as usize];
                if states.contains(grid.state_at(v)) {
                    let c = grid.voxel_center(v);
                    if region.distance(&c) <= r {
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

/// One polyhedron per path segment, avoiding `kind`'s obstacle labels.
///
/// For a safe corridor the local boxes are also clipped to the map extent
/// shrunk by the inflation radius, since everything outside the map is unknown.
pub fn decompose(grid: &SlidingGrid, path: &GridPath, kind: CorridorKind, local_box: f64) -> Corridor {
    let r = grid.inflation_radius();
    let ext = grid.extent();
    let inner = Aabb::new(ext.min + Vec3::repeat(r), ext.max - Vec3::repeat(r));
    let polys = path
        .segments()
        .map(|(a, b)| {
            let mut bx = segment_box(&a, &b, local_box);
            if kind == CorridorKind::Safe {
                bx.min = bx.min.sup(&inner.min).inf(&a.inf(&b));
                bx.max = bx.max.inf(&inner.max).sup(&a.sup(&b));
            }
            let obs = obstacle_points(grid, &bx, kind.obstacle_states());
            decompose_segment(a, b, &obs, r, &bx)
        })
        .collect();
    Corridor { polys, kind }
}

/// Monte-Carlo volume estimates over the corridor's bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    /// Volume of the union of the polyhedra (m³).
    pub volume: f64,
    /// Part of that union lying in raw unknown voxels (m³).
    pub unknown_volume: f64,
    pub samples: usize,
}

pub fn monte_carlo_volume(corridor: &Corridor, grid: &SlidingGrid, samples: usize, seed: u64) -> VolumeEstimate {
    let bx = corridor.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0usize;
    let mut unknown = 0usize;
    for _ in 0..samples {
        let p = Vec3::from_fn(|k, _| rng.gen_range(bx.min[k]..=bx.max[k]));
        if corridor.contains(&p, 0.0) {
            inside += 1;
            if grid.raw_state(&p) == crate::map::VoxelState::Unknown {
                unknown += 1;
            }
        }
    }
    let scale = bx.volume() / samples.max(1) as f64;
    VolumeEstimate { volume: inside as f64 * scale, unknown_volume: unknown as f64 * scale, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_long_segment() {
        let p = GridPath::new([Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0)]);
        let s = split_and_truncate(&p, 2.0, 3);
        assert_eq!(s.vertices.len(), 4);
        for (a, b) in s.segments() {
            assert!(((b - a).norm() - 5.0 / 3.0).abs() < 1e-12);
        }
        let one = split_and_truncate(&p, 2.0, 1);
        assert_eq!(one.vertices.len(), 2);
    }

    #[test]
    fn empty_box_gives_six_faces() {
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let bx = segment_box(&a, &b, 2.0);
        let p = decompose_segment(a, b, &[], 0.3, &bx);
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn single_obstacle_adds_one_plane() {
        let a = Vec3::zeros();
        let b = Vec3::new(2.0, 0.0, 0.0);
        let q = Vec3::new(1.0, 1.0, 0.0);
        let bx = segment_box(&a, &b, 2.0);
        let p = decompose_segment(a, b, &[q], 0.3, &bx);
        assert_eq!(p.len(), 7);
        assert!(p.slack(&q) < 0.0);
        assert!(p.slack(&a) >= 0.0 && p.slack(&b) >= 0.0);
    }
}
