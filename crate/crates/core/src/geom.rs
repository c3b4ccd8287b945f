//! Small geometric helpers shared by the map, planners and simulator.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Axis-aligned box given by its lower and upper corners.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let e = (self.min[k] - p[k]).max(p[k] - self.max[k]).max(0.0);
            d2 += e * e;
        }
        d2.sqrt()
    }

    /// Distance from an interior point to the nearest face, and the foot point on it.
    pub fn nearest_face(&self, p: &Vec3) -> (Vec3, f64) {
        let mut best = (*p, f64::INFINITY);
        for k in 0..3 {
            for (bound, d) in [(self.min[k], p[k] - self.min[k]), (self.max[k], self.max[k] - p[k])] {
                if d < best.1 {
                    let mut q = *p;
                    q[k] = bound;
                    best = (q, d);
                }
            }
        }
        best
    }

    pub fn volume(&self) -> f64 {
        let e = self.max - self.min;
        e.x.max(0.0) * e.y.max(0.0) * e.z.max(0.0)
    }

    /// Parametric entry/exit of the ray `o + t d` (slab method).
    pub fn ray_interval(&self, o: &Vec3, d: &Vec3) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if o[k] < self.min[k] || o[k] > self.max[k] {
                    return None;
                }
            } else {
                let a = (self.min[k] - o[k]) / d[k];
                let b = (self.max[k] - o[k]) / d[k];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Angle between two vectors in radians; zero when either is degenerate.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// Closest point to `p` on the segment `a`-`b`, with its parameter in [0, 1].
pub fn closest_on_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> (Vec3, f64) {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 < 1e-24 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    (a + ab * t, t)
}
