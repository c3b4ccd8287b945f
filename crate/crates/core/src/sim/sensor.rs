//! Synthetic depth camera: a fan of rays cast analytically against the world.

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::geom::Vec3;
use crate::map::{DepthScan, Ray};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel {
    /// Radians.
    pub horizontal_fov: f64,
    /// Radians.
    pub vertical_fov: f64,
    pub range: f64,
    /// Angular spacing of rays, radians.
    pub angular_resolution: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            horizontal_fov: 90f64.to_radians(),
            vertical_fov: 60f64.to_radians(),
            range: 10.0,
            angular_resolution: 1.5f64.to_radians(),
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), String> {
        let fov_ok = |f: f64| f > 0.0 && f <= std::f64::consts::PI;
        if !fov_ok(self.horizontal_fov) || !fov_ok(self.vertical_fov) {
            return Err("fields of view must lie in (0, pi]".into());
        }
        if !(self.range > 0.0) || !(self.angular_resolution > 0.0) {
            return Err("range and angular_resolution must be positive".into());
        }
        Ok(())
    }

    /// Unit ray directions for a camera at heading `yaw` (no pitch or roll).
    pub fn directions(&self, yaw: f64) -> Vec<Vec3> {
        let count = |fov: f64| ((fov / self.angular_resolution).round() as usize).max(1) + 1;
        let (nh, nv) = (count(self.horizontal_fov), count(self.vertical_fov));
        let mut out = Vec::with_capacity(nh * nv);
        for j in 0..nv {
            let el = -self.vertical_fov / 2.0 + self.vertical_fov * j as f64 / (nv - 1) as f64;
            for i in 0..nh {
                let az = yaw - self.horizontal_fov / 2.0 + self.horizontal_fov * i as f64 / (nh - 1) as f64;
                out.push(Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        out
    }
}

pub fn render_scan(world: &World, pose: Vec3, yaw: f64, sensor: &SensorModel) -> DepthScan {
    let near = World { obstacles: world.nearby(&pose, sensor.range), ..world.clone() };
    let rays = sensor
        .directions(yaw)
        .into_iter()
        .map(|dir| Ray { dir, hit: near.ray_cast(&pose, &dir, sensor.range) })
        .collect();
    DepthScan { position: pose, yaw, rays, max_range: sensor.range, horizontal_fov: sensor.horizontal_fov }
}
