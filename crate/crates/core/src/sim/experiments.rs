//! Measurements shared by the command-line ablations and the acceptance
//! tests, so both read episodes the same way.

use serde::Serialize;

use super::episode::{CycleRecord, EpisodeResult};

/// The replanning step at which a corner world is compared across planners:
/// the first cycle whose point A has cleared the block's far face (x = 0)
/// by `clearance`, i.e. the vehicle is rounding the corner.
pub fn corner_turn_cycle(result: &EpisodeResult, clearance: f64) -> Option<&CycleRecord> {
    result.cycles.iter().find(|c| c.points.a.is_some_and(|a| a.x >= clearance))
}

/// A→R speeds (executed planner, shadow planner) at the corner-turn step;
/// `None` entries mean that planner did not commit on that step.
pub fn corner_turn_speeds(result: &EpisodeResult, clearance: f64) -> Option<(Option<f64>, Option<f64>)> {
    corner_turn_cycle(result, clearance).map(|c| (c.prefix_speed, c.shadow_prefix_speed))
}

/// Mean corridor volumes over every cycle that produced an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VolumeSummary {
    pub whole: f64,
    pub whole_unknown: f64,
    pub safe: f64,
    pub safe_unknown: f64,
    /// Largest per-cycle unknown volume inside the safe corridor.
    pub safe_unknown_max: f64,
    pub cycles: usize,
}

impl VolumeSummary {
    pub fn over<'a>(results: impl IntoIterator<Item = &'a EpisodeResult>) -> Self {
        let mut s = VolumeSummary::default();
        for c in results.into_iter().flat_map(|r| &r.cycles) {
            let (Some(w), Some(f)) = (&c.volume_whole, &c.volume_safe) else { continue };
            s.whole += w.volume;
            s.whole_unknown += w.unknown_volume;
            s.safe += f.volume;
            s.safe_unknown += f.unknown_volume;
            s.safe_unknown_max = s.safe_unknown_max.max(f.unknown_volume);
            s.cycles += 1;
        }
        if s.cycles > 0 {
            let n = s.cycles as f64;
            s.whole /= n;
            s.whole_unknown /= n;
            s.safe /= n;
            s.safe_unknown /= n;
        }
        s
    }

    /// Same summary expressed in volumes of a sphere of `radius`.
    pub fn in_spheres(&self, radius: f64) -> Self {
        let v = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
        Self {
            whole: self.whole / v,
            whole_unknown: self.whole_unknown / v,
            safe: self.safe / v,
            safe_unknown: self.safe_unknown / v,
            safe_unknown_max: self.safe_unknown_max / v,
            cycles: self.cycles,
        }
    }
}

/// Nearest-rank percentile (`q` in [0, 1]); `None` for an empty slice.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q.clamp(0.0, 1.0) * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// Per-cycle Whole + Safe optimisation time in milliseconds.
pub fn miqp_times_ms(result: &EpisodeResult) -> Vec<f64> {
    result.metrics.cycle_timings.iter().map(|t| t.whole_ms + t.safe_ms).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.75), Some(3.0));
        assert_eq!(percentile(&v, 1.0), Some(4.0));
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&[], 0.5), None);
    }
}
