//! CSV / JSONL writers. Everything here is a pure function of episode
//! results so that fixed-latency runs produce byte-identical files.

use std::fmt::Write as _;

use dualplan_core::sim::{miqp_times_ms, percentile, EpisodeMetrics, EpisodeResult};

pub const METRICS_HEADER: &str = "seed,reached_goal,flight_time,distance,max_speed,min_true_clearance,collisions,cycles,commits,opt_infeasible,prefix_hits_unknown,overtime,unsafe_commits";

pub fn metrics_row(seed: u64, m: &EpisodeMetrics) -> String {
    format!(
        "{seed},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{},{},{}",
        m.reached_goal,
        m.flight_time,
        m.distance,
        m.max_speed,
        m.min_true_clearance,
        m.collisions,
        m.cycles,
        m.commits,
        m.opt_infeasible,
        m.prefix_hits_unknown,
        m.overtime,
        m.unsafe_commits
    )
}

pub fn metrics_csv(runs: &[(u64, EpisodeResult)]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for (seed, r) in runs {
        s.push_str(&metrics_row(*seed, &r.metrics));
        s.push('\n');
    }
    s
}

/// Per-seed optimisation-time statistics (wall clock; not reproducible).
pub fn timing_csv(runs: &[(u64, EpisodeResult)]) -> String {
    let mut s = String::from("seed,cycles,miqp_p50_ms,miqp_p75_ms,miqp_max_ms,total_mean_ms\n");
    for (seed, r) in runs {
        let t = miqp_times_ms(r);
        let total = &r.metrics.cycle_timings;
        let mean = if total.is_empty() { 0.0 } else { total.iter().map(|t| t.total_ms).sum::<f64>() / total.len() as f64 };
        let _ = writeln!(
            s,
            "{seed},{},{:.3},{:.3},{:.3},{:.3}",
            t.len(),
            percentile(&t, 0.5).unwrap_or(0.0),
            percentile(&t, 0.75).unwrap_or(0.0),
            percentile(&t, 1.0).unwrap_or(0.0),
            mean
        );
    }
    s
}

/// One JSON object per replanning cycle, tagged with its seed.
pub fn cycles_jsonl(runs: &[(u64, EpisodeResult)]) -> String {
    let mut s = String::new();
    for (seed, r) in runs {
        for c in &r.cycles {
            let mut v = serde_json::to_value(c).expect("cycle records serialise");
            if let Some(o) = v.as_object_mut() {
                o.insert("seed".into(), (*seed).into());
            }
            s.push_str(&v.to_string());
            s.push('\n');
        }
    }
    s
}

pub fn trajectory_csv(r: &EpisodeResult) -> String {
    let mut s = String::from("t,x,y,z,vx,vy,vz,ax,ay,az,yaw\n");
    for p in &r.trajectory {
        let (x, v, a) = (p.state.x, p.state.v, p.state.a);
        let _ = writeln!(
            s,
            "{:.3},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5}",
            p.t, x.x, x.y, x.z, v.x, v.y, v.z, a.x, a.y, a.z, p.yaw
        );
    }
    s
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.4}"))
}
