use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dualplan_core::geom::Vec3;
use dualplan_core::replan::PlanSpace;
use dualplan_core::sim::{corner_turn_cycle, EpisodeResult, Generator, LatencyMode, Scenario, VolumeSummary};
use dualplan_core::solver::{parse_miqp, solve_miqp, MiqpStatus};
use rayon::prelude::*;

use crate::output::{self, fmt_opt};
use crate::{seeds, Common, LatencyArg};

#[derive(Debug)]
pub enum CliError {
    /// Bad scenario, override or dump file.
    Input(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        2
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn generator_seed(g: &Generator) -> Option<u64> {
    match g {
        Generator::Forest { seed, .. } | Generator::Corner { seed, .. } | Generator::Rooms { seed, .. } => Some(*seed),
        Generator::Empty { .. } | Generator::Bugtrap { .. } => None,
    }
}

fn load_with(c: &Common, extra: &[String]) -> Result<Scenario> {
    let text = read(&c.scenario)?;
    let mut sets = c.set.clone();
    sets.extend_from_slice(extra);
    let mut s = Scenario::parse_with(&c.scenario.display().to_string(), &text, &sets)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(m) = c.latency_mode {
        s.sim.latency_mode = match m {
            LatencyArg::Fixed => LatencyMode::Fixed,
            LatencyArg::Wallclock => LatencyMode::Wallclock,
        };
    }
    Ok(s)
}

fn seed_list(c: &Common, s: &Scenario) -> Vec<u64> {
    c.seeds.clone().map(|l| l.0).unwrap_or_else(|| vec![generator_seed(&s.world).unwrap_or(0)])
}

/// Runs one episode per seed on a pool of `threads` workers, in seed order.
fn run_seeds(s: &Scenario, seeds: &[u64], threads: usize) -> Result<Vec<(u64, EpisodeResult)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(|| seeds.par_iter().map(|&k| (k, s.seeded(k).run())).collect()))
}

/// Effective configuration; `dualplan run --scenario <this file> --seeds <listed>` reproduces the run.
fn config_echo(s: &Scenario, seeds: &[u64]) -> String {
    format!("# effective configuration after --set / --latency-mode\n# seeds: {}\n{}", seeds::format(seeds), s.to_toml())
}

fn all_ok(runs: &[(u64, EpisodeResult)]) -> bool {
    runs.iter().all(|(_, r)| r.metrics.reached_goal && r.metrics.collisions == 0)
}

pub fn run(c: &Common, detail: bool) -> Result<u8> {
    let mut s = load_with(c, &[])?;
    s.sim.record |= detail;
    let seeds = seed_list(c, &s);
    let runs = run_seeds(&s, &seeds, c.threads)?;
    write(&c.out, "config.toml", &config_echo(&s, &seeds))?;
    write(&c.out, "metrics.csv", &output::metrics_csv(&runs))?;
    write(&c.out, "timing.csv", &output::timing_csv(&runs))?;
    write(&c.out, "cycles.jsonl", &output::cycles_jsonl(&runs))?;
    for (k, r) in &runs {
        write(&c.out, &format!("trajectories/seed_{k}.csv"), &output::trajectory_csv(r))?;
    }
    for (k, r) in &runs {
        let m = &r.metrics;
        println!(
            "seed {k:>4}: {} t={:.2}s dist={:.2}m vmax={:.2}m/s clearance={:.3}m collisions={}",
            if m.reached_goal { "reached" } else { "NOT reached" },
            m.flight_time,
            m.distance,
            m.max_speed,
            m.min_true_clearance,
            m.collisions
        );
    }
    Ok(if all_ok(&runs) { 0 } else { 1 })
}

pub fn sweep(c: &Common, param: &str, values: &[String]) -> Result<u8> {
    let mut csv = String::from("param,value,episodes,reached,collisions,mean_flight_time,mean_max_speed,miqp_p75_ms\n");
    let mut collided = false;
    for v in values {
        let s = load_with(c, &[format!("{param}={v}")])?;
        let seeds = seed_list(c, &s);
        let runs = run_seeds(&s, &seeds, c.threads)?;
        let n = runs.len() as f64;
        let reached = runs.iter().filter(|(_, r)| r.metrics.reached_goal).count();
        let collisions: usize = runs.iter().map(|(_, r)| r.metrics.collisions).sum();
        collided |= collisions > 0;
        let times: Vec<f64> = runs.iter().flat_map(|(_, r)| dualplan_core::sim::miqp_times_ms(r)).collect();
        let line = format!(
            "{param},{v},{},{reached},{collisions},{:.3},{:.3},{}",
            runs.len(),
            runs.iter().map(|(_, r)| r.metrics.flight_time).sum::<f64>() / n,
            runs.iter().map(|(_, r)| r.metrics.max_speed).sum::<f64>() / n,
            fmt_opt(dualplan_core::sim::percentile(&times, 0.75))
        );
        println!("{line}");
        csv.push_str(&line);
        csv.push('\n');
        write(&c.out, &format!("{param}={v}/metrics.csv"), &output::metrics_csv(&runs))?;
    }
    write(&c.out, "sweep.csv", &csv)?;
    Ok(u8::from(collided))
}

pub fn ablate_safe(c: &Common, vmax: &[f64]) -> Result<u8> {
    let base = load_with(c, &[])?;
    let seeds = seed_list(c, &base);
    write(&c.out, "config.toml", &config_echo(&base, &seeds))?;
    let mut csv = format!("vmax,safe_trajectory,{}\n", output::METRICS_HEADER);
    let mut table = String::from("  vmax | with Safe: crashes / reached | without Safe: crashes / reached\n");
    let mut safe_crashed = false;
    for &v in vmax {
        let mut cell = Vec::new();
        for with_safe in [true, false] {
            let mut s = base.clone();
            s.planner.limits.v_max = Vec3::repeat(v);
            s.planner.safe_trajectory = with_safe;
            s.sim.shadow = None;
            let runs = run_seeds(&s, &seeds, c.threads)?;
            let crashes = runs.iter().filter(|(_, r)| r.metrics.collisions > 0).count();
            let reached = runs.iter().filter(|(_, r)| r.metrics.reached_goal).count();
            safe_crashed |= with_safe && crashes > 0;
            cell.push(format!("{crashes:>3} / {reached:<3}"));
            for (k, r) in &runs {
                let _ = writeln!(csv, "{v},{with_safe},{}", output::metrics_row(*k, &r.metrics));
            }
        }
        let _ = writeln!(table, "{v:>6} | {:>27} | {:>30}", cell[0], cell[1]);
    }
    print!("{table}");
    write(&c.out, "ablate_safe.csv", &csv)?;
    Ok(u8::from(safe_crashed))
}

pub fn ablate_planspace(c: &Common) -> Result<u8> {
    let mut s = load_with(c, &[])?;
    if s.sim.shadow.is_none() {
        let mut shadow = s.planner.clone();
        shadow.plan_space = PlanSpace::FreeOnly;
        s.sim.shadow = Some(shadow);
    }
    let seeds = seed_list(c, &s);
    write(&c.out, "config.toml", &config_echo(&s, &seeds))?;
    let runs = run_seeds(&s, &seeds, c.threads)?;
    let clearance = s.sim.map.inflation_radius();
    let mut csv = String::from("seed,turn_time,speed_executed,speed_shadow,executed_faster,reached_goal,collisions\n");
    let mut faster = 0;
    for (k, r) in &runs {
        let turn = corner_turn_cycle(r, clearance);
        let (a, b) = turn.map_or((None, None), |t| (t.prefix_speed, t.shadow_prefix_speed));
        let win = matches!((a, b), (Some(a), Some(b)) if a > b);
        faster += usize::from(win);
        let _ = writeln!(
            csv,
            "{k},{},{},{},{win},{},{}",
            fmt_opt(turn.map(|t| t.t)),
            fmt_opt(a),
            fmt_opt(b),
            r.metrics.reached_goal,
            r.metrics.collisions
        );
        println!("seed {k:>4}: A→R speed executed {:>7}  shadow {:>7}", fmt_opt(a), fmt_opt(b));
    }
    println!("executed planner faster at the corner on {faster}/{} seeds", runs.len());
    write(&c.out, "planspace.csv", &csv)?;
    Ok(if all_ok(&runs) { 0 } else { 1 })
}

pub fn volumes(c: &Common, samples: usize) -> Result<u8> {
    let mut s = load_with(c, &[])?;
    s.sim.volume_samples = samples;
    let seeds = seed_list(c, &s);
    write(&c.out, "config.toml", &config_echo(&s, &seeds))?;
    let runs = run_seeds(&s, &seeds, c.threads)?;
    let m3 = VolumeSummary::over(runs.iter().map(|(_, r)| r));
    let sph = m3.in_spheres(s.sim.map.vehicle_radius);
    let mut csv = String::from("unit,whole,whole_unknown,safe,safe_unknown,safe_unknown_max,cycles\n");
    for (unit, v) in [("m3", m3), ("vehicle_spheres", sph)] {
        let line = format!(
            "{unit},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            v.whole, v.whole_unknown, v.safe, v.safe_unknown, v.safe_unknown_max, v.cycles
        );
        println!("{line}");
        csv.push_str(&line);
        csv.push('\n');
    }
    write(&c.out, "volumes.csv", &csv)?;
    Ok(if all_ok(&runs) { 0 } else { 1 })
}

pub fn solve_file(path: &Path, budget: usize) -> Result<u8> {
    let text = read(path)?;
    let p = parse_miqp(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let sol = solve_miqp(&p, budget, None).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    println!("status: {:?}", sol.status);
    println!("nodes: {}", sol.nodes_explored);
    if sol.status != MiqpStatus::Infeasible {
        println!("objective: {:.9}", sol.objective);
        println!("assignment: {:?}", sol.assignment);
        let x: Vec<String> = sol.x.iter().map(|v| format!("{v:.9}")).collect();
        println!("x: [{}]", x.join(", "));
    }
    Ok(if sol.status == MiqpStatus::Optimal { 0 } else { 1 })
}
