//! `dualplan`: runs scenarios, sweeps and ablations, and solves MIQP dumps.

mod commands;
mod output;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "dualplan", version, about = "Receding-horizon planner: scenarios, ablations and solver dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatencyArg {
    /// Every replan takes the configured planner latency (deterministic).
    Fixed,
    /// Replans take their measured wall-clock time.
    Wallclock,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Seeds, e.g. `1..10`, `3,5,8` or `1..3,7`; defaults to the scenario's own.
    #[arg(long, value_parser = seeds::parse_list)]
    seeds: Option<seeds::SeedList>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a scenario value with a dotted key, e.g. `planner.r=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for independent episodes (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum)]
    latency_mode: Option<LatencyArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode per seed.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also log global paths, corridors and splines per cycle.
        #[arg(long)]
        detail: bool,
    },
    /// Run the seeds once per value of one scenario key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted key to vary, e.g. `planner.r`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Crash counts with and without the safe trajectory per speed limit.
    AblateSafe {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [4.0, 6.0, 8.0])]
        vmax: Vec<f64>,
    },
    /// A→R speed at the corner when planning in free+unknown versus free-only space.
    AblatePlanspace {
        #[command(flatten)]
        common: Common,
    },
    /// Mean corridor volumes of the whole and safe trajectories.
    Volumes {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo samples per corridor.
        #[arg(long, default_value_t = 4000)]
        samples: usize,
    },
    /// Solve an MIQP dump file.
    SolveFile {
        file: PathBuf,
        /// Branch-and-bound node budget.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { common, detail } => commands::run(&common, detail),
        Command::Sweep { common, param, values } => commands::sweep(&common, &param, &values),
        Command::AblateSafe { common, vmax } => commands::ablate_safe(&common, &vmax),
        Command::AblatePlanspace { common } => commands::ablate_planspace(&common),
        Command::Volumes { common, samples } => commands::volumes(&common, samples),
        Command::SolveFile { file, budget } => commands::solve_file(&file, budget),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
