//! `bearloc` — bearing-only target localization experiments.
//!
//! Three subcommands drive the library against a scenario file:
//! `estimate` runs one localization solve, `mc` runs the Monte Carlo
//! validation batch, `control` runs the closed-loop active-sensing
//! episode. Every run writes a manifest sufficient to reproduce it.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 degenerate
//! geometry, 4 too many Monte Carlo trial failures, 5 fatal mid-run
//! estimator error.

mod measurements;
mod output;
mod scenario_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bearloc::{estimator, simulator, Error, MeasurementSet, NoiseModel, Scenario, WlsConfig};

use output::{EstimateRecord, Manifest};
use scenario_file::{scenario_digest, ScenarioFile};

const EXIT_CONFIG: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_MC_FAILURES: u8 = 4;
const EXIT_RUN_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "bearloc", version, about = "Bearing-only target localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trial fan-out; results are identical for any
    /// value.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single localization solve.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Measurement CSV (agent,px,py,pz,bx,by,bz).
        #[arg(long, conflicts_with = "synthesize")]
        measurements: Option<PathBuf>,
        /// Synthesize measurements from the scenario instead of reading
        /// a file.
        #[arg(long)]
        synthesize: bool,
    },
    /// Run the Monte Carlo localization batch.
    Mc {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the closed-loop active-sensing episode.
    Control {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let command_line: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Estimate { common, measurements, synthesize } => {
            cmd_estimate(common, measurements.as_deref(), *synthesize, started, &command_line)
        }
        Command::Mc { common } => cmd_mc(common, started, &command_line),
        Command::Control { common } => cmd_control(common, started, &command_line),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn config_err(message: impl Into<String>) -> (u8, String) {
    (EXIT_CONFIG, message.into())
}

/// Maps library errors to the exit-code taxonomy.
fn core_err(e: Error) -> (u8, String) {
    let code = match &e {
        Error::ZeroVector
        | Error::CoincidentPoints { .. }
        | Error::TangentNotOrthogonal
        | Error::DegenerateGeometry { .. }
        | Error::Singular => EXIT_DEGENERATE,
        Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::InsufficientAgents { .. } => EXIT_CONFIG,
        Error::StepFailed { .. } => EXIT_RUN_FAILED,
        Error::TooManyTrialFailures { .. } => EXIT_MC_FAILURES,
    };
    (code, e.to_string())
}

fn prepare(common: &CommonArgs) -> Result<(ScenarioFile, Scenario), (u8, String)> {
    let file = ScenarioFile::load(&common.scenario).map_err(config_err)?;
    let scenario = file.to_scenario(common.seed).map_err(config_err)?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| config_err(format!("cannot create {}: {e}", common.out.display())))?;
    Ok((file, scenario))
}

fn write_manifest(
    dir: &Path,
    scenario: &Scenario,
    started: Instant,
    command_line: &[String],
) -> CmdResult {
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_digest: scenario_digest(scenario),
        seed: scenario.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        command_line: command_line.join(" "),
    };
    output::write_json(&dir.join("manifest.json"), &manifest).map_err(config_err)
}

fn install_thread_pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>, (u8, String)> {
    match threads {
        None => Ok(None),
        Some(0) => Err(config_err("`--threads` must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Some)
            .map_err(|e| config_err(format!("cannot build thread pool: {e}"))),
    }
}

fn cmd_estimate(
    common: &CommonArgs,
    measurements: Option<&Path>,
    synthesize: bool,
    started: Instant,
    command_line: &[String],
) -> CmdResult {
    let (file, scenario) = prepare(common)?;
    let ms: MeasurementSet = match (measurements, synthesize) {
        (Some(path), false) => measurements::load_measurements(path).map_err(config_err)?,
        (None, true) => {
            let model = scenario.noise_model().map_err(core_err)?;
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            MeasurementSet::sample(&scenario.seekers, &scenario.target, &model, 0.0, &mut rng)
                .map_err(core_err)?
        }
        _ => {
            return Err(config_err(
                "exactly one of `--measurements <file>` or `--synthesize` is required",
            ))
        }
    };

    let sigmas = file.sigmas_for(ms.len()).map_err(config_err)?;
    let model = NoiseModel::per_agent(sigmas).map_err(core_err)?;
    let config =
        WlsConfig::from_noise_model(scenario.tolerance, WlsConfig::DEFAULT_MAX_ITERATIONS, &model)
            .map_err(core_err)?;
    let initial = estimator::initialize(&ms).map_err(core_err)?;
    let estimate = estimator::wls_solve(&initial, &ms, &config).map_err(core_err)?;

    output::write_json(
        &common.out.join("estimate.json"),
        &EstimateRecord::from_estimate(&estimate),
    )
    .map_err(config_err)?;
    write_manifest(&common.out, &scenario, started, command_line)
}

fn cmd_mc(common: &CommonArgs, started: Instant, command_line: &[String]) -> CmdResult {
    let (_, scenario) = prepare(common)?;
    if scenario.trials < 2 {
        return Err(config_err("Monte Carlo needs `trials` >= 2"));
    }
    let pool = install_thread_pool(common.threads)?;
    let run = match &pool {
        Some(pool) => pool.install(|| simulator::monte_carlo(&scenario)),
        None => simulator::monte_carlo(&scenario),
    }
    .map_err(core_err)?;

    output::write_json(&common.out.join("summary.json"), &output::mc_summary_record(&run))
        .map_err(config_err)?;
    output::write_trials_csv(&common.out.join("trials.csv"), &run).map_err(config_err)?;
    output::write_histogram_csv(&common.out.join("histogram.csv"), &run).map_err(config_err)?;
    write_manifest(&common.out, &scenario, started, command_line)
}

fn cmd_control(common: &CommonArgs, started: Instant, command_line: &[String]) -> CmdResult {
    let (_, scenario) = prepare(common)?;
    if scenario.duration <= 0.0 {
        return Err(config_err("control runs need `duration_s` > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let series = simulator::run_episode(&scenario, &mut rng).map_err(core_err)?;

    output::write_timeseries_csv(&common.out.join("timeseries.csv"), &series)
        .map_err(config_err)?;
    let final_record =
        output::final_record(&series).ok_or_else(|| config_err("episode produced no samples"))?;
    output::write_json(&common.out.join("final.json"), &final_record).map_err(config_err)?;
    write_manifest(&common.out, &scenario, started, command_line)
}
