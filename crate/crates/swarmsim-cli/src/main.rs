//! `swarmsim` command-line interface.
//!
//! Subcommands: validate-shape, run, sweep, render, report. Exit codes:
//! 0 success, 1 configuration/shape errors, 2 runtime errors.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use swarmsim_core::exec::Parallelism;
use swarmsim_core::metrics::{build_report, frame_from_events, FrameTransform};
use swarmsim_core::runner::{self, RunError};
use swarmsim_core::trace::Trace;
use swarmsim_core::{events, render, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "swarmsim",
    about = "Deterministic swarm self-assembly simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a shape file and report its dimensions, connectivity, holes,
    /// and capacity.
    ValidateShape {
        /// Shape file (P1 portable bitmap or '#'/'.' ASCII grid).
        shape: PathBuf,
        /// Cell edge length in meters.
        #[arg(long, default_value_t = 0.033)]
        cell_size: f64,
        /// Lattice pitch for the capacity report (defaults to cell size).
        #[arg(long)]
        pitch: Option<f64>,
    },
    /// Execute one scenario and write trace, metrics, and event log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permit holed shapes in baseline mode.
        #[arg(long)]
        override_holes: bool,
    },
    /// Run the cartesian product of config overrides, one run per combo.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override list, repeatable: --set key=v1,v2,v3
        #[arg(long = "set", value_name = "KEY=V1,V2,..")]
        sets: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run combos sequentially instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Rasterize one sampled tick of a stored run to a P6 pixmap.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Run directory holding trace.csv and events.log.
        #[arg(long)]
        run_dir: PathBuf,
        /// Tick to draw (must be sampled).
        #[arg(long)]
        tick: u64,
        /// Pixels per shape cell.
        #[arg(long, default_value_t = 8)]
        scale: usize,
        /// Output file (defaults to <run_dir>/frame_<tick>.ppm).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a stored trace and compare with metrics.txt.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    runtime: bool,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            runtime: false,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            runtime: true,
        }
    }

    fn exit_code(&self) -> u8 {
        if self.runtime {
            2
        } else {
            1
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(_) | RunError::Shape(_) | RunError::Placement(_) => {
                CliError::config(e.to_string())
            }
            _ => CliError::runtime(e.to_string()),
        }
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    override_holes: bool,
) -> Result<ScenarioConfig, CliError> {
    let mut config =
        ScenarioConfig::from_file(path).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(seed) = seed {
        config.world.rng_seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    if override_holes {
        config.override_holes = true;
    }
    Ok(config)
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::ValidateShape {
            shape,
            cell_size,
            pitch,
        } => {
            let text = std::fs::read_to_string(&shape)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", shape.display())))?;
            let grid = swarmsim_core::load_shape(&text, cell_size)
                .map_err(|e| CliError::config(e.to_string()))?;
            let pitch = pitch.unwrap_or(cell_size);
            println!("width = {}", grid.width());
            println!("height = {}", grid.height());
            println!("occupied = {}", grid.occupied_count());
            println!("connected = {}", grid.is_connected());
            println!("hole_count = {}", grid.count_holes());
            println!("capacity at pitch {pitch} = {}", grid.capacity(pitch));
            Ok(())
        }
        Command::Run {
            config,
            seed,
            out,
            override_holes,
        } => {
            let config = load_config(&config, seed, out, override_holes)?;
            let result = runner::run_to_dir(&config, &config.output_dir.clone())?;
            println!("exit = {}", result.exit.as_str());
            println!("digest = {}", result.digest);
            println!("fill_ratio = {:.6}", result.metrics.fill_ratio);
            println!("outputs in {}", config.output_dir.display());
            Ok(())
        }
        Command::Sweep {
            config,
            sets,
            seed,
            out,
            sequential,
        } => {
            let base = load_config(&config, seed, out, false)?;
            let mut overrides = Vec::new();
            for set in &sets {
                let (key, values) = set
                    .split_once('=')
                    .ok_or_else(|| CliError::config(format!("bad --set '{set}'")))?;
                let values: Vec<String> =
                    values.split(',').map(|v| v.trim().to_string()).collect();
                if values.is_empty() {
                    return Err(CliError::config(format!("empty value list in '{set}'")));
                }
                overrides.push((key.trim().to_string(), values));
            }
            let combos = runner::expand_sweep(&base, &overrides)?;
            let strategy = if sequential {
                Parallelism::Sequential
            } else {
                Parallelism::Parallel
            };
            let labeled: Vec<(String, ScenarioConfig)> = combos
                .into_iter()
                .map(|(label, mut c)| {
                    let sub = if label.is_empty() {
                        "base".to_string()
                    } else {
                        label.replace(['=', ','], "_")
                    };
                    c.output_dir = base.output_dir.join(&sub);
                    (label, c)
                })
                .collect();
            let configs: Vec<ScenarioConfig> = labeled.iter().map(|(_, c)| c.clone()).collect();
            let dirs: Vec<PathBuf> = configs.iter().map(|c| c.output_dir.clone()).collect();
            let results = swarmsim_core::exec::par_map(
                configs.into_iter().zip(dirs).collect::<Vec<_>>(),
                strategy,
                |(c, dir)| runner::run_to_dir(&c, &dir),
            );
            let mut failures = 0usize;
            for ((label, _), result) in labeled.iter().zip(results) {
                let name = if label.is_empty() { "base" } else { label };
                match result {
                    Ok(r) => println!(
                        "{name}: exit = {}, fill_ratio = {:.6}",
                        r.exit.as_str(),
                        r.metrics.fill_ratio
                    ),
                    Err(e) => {
                        failures += 1;
                        println!("{name}: error = {e}");
                    }
                }
            }
            if failures > 0 {
                return Err(CliError::runtime(format!("{failures} sweep run(s) failed")));
            }
            Ok(())
        }
        Command::Render {
            config,
            run_dir,
            tick,
            scale,
            out,
        } => {
            let config = load_config(&config, None, None, true)?;
            let shape = runner::load_scenario_shape(&config)?;
            let trace_text = std::fs::read_to_string(run_dir.join("trace.csv"))
                .map_err(|e| CliError::runtime(format!("cannot read trace: {e}")))?;
            let trace =
                Trace::from_text(&trace_text).map_err(|e| CliError::runtime(e.to_string()))?;
            let events_text = std::fs::read_to_string(run_dir.join("events.log"))
                .unwrap_or_default();
            let parsed = events::from_text(&events_text)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let (frame, shape) = match frame_from_events(&parsed) {
                Some((frame, origin)) => (frame, shape.with_origin(origin)),
                None => (FrameTransform::identity(), shape),
            };
            let frame_img = render::render(
                &trace,
                &shape,
                &frame,
                tick,
                config.world.robot_diameter,
                scale,
            )
            .map_err(|e| CliError::runtime(e.to_string()))?;
            let out = out.unwrap_or_else(|| run_dir.join(format!("frame_{tick}.ppm")));
            std::fs::write(&out, frame_img.to_ppm())
                .map_err(|e| CliError::runtime(e.to_string()))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Report { config, run_dir } => {
            let config = load_config(&config, None, None, true)?;
            let shape = runner::load_scenario_shape(&config)?;
            let trace_text = std::fs::read_to_string(run_dir.join("trace.csv"))
                .map_err(|e| CliError::runtime(format!("cannot read trace: {e}")))?;
            let trace =
                Trace::from_text(&trace_text).map_err(|e| CliError::runtime(e.to_string()))?;
            let events_text = std::fs::read_to_string(run_dir.join("events.log"))
                .unwrap_or_default();
            let parsed = events::from_text(&events_text)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let report = build_report(&trace, &parsed, &shape, &config)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let text = report.to_text();
            print!("{text}");
            let stored = run_dir.join("metrics.txt");
            if let Ok(existing) = std::fs::read_to_string(&stored) {
                if existing == text {
                    println!("# matches stored metrics.txt");
                } else {
                    return Err(CliError::runtime(
                        "recomputed metrics differ from stored metrics.txt".to_string(),
                    ));
                }
            }
            Ok(())
        }
    }
}
