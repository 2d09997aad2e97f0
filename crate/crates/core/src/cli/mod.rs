//! Experiment runner behind the `mixlab` binary.
//!
//! ```text
//! mixlab tail --config tail.toml --out runs/tail --seed 7 --threads 4
//! mixlab correlate --preset beta2-decay
//! mixlab list
//! mixlab show beta2-decay > my.toml
//! ```
//!
//! Every flag has an environment override with the `MIXLAB_` prefix
//! (`MIXLAB_CONFIG`, `MIXLAB_PRESET`, `MIXLAB_OUT`, `MIXLAB_SEED`,
//! `MIXLAB_THREADS`). All randomness derives from the config seed via
//! [`crate::rng::stream`].

pub mod config;
mod experiments;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{parse, Experiment, ExperimentConfig};
pub use output::{OutputRecord, RunManifest, Table};
pub use presets::{list_experiments, Preset, PRESETS};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mixlab",
    version,
    about = "Mixing experiments for billiard and suspension flows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Follow a billiard orbit; optionally check the map invariants.
    Simulate(RunArgs),
    /// Survival function of free flights or roof values, with a power-law fit.
    Tail(RunArgs),
    /// Correlation function of two observables.
    Correlate(RunArgs),
    /// Variance growth of Birkhoff integrals.
    Variance(RunArgs),
    /// Leading eigenvalue of the twisted transfer operator along a line.
    Spectrum(RunArgs),
    /// Approximate-eigenfunction defect on a finite subsystem.
    Defect(RunArgs),
    /// Coboundary reduction on the two-sided model.
    Chi(RunArgs),
    /// Temporal distance values and the box dimension of their range.
    Tdf(RunArgs),
    /// Periodic orbits, period ratios and the asymptotics of orbit families.
    Periods(RunArgs),
    /// Laplace-domain series for the correlation function.
    Laplace(RunArgs),
    /// List the built-in presets.
    List,
    /// Print a preset config.
    Show { name: String },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, env = "MIXLAB_CONFIG", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Run a built-in preset instead of a config file.
    #[arg(long, env = "MIXLAB_PRESET")]
    pub preset: Option<String>,
    /// Output directory; defaults to the config `out` key, then `runs/<subcommand>`.
    #[arg(long, env = "MIXLAB_OUT")]
    pub out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, env = "MIXLAB_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "MIXLAB_THREADS")]
    pub threads: Option<usize>,
}

impl Command {
    fn run_args(&self) -> Option<(Experiment, &RunArgs)> {
        use Command::*;
        Some(match self {
            Simulate(a) => (Experiment::Simulate, a),
            Tail(a) => (Experiment::Tail, a),
            Correlate(a) => (Experiment::Correlate, a),
            Variance(a) => (Experiment::Variance, a),
            Spectrum(a) => (Experiment::Spectrum, a),
            Defect(a) => (Experiment::Defect, a),
            Chi(a) => (Experiment::Chi, a),
            Tdf(a) => (Experiment::Tdf, a),
            Periods(a) => (Experiment::Periods, a),
            Laplace(a) => (Experiment::Laplace, a),
            List | Show { .. } => return None,
        })
    }
}

/// Load the config named by `args`, with the seed override applied.
pub fn load(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            parse(&text)?
        }
        (None, Some(name)) => {
            let p = presets::find(name)
                .ok_or_else(|| Error::config("--preset", format!("unknown preset `{name}`")))?;
            if p.experiment != experiment {
                return Err(Error::config(
                    "--preset",
                    format!("`{name}` is a `{}` preset", p.experiment.name()),
                ));
            }
            parse(p.config)?
        }
        (None, None) => {
            return Err(Error::config(
                "--config",
                "give --config PATH or --preset NAME",
            ))
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Run one experiment and write its CSVs and `manifest.json` into `out`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    out: &Path,
    threads: Option<usize>,
) -> Result<RunManifest> {
    cfg.validate(experiment)?;
    let mut resolved = cfg.clone();
    resolved.out = None;
    let text = resolved.to_toml();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))?;
    let start = Instant::now();
    let tables = pool.install(|| experiments::run(cfg, experiment))?;
    let manifest = RunManifest {
        experiment: experiment.name().to_string(),
        config_sha256: output::sha256_hex(text.as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        threads: pool.current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    };
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), &text)?;
    output::write_outputs(out, &tables, manifest)
}

/// Parse arguments, run, and map errors to exit codes (2 for config errors).
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::ConfigInvalid { .. }) {
                2
            } else {
                1
            })
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::List => {
            print!("{}", list_experiments());
            Ok(())
        }
        Command::Show { name } => {
            let p = presets::find(name)
                .ok_or_else(|| Error::config("name", format!("unknown preset `{name}`")))?;
            println!("# mixlab {} --config <this file>", p.experiment.name());
            print!("{}", p.config.trim_start());
            Ok(())
        }
        _ => {
            let (experiment, args) = command.run_args().expect("run subcommand");
            let cfg = load(experiment, args)?;
            let out = args
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| Path::new("runs").join(experiment.name()));
            let m = run_experiment(&cfg, experiment, &out, args.threads)?;
            for o in &m.outputs {
                println!(
                    "{}  {:>8} rows  {}",
                    o.sha256,
                    o.rows,
                    out.join(&o.file).display()
                );
            }
            println!(
                "manifest: {} ({:.1}s)",
                out.join("manifest.json").display(),
                m.wall_time_s
            );
            Ok(())
        }
    }
}
