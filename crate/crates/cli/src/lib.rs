//! Command-line front end: argument and config-file handling, the seeded
//! experiment runner, and CSV/JSON report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod inputs;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::Ctx;
use crate::config::*;
pub use crate::error::CliError;
pub use crate::output::Artifact;

#[derive(Debug, Parser)]
#[command(name = "qpjacobi", version, about = "Experiments on quasiperiodic Jacobi operators")]
pub struct Cli {
    /// Seed of the single random generator used by the run.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for the output files; stdout when absent.
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Continued fraction, convergents and Liouville exponent of a frequency.
    Freq(FreqParams),
    /// Coefficients of a model on a range of sites.
    Model {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: ModelParams,
    },
    /// Lyapunov exponents, trace scans and regularity bounds.
    Cocycle {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: CocycleParams,
    },
    /// Almost periodicity and block-product lower bounds.
    Bounds {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: BoundsParams,
    },
    /// m-functions and their scaling.
    Spectral {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: SpectralParams,
    },
    /// Trigonometric decomposition and norm growth of transfer matrices.
    Growth {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: GrowthParams,
    },
    /// Wavepacket moments and transport exponents.
    Transport {
        #[command(flatten)]
        model: ModelSpec,
        #[command(flatten)]
        params: TransportParams,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Freq(_) => "freq",
            Command::Model { .. } => "model",
            Command::Cocycle { .. } => "cocycle",
            Command::Bounds { .. } => "bounds",
            Command::Spectral { .. } => "spectral",
            Command::Growth { .. } => "growth",
            Command::Transport { .. } => "transport",
        }
    }

    /// The flags of this subcommand as a config overlay.
    fn overlay(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        match self.clone() {
            Command::Freq(p) => c.freq = Some(p),
            Command::Model { model, params } => {
                c.model = Some(model);
                c.model_output = Some(params);
            }
            Command::Cocycle { model, params } => {
                c.model = Some(model);
                c.cocycle = Some(params);
            }
            Command::Bounds { model, params } => {
                c.model = Some(model);
                c.bounds = Some(params);
            }
            Command::Spectral { model, params } => {
                c.model = Some(model);
                c.spectral = Some(params);
            }
            Command::Growth { model, params } => {
                c.model = Some(model);
                c.growth = Some(params);
            }
            Command::Transport { model, params } => {
                c.model = Some(model);
                c.transport = Some(params);
            }
        }
        c
    }
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub resolved: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
}

impl Cli {
    /// Config file (if any) overlaid by the flags.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let mut top = self.command.overlay();
        top.seed = self.seed;
        top.threads = self.threads;
        top.out_dir = self.out_dir.clone();
        file.merged(&top)
    }
}

pub fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    run_experiment(&cli.experiment()?, cli.command.name())
}

/// Fills every default for `command`, keeping only the sections it reads.
pub fn resolve(cfg: &ExperimentConfig, command: &str) -> Result<ExperimentConfig, CliError> {
    let mut r = ExperimentConfig {
        seed: Some(cfg.seed.unwrap_or(0)),
        threads: cfg.threads,
        out_dir: cfg.out_dir.clone(),
        ..Default::default()
    };
    let m = cfg.model.clone();
    match command {
        "freq" => r.freq = Some(commands::freq::resolve(cfg.freq.clone())),
        "model" => {
            let (m, p) = commands::model::resolve(m, cfg.model_output.clone());
            (r.model, r.model_output) = (Some(m), Some(p));
        }
        "cocycle" => {
            let (m, p) = commands::cocycle::resolve(m, cfg.cocycle.clone())?;
            (r.model, r.cocycle) = (Some(m), Some(p));
        }
        "bounds" => {
            let (m, p) = commands::bounds::resolve(m, cfg.bounds.clone())?;
            (r.model, r.bounds) = (Some(m), Some(p));
        }
        "spectral" => {
            let (m, p) = commands::spectral::resolve(m, cfg.spectral.clone())?;
            (r.model, r.spectral) = (Some(m), Some(p));
        }
        "growth" => {
            let (m, p) = commands::growth::resolve(m, cfg.growth.clone())?;
            (r.model, r.growth) = (Some(m), Some(p));
        }
        "transport" => {
            let (m, p) = commands::transport::resolve(m, cfg.transport.clone());
            (r.model, r.transport) = (Some(m), Some(p));
        }
        other => return Err(CliError::config("command", format!("unknown command `{other}`"))),
    }
    // TOML integers are signed 64-bit; the resolved config must print
    if r.seed.is_some_and(|s| s > i64::MAX as u64) {
        return Err(CliError::config("seed", "must be at most 2^63 - 1"));
    }
    toml::to_string(&r).map_err(|e| CliError::config("config", format!("value out of range: {e}")))?;
    Ok(r)
}

/// Runs `command` from a merged config. Bodies depend only on the resolved
/// config, seed included; the thread count only changes the speed.
pub fn run_experiment(cfg: &ExperimentConfig, command: &str) -> Result<RunOutput, CliError> {
    let r = resolve(cfg, command)?;
    let mut ctx = Ctx { rng: ChaCha8Rng::seed_from_u64(r.seed.unwrap()), notes: vec![] };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = r.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config("threads", e.to_string()))?;
    let model = r.model.clone().unwrap_or_default();
    let mut artifacts = pool.install(|| match command {
        "freq" => commands::freq::run(r.freq.as_ref().unwrap()),
        "model" => commands::model::run(&mut ctx, &model, r.model_output.as_ref().unwrap()),
        "cocycle" => commands::cocycle::run(&mut ctx, &model, r.cocycle.as_ref().unwrap()),
        "bounds" => commands::bounds::run(&mut ctx, &model, r.bounds.as_ref().unwrap()),
        "spectral" => commands::spectral::run(&mut ctx, &model, r.spectral.as_ref().unwrap()),
        "growth" => commands::growth::run(&mut ctx, &model, r.growth.as_ref().unwrap()),
        _ => commands::transport::run(&mut ctx, &model, r.transport.as_ref().unwrap()),
    })?;
    let mut head = vec![format!("qpjacobi {} {command}", env!("CARGO_PKG_VERSION")), "resolved config:".to_string()];
    head.extend(r.to_toml().lines().filter(|l| !l.is_empty()).map(|l| format!("  {l}")));
    head.extend(ctx.notes.iter().cloned());
    for a in &mut artifacts {
        let own = std::mem::take(&mut a.header);
        a.header = head.iter().cloned().chain(own).collect();
    }
    Ok(RunOutput { resolved: r, artifacts })
}

/// Writes each artifact as `<dir>/<name>.<ext>` with `stamp` as the first
/// header line, or to stdout when `dir` is `None`.
pub fn write_artifacts(artifacts: &[Artifact], dir: Option<&Path>, stamp: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![];
    for a in artifacts {
        let text = format!("# {stamp}\n{}", a.render());
        match dir {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(|e| CliError::io(d.display().to_string(), e))?;
                let path = d.join(format!("{}.{}", a.name, a.extension()));
                std::fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
                written.push(path);
            }
            None => print!("{text}"),
        }
    }
    Ok(written)
}
