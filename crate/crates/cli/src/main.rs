use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::Config;
use output::RunDir;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Tournament routing experiments on random geometric quantum networks.
#[derive(Debug, Parser)]
#[command(name = "troute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parent directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Scale windows and ensemble sizes down ten-fold.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Throughput versus bias, simulated and analytic.
    SweepGamma,
    /// Numerical and analytic optimal bias per request load.
    OptimalGamma,
    /// Analytic optimal bias over attenuation and swap success.
    Heatmap,
    /// Throughput versus source-destination separation.
    Distance,
    /// Throughput with several concurrent pairs.
    Multipair,
    /// Jain fairness of per-path service.
    Fairness,
    /// Best throughput against the load-dependent upper bound.
    Bounds,
    /// Ranked hop-count profile over a topology ensemble.
    Hopfit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SweepGamma => "sweep-gamma",
            Command::OptimalGamma => "optimal-gamma",
            Command::Heatmap => "heatmap",
            Command::Distance => "distance",
            Command::Multipair => "multipair",
            Command::Fairness => "fairness",
            Command::Bounds => "bounds",
            Command::Hopfit => "hopfit",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, config::ConfigError> {
    let Some(path) = &cli.config else {
        return Err(config::ConfigError::Invalid("--config <path> is required".into()));
    };
    let mut config = Config::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.quick {
        config = config.quick();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli, config: &Config) -> anyhow::Result<PathBuf> {
    let started = Instant::now();
    let name = cli.command.name();
    let mut out = RunDir::create(&cli.out, name, config.seed)?;
    if let Ok(text) = config.to_toml() {
        out.write_text("config.toml", &text)?;
    }
    match cli.command {
        Command::SweepGamma => commands::sweep_gamma(config, &mut out)?,
        Command::OptimalGamma => commands::optimal_gamma(config, &mut out)?,
        Command::Heatmap => commands::heatmap(config, &mut out)?,
        Command::Distance => commands::distance(config, &mut out)?,
        Command::Multipair => commands::multipair(config, &mut out)?,
        Command::Fairness => commands::fairness(config, &mut out)?,
        Command::Bounds => commands::bounds(config, &mut out)?,
        Command::Hopfit => commands::hopfit(config, &mut out)?,
    }
    out.finish(name, config, cli.quick, started.elapsed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli, &config) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
