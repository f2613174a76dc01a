use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mde_cli::config::DistanceSettings;
use mde_cli::{parse_config, run, CliError, Mode, RunConfig};

/// Simulate measure differential equations and compare them with reference
/// solutions.
#[derive(Parser, Debug)]
#[command(author, version, about, long_about = None)]
struct Cli {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run mode, overriding the config
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for randomized checks, overriding the config
    #[arg(long)]
    seed: Option<u64>,

    /// First snapshot for `distance`
    #[arg(long)]
    a: Option<PathBuf>,

    /// Second snapshot for `distance`
    #[arg(long)]
    b: Option<PathBuf>,

    /// Also write the optimal plan in `distance` mode
    #[arg(long)]
    plan: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => parse_config("{}")?,
    };
    if let Some(mode) = cli.mode {
        config.mode = Some(mode);
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.a.is_some() || cli.b.is_some() || cli.plan {
        let distance = config.distance.get_or_insert(DistanceSettings {
            a: None,
            b: None,
            plan: false,
        });
        if cli.a.is_some() {
            distance.a = cli.a.clone();
        }
        if cli.b.is_some() {
            distance.b = cli.b.clone();
        }
        distance.plan |= cli.plan;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match load(&cli).and_then(|config| run(&config)) {
        Ok(report) => {
            for file in &report.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
