use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracexp::config::{parse_config, OutputFormat, RunConfig, StudyKind};
use fracexp::driver::{execute, exit_code};
use fracexp::Error;

#[derive(Parser)]
#[command(name = "fracexp", version, about = "Fractional exponential integrator: simulations and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML). Defaults apply to every omitted key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo samples. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory, overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One trajectory with its noise path.
    Simulate,
    /// Strong convergence in the time step.
    ConvergeTime,
    /// Strong convergence in the mesh size.
    ConvergeSpace,
    /// Mittag-Leffler validation grid.
    CheckMl,
    /// fBm covariance and Ito isometry statistics.
    CheckNoise,
    /// Smoothing exponents and propagator bounds.
    CheckSmoothing,
    /// Mass and stiffness matrices and the spectrum.
    DumpOperator,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    Json,
    Both,
}

impl Command {
    fn kind(self) -> StudyKind {
        match self {
            Command::Simulate => StudyKind::Simulate,
            Command::ConvergeTime => StudyKind::Temporal,
            Command::ConvergeSpace => StudyKind::Spatial,
            Command::CheckMl => StudyKind::Mlcheck,
            Command::CheckNoise => StudyKind::Noisecheck,
            Command::CheckSmoothing => StudyKind::Smoothing,
            Command::DumpOperator => StudyKind::DumpOperator,
        }
    }
}

fn load(cli: &Cli) -> fracexp::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => fracexp::config::parse_config_str("")?,
    };
    cfg.study.kind = cli.command.kind();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.workers {
        if let Err(e) = rayon_pool(k) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = load(&cli).and_then(|cfg| execute(&cfg));
    match &result {
        Ok(o) => {
            print!("{}", o.summary);
            for f in &o.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Err(Error::Config(list)) => {
            eprintln!("error: invalid configuration");
            for m in list {
                eprintln!("  - {m}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}

fn rayon_pool(k: usize) -> Result<(), String> {
    if k == 0 {
        return Err("--workers must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| e.to_string())
}
