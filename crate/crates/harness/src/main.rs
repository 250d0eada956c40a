use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anharmonic_harness::{emit, run, ExperimentConfig, ExperimentKind, HarnessError, OutputFormat};

#[derive(Parser)]
#[command(name = "anharmonic", version, about = "Noisy anharmonic chain: fluctuation experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value file with one [section] per experiment
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads, 0 for all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    Equilibrium,
    Hydro,
    Simulate,
    Theorem1,
    Theorem2,
    Theorem3,
    SpectralSuite,
    IdentitySuite,
    ChaosSuite,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Equilibrium => ExperimentKind::Equilibrium,
            Self::Hydro => ExperimentKind::Hydro,
            Self::Simulate => ExperimentKind::Simulate,
            Self::Theorem1 => ExperimentKind::Theorem1,
            Self::Theorem2 => ExperimentKind::Theorem2,
            Self::Theorem3 => ExperimentKind::Theorem3,
            Self::SpectralSuite => ExperimentKind::SpectralSuite,
            Self::IdentitySuite => ExperimentKind::IdentitySuite,
            Self::ChaosSuite => ExperimentKind::ChaosSuite,
        }
    }
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let kind = cli.command.kind();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(kind, p)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &cli.format {
        cfg.format = f.parse::<OutputFormat>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match configure(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match emit(&report, &cfg.out, cfg.format) {
        Ok(path) => eprintln!("wrote {}", path.display()),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
