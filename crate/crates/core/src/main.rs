use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use penlab::cli::{exit, run, Command, ExperimentConfig, OutputFormat};
use penlab::brownian::kernel_warning;
use penlab::penalize::LocalTimeChoice;
use penlab::Error;

#[derive(Parser)]
#[command(name = "penlab", version, about = "Brownian penalization by local-time functionals: simulation and checks")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured report path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Penalized expectations against I(F) along the horizons.
    Converge,
    /// Both sides of the cutoff identity and the √3 bound.
    Identity,
    /// Mean and increments of the closed-form density process.
    Martingale,
    /// Monte Carlo limit density on random prefixes.
    LimitDensity,
    /// Weighted measures at finite t against the limit.
    CompareMeasures,
    /// Error terms of the cutoff approximation.
    ErrorTerms,
    /// Residuals of the squared Bessel density identities.
    Densities,
    /// Survival of the window ratio statistics.
    Tails,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Json,
    Csv,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Converge => Command::Converge,
            Cmd::Identity => Command::Identity,
            Cmd::Martingale => Command::Martingale,
            Cmd::LimitDensity => Command::LimitDensity,
            Cmd::CompareMeasures => Command::CompareMeasures,
            Cmd::ErrorTerms => Command::ErrorTerms,
            Cmd::Densities => Command::Densities,
            Cmd::Tails => Command::Tails,
        }
    }
}

fn load(args: &Args) -> Result<ExperimentConfig, String> {
    let path = args.config.as_ref().ok_or("--config is required")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut text_cfg: toml::Table = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(seed) = args.seed {
        let seed = i64::try_from(seed).map_err(|_| "seed overrides above 2^63 must go in the config file")?;
        text_cfg.insert("seed".into(), toml::Value::Integer(seed));
    }
    let mut cfg = ExperimentConfig::parse(&text_cfg.to_string()).map_err(|e| e.to_string())?;
    if let Some(out) = &args.out {
        cfg.output = out.to_string_lossy().into_owned();
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    if let Some(n) = args.workers {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("config error: invalid worker count {n}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    }
    let command = Command::from(args.command);
    if let (LocalTimeChoice::Kernel, Some(eps)) = (cfg.local_time, cfg.bandwidth_y) {
        let t = cfg.horizons_t.iter().copied().fold(0.0f64, f64::max);
        if let Some(w) = kernel_warning(cfg.time_step_ratio * t, eps) {
            eprintln!("warning: {w}");
        }
    }
    let outcome = match run(command, &cfg) {
        Ok(o) => o,
        Err(e @ Error::Degenerate(_)) => {
            eprintln!("{command}: {e}");
            return ExitCode::from(exit::DEGENERATE as u8);
        }
        Err(e @ (Error::InvalidParameter { .. } | Error::UnsupportedDimension(_) | Error::Grid(_))) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
        Err(e) => {
            eprintln!("{command}: {e}");
            return ExitCode::from(exit::RUNTIME as u8);
        }
    };
    match outcome.write(std::path::Path::new(&cfg.output), cfg.format) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", cfg.output);
            return ExitCode::from(exit::RUNTIME as u8);
        }
    }
    println!("{command}: {:?}", outcome.report.verdict);
    ExitCode::from(outcome.exit_code() as u8)
}
