use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use evsampler_cli::config::COMMANDS;
use evsampler_cli::{execute, parse_config, CliError, Command, THREADS_ENV};

#[derive(Parser, Debug)]
#[command(name = "evsampler", version, about = "Run expectation value sampler experiments")]
struct Args {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// fit, sample, w1, analyze-rank, analyze-fourier or check; overrides
    /// `command` in the config.
    #[arg(long)]
    command: Option<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            CliError::Validation(vec![format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            )])
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn run(args: Args) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.override_seed(seed);
    }
    let command = match args.command.as_deref() {
        Some(name) => Command::parse(name).ok_or_else(|| {
            CliError::Validation(vec![format!(
                "--command: unknown command {name:?} (allowed: {})",
                COMMANDS.join(", ")
            )])
        })?,
        None => cfg.command.ok_or_else(|| {
            CliError::Validation(vec![format!(
                "no command given: pass --command or set `command` (allowed: {})",
                COMMANDS.join(", ")
            )])
        })?,
    };
    let out = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    for path in execute(&cfg, command, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
