use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cevsim::cli::{self, CliError, CliResult, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

/// Strong-error experiments for positivity-preserving CEV schemes.
#[derive(Parser)]
#[command(version, about)]
struct Opts {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the applicability table of every scheme and level.
    Validate(RunArgs),
    /// Strong errors against a fine-grid reference, plus order fits.
    Converge(RunArgs),
    /// Distances between the first scheme and each of the others.
    Distance(RunArgs),
    /// Strong errors of the asset price in the stochastic volatility model.
    Sv(RunArgs),
    /// Convert a `converge` CSV into log2 plot data.
    Plotdata {
        /// CSV written by `converge`.
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; overrides `output` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => cli::write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(opts: Opts) -> CliResult<bool> {
    match opts.command {
        Command::Validate(args) => {
            let cfg = args.load()?;
            let (table, ok) = cli::run_validate(&cfg);
            print!("{table}");
            Ok(ok)
        }
        Command::Converge(args) => {
            let cfg = args.load()?;
            let out = cli::run_converge(&cfg)?;
            match &cfg.output {
                Some(path) => {
                    cli::write_atomic(path, &out.csv)?;
                    cli::write_atomic(&cli::order_path(path), &out.order_csv)?;
                }
                None => {
                    print!("{}", out.csv);
                    print!("\n{}", out.order_csv);
                }
            }
            Ok(true)
        }
        Command::Distance(args) => {
            let cfg = args.load()?;
            emit(cfg.output.as_deref(), &cli::run_distance(&cfg)?)?;
            Ok(true)
        }
        Command::Sv(args) => {
            let cfg = args.load()?;
            emit(cfg.output.as_deref(), &cli::run_sv(&cfg)?)?;
            Ok(true)
        }
        Command::Plotdata { input, out } => {
            let text = std::fs::read_to_string(&input).map_err(|source| CliError::Io {
                path: input.clone(),
                source,
            })?;
            emit(out.as_deref(), &cli::run_plotdata(&text, &input)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Opts::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
