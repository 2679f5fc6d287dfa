//! Command-line front end: run sweeps, validate configs, run the ML oracle
//! suite.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use symgrand::sim::{
    run_ml_equivalence, run_sweep, MlEquivalenceConfig, ReportFormat, SimConfig,
};

#[derive(Parser)]
#[command(name = "symgrand", version, about = "GRAND / ORBGRAND over QAM symbols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an Eb/N0 sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output file; falls back to `out` in the config, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare exact-order symbol GRAND with exhaustive ML decoding on a
    /// small random code.
    Oracle {
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per N0 value.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn run(cli: Cli) -> symgrand::Result<()> {
    match cli.command {
        Command::Validate { config } => {
            let c = SimConfig::load(&config)?;
            c.validate()?;
            println!("{}: ok ({})", config.display(), c.code_spec()?.build()?.label());
        }
        Command::Sweep {
            config,
            seed,
            workers,
            out,
            format,
        } => {
            let mut c = SimConfig::load(&config)?;
            if let Some(seed) = seed {
                c.seed = seed;
            }
            let report = run_sweep(&c, workers)?;
            match out.or_else(|| c.out.as_ref().map(PathBuf::from)) {
                Some(path) => report.emit(format.into(), &path)?,
                None => {
                    let text = match format {
                        Format::Csv => report.to_csv_string()?,
                        Format::Json => report.to_json_string()?,
                    };
                    std::io::stdout().write_all(text.as_bytes())?;
                }
            }
        }
        Command::Oracle {
            seed,
            trials,
            out,
            format,
        } => {
            let mut c = MlEquivalenceConfig::default();
            if let Some(seed) = seed {
                c.seed = seed;
            }
            if let Some(trials) = trials {
                c.trials = trials;
            }
            let report = run_ml_equivalence(&c)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in &report.rows {
                        w.serialize(r)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
                        .expect("csv output is utf-8")
                }
            };
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            if report.mismatches_within_bound() > 0 {
                return Err(symgrand::Error::Config(format!(
                    "{} ML mismatches within the enumeration bound",
                    report.mismatches_within_bound()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
