use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirint::Exponent;
use dirint_cli::report::{write_csv, write_json, Row};
use dirint_cli::run::{exit_code, phi_audit_rows, run, sweep, Options};
use dirint_cli::{scenario, CliError};

/// Boundedness checks for operators between L^p direct integrals.
#[derive(Debug, Parser)]
#[command(name = "dirint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every check listed in a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sandwich report over a grid of (p, q); p < q gives rejected rows.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<Exponent>,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<Exponent>,
        /// Kernel name; needed when the scenario defines several.
        #[arg(long)]
        kernel: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Additivity, monotonicity and derivative audit of Φ.
    PhiAudit {
        scenario: PathBuf,
        #[arg(long, env = "DIRINT_PARTITIONS")]
        partitions: Option<usize>,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long, requires = "q")]
        p: Option<Exponent>,
        #[arg(long, requires = "p")]
        q: Option<Exponent>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Overrides the seed of every check.
    #[arg(long, env = "DIRINT_SEED")]
    seed: Option<u64>,
    /// Oracle sample count (default 1000).
    #[arg(long, env = "DIRINT_SAMPLES")]
    samples: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long, env = "DIRINT_OUT")]
    out: Option<PathBuf>,
    /// Relative tolerance of the equality flag.
    #[arg(long, env = "DIRINT_TOLERANCE")]
    tolerance: Option<f64>,
    /// Fill the wall_ms column.
    #[arg(long, env = "DIRINT_TIMING")]
    timing: bool,
    #[arg(long, value_enum, default_value = "csv", env = "DIRINT_FORMAT")]
    format: Format,
}

impl Common {
    fn options(&self, partitions: Option<usize>) -> Options {
        Options {
            seed: self.seed,
            samples: self.samples,
            tolerance: self.tolerance,
            partitions,
            timing: self.timing,
        }
    }
}

fn emit(rows: &[Row], common: &Common) -> Result<(), CliError> {
    let write = |w: &mut dyn Write| match common.format {
        Format::Csv => write_csv(rows, w),
        Format::Json => write_json(rows, w),
    };
    match &common.out {
        Some(path) => {
            let io_err = |e| CliError::Io { path: path.display().to_string(), source: e };
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            write(&mut w)?;
            w.flush().map_err(io_err)
        }
        None => write(&mut io::stdout().lock()),
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    let load = |p: &Path| scenario::load(p);
    let (rows, common) = match command {
        Command::Run { scenario, common } => {
            let sc = load(&scenario)?;
            (run(&sc, &common.options(None))?, common)
        }
        Command::Sweep { scenario, p, q, kernel, common } => {
            let sc = load(&scenario)?;
            (sweep(&sc, kernel.as_deref(), &p, &q, &common.options(None))?, common)
        }
        Command::PhiAudit { scenario, partitions, kernel, p, q, common } => {
            let sc = load(&scenario)?;
            let pq = p.zip(q);
            (phi_audit_rows(&sc, kernel.as_deref(), pq, &common.options(partitions))?, common)
        }
    };
    emit(&rows, &common)?;
    Ok(exit_code(&rows))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for failed checks.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let mut message = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !message.contains(&text) {
                    message = format!("{message}\n  caused by: {text}");
                }
                source = s.source();
            }
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
