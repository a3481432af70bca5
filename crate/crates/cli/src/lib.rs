//! Command-line front end for the viscowave experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::Config;
pub use error::CliError;
pub use table::ResultTable;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "VISCOWAVE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "viscowave", version, about = "Spectral experiments for viscoelastic wave models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Io {
    /// Config file (`key=value`, optional `[subcommand]` sections)
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic roots over the frequency grid
    Roots(Io),
    /// Cosine and sine kernel norms over the time grid
    Kernels(Io),
    /// Decay rates of the solution and its time derivative
    Decay(Io),
    /// Error of the diffusion-wave profile approximation
    Profile(Io),
    /// Two-sided rate bounds for the solution norm
    Optimality(Io),
    /// Pointwise kernel envelopes per frequency zone
    Envelope(Io),
    /// Energy of the difference between the two models against tau
    SingularLimitEnergy(Io),
    /// L2 norm of the difference between the two models against tau
    SingularLimitSolution(Io),
    /// Kernel solutions against direct time integration on random modes
    OracleCheck(Io),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Roots(_) => "roots",
            Command::Kernels(_) => "kernels",
            Command::Decay(_) => "decay",
            Command::Profile(_) => "profile",
            Command::Optimality(_) => "optimality",
            Command::Envelope(_) => "envelope",
            Command::SingularLimitEnergy(_) => "singular-limit-energy",
            Command::SingularLimitSolution(_) => "singular-limit-solution",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    fn io(&self) -> &Io {
        match self {
            Command::Roots(io)
            | Command::Kernels(io)
            | Command::Decay(io)
            | Command::Profile(io)
            | Command::Optimality(io)
            | Command::Envelope(io)
            | Command::SingularLimitEnergy(io)
            | Command::SingularLimitSolution(io)
            | Command::OracleCheck(io) => io,
        }
    }
}

fn dispatch(cmd: &Command, conf: &Config) -> Result<Outcome, CliError> {
    let cfg = conf.experiment()?;
    match cmd {
        Command::Roots(_) => commands::roots(conf, &cfg),
        Command::Kernels(_) => commands::kernels(&cfg),
        Command::Decay(_) => commands::decay(&cfg),
        Command::Profile(_) => commands::profile(&cfg),
        Command::Optimality(_) => commands::optimality(&cfg),
        Command::Envelope(_) => commands::envelope(&cfg),
        Command::SingularLimitEnergy(_) => commands::singular_energy(&cfg),
        Command::SingularLimitSolution(_) => commands::singular_solution(&cfg),
        Command::OracleCheck(_) => commands::oracle_check(conf),
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Invalid(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))),
        },
    }
}

fn execute(cmd: &Command) -> Result<bool, CliError> {
    let io = cmd.io();
    let conf = Config::load(&io.config, cmd.name())?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    let mut outcome = pool.install(|| dispatch(cmd, &conf))?;

    let table = &mut outcome.table;
    table.meta("command", cmd.name());
    table.meta("version", env!("CARGO_PKG_VERSION"));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    table.meta(table::TIMESTAMP_KEY, stamp);
    for (k, v) in conf.pairs() {
        table.meta(format!("config.{k}"), v);
    }
    match &io.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            })?;
            let mut w = std::io::BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush().map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            })?;
        }
        None => table.write_csv(std::io::stdout().lock())?,
    }
    for note in &outcome.notes {
        eprintln!("note: {note}");
    }
    for c in &outcome.checks {
        eprintln!("{}", c.line());
    }
    Ok(outcome.checks.iter().all(|c| c.pass))
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 when every check passes, 1 on a failed check or numerical error,
/// 2 on a usage or config error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
