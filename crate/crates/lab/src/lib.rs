//! Command-line experiments over `fredholm-core` and the acceptance suite.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod error;
pub mod oracle;
pub mod record;
pub mod sweep;

use std::io::Write;
use std::time::Instant;

use args::{Cli, Command};
use error::{LabError, LabResult};

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Coeffs => "coeffs",
        Command::Kernel => "kernel",
        Command::Spectrum => "spectrum",
        Command::Det => "det",
        Command::Trace => "trace",
        Command::Prop1 => "prop1",
        Command::Growth => "growth",
        Command::Lemma3 => "lemma3",
        Command::Conjecture => "conjecture",
        Command::Mc => "mc",
        Command::Twlimit => "twlimit",
        Command::Accept => "accept",
    }
}

fn init_threads(threads: Option<i64>) -> LabResult<()> {
    let Some(n) = threads else { return Ok(()) };
    let n = usize::try_from(n)
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| LabError::Usage(format!("--threads must be positive, got {n}")))?;
    // A second initialization in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one parsed invocation and writes its record. Returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    match execute_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute_inner(cli: &Cli) -> LabResult<i32> {
    init_threads(cli.flags.threads)?;
    let start = Instant::now();
    let outcome = commands::run(cli.command, &cli.flags)?;
    let seed = match cli.command {
        Command::Mc | Command::Conjecture => outcome.params.get("seed").and_then(|s| s.as_u64()),
        _ => None,
    };
    let bytes = record::render(&outcome, command_name(cli.command), seed, start.elapsed().as_millis(), cli.flags.format)?;
    match &cli.flags.out {
        Some(path) => record::write_atomic(path, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(match outcome.violation {
        Some(v) => {
            let e = LabError::Violation(v);
            eprintln!("{e}");
            e.exit_code()
        }
        None => 0,
    })
}
