//! Command-line driver. [`run`] parses arguments, resolves the run
//! configuration, executes it and writes the outputs and a manifest.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid parameters or I/O
//! failure, 3 numerical failure (convergence, fit window, envelope),
//! 4 `reproduce` found differing outputs.

pub mod args;
pub mod config;
pub mod exec;
pub mod manifest;
pub mod resolve;

use std::ffi::OsString;

use clap::Parser;

use cbmlab_core::Error;

use args::{Cli, Command, Report};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_parameter_like() || matches!(e, Error::Io(_)) {
        EXIT_PARAMETER
    } else {
        EXIT_NUMERICAL
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Reproduce(a) => manifest::reproduce(&a.manifest, a.out.as_deref()),
        command => run_command(command).map(|()| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_command(command: &Command) -> cbmlab_core::Result<()> {
    let (config, out_dir, report) = resolve::resolve(command)?;
    let outputs = exec::execute(&config)?;
    manifest::write_run(&out_dir, &config, &outputs)?;
    if report != Some(Report::None) {
        for line in &outputs.summary {
            println!("{line}");
        }
    }
    Ok(())
}
