//! Command-line front end: geometry files in, JSON reports out.
//!
//! Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on
//! an input error (unreadable or malformed geometry file, orders too low
//! for the requested depth, invalid flags).

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

use clap::Parser;

pub use commands::{execute, Cli};
pub use error::{CliError, ParseError};
pub use report::Report;
pub use spec::GeometrySpec;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_VERDICT_FAILURE: i32 = 2;

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Diagnostics go to standard error.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_VERDICT_FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}
