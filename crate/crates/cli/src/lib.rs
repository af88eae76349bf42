//! Library surface of the loopda command-line tool: configuration
//! parsing, manifests, delimited-text output, and the subcommand
//! implementations. The binary in main.rs is a thin argument-parsing
//! wrapper over this crate.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

/// Exit codes: parse/config problems, runtime failures, check failures.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BLOW_UP: i32 = 3;
}

use loopda_core::error::Error;

/// Map an error to the process exit code contract.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } => exit_codes::CONFIG,
        Error::InvalidArgument(msg) if msg.contains("config file") => exit_codes::CONFIG,
        Error::BlowUp { .. } => exit_codes::BLOW_UP,
        Error::WindowFailed { source, .. } => match source.as_ref() {
            Error::BlowUp { .. } => exit_codes::BLOW_UP,
            _ => exit_codes::FAILURE,
        },
        _ => exit_codes::FAILURE,
    }
}
