//! Experiment runner for the two-membrane model: parameter sweeps, figure data,
//! synthetic homodyne samples and disorder estimation.

pub mod estimate;
pub mod figures;
pub mod samples;
pub mod sweep;
pub mod table;

use optomech::Error;

/// Process exit code for an error: 2 configuration, 3 physics, 4 input.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Param { .. } => 2,
        Error::Input(_) => 4,
        _ => 3,
    }
}

/// Version string recorded in every manifest.
pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub(crate) fn io_error(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}
