//! Outcome bookkeeping shared by the subcommands.

use paraxial::Error;

/// Result of a completed experiment.
#[derive(Debug)]
pub enum Outcome {
    Success,
    /// One message per failed scientific check.
    Failed(Vec<String>),
}

impl Outcome {
    pub fn from_failures(failures: Vec<String>) -> Self {
        if failures.is_empty() {
            Outcome::Success
        } else {
            Outcome::Failed(failures)
        }
    }
}

/// Exit status for an error: 2 for configuration and usage problems, 1
/// for failures of the computation itself.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Size(_) | Error::Unsupported(_) | Error::Io(_) | Error::Serde(_) => 2,
        _ => 1,
    }
}

/// Print a warning and return it as a failure when `strict` is set.
pub fn warn(strict: bool, failures: &mut Vec<String>, message: String) {
    eprintln!("warning: {message}");
    if strict {
        failures.push(message);
    }
}

pub fn f(x: f64) -> String {
    paraxial::io::fmt_f64(x)
}

/// Join vector components with `;` for a single CSV field.
pub fn vec_field(v: &[f64]) -> String {
    v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(";")
}
