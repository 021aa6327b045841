use std::fmt;
use std::io::ErrorKind;

use phonostyle::Error;

/// Failure classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Other = 1,
    Usage = 2,
    MissingInput = 3,
    Schema = 4,
    Data = 5,
    Numerical = 6,
    Config = 7,
}

impl ErrorClass {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Other => "other",
            ErrorClass::Usage => "usage",
            ErrorClass::MissingInput => "missing_input",
            ErrorClass::Schema => "schema",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Config => "config",
        }
    }
}

pub const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success; every declared output written
  1  other failure (I/O while writing, internal)
  2  usage: unknown flag or bad flag value
  3  missing input file
  4  schema mismatch in an input table
  5  data contract violation (empty cohort, invalid feature table, unsupported model)
  6  numerical failure (rank deficiency, non-convergence)
  7  configuration error (config file, unknown strategy, inconsistent settings)

Errors are printed to stderr as one line:
  error: class=<name> code=<n> msg=\"...\"";

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn new(class: ErrorClass, message: impl Into<String>) -> Self {
        CliError {
            class,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Usage, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Config, message)
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        Self::new(ErrorClass::Other, format!("{context}: {e}"))
    }

    /// The single stderr line.
    pub fn line(&self) -> String {
        let msg = self.message.replace('\n', "; ").replace('"', "'");
        format!("error: class={} code={} msg=\"{}\"", self.class.name(), self.class.code(), msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let class = match &e {
            Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => ErrorClass::MissingInput,
            Error::Io { .. } => ErrorClass::Other,
            Error::Schema { .. } => ErrorClass::Schema,
            Error::Config(_) | Error::UnknownStrategy { .. } => ErrorClass::Config,
            Error::FeatureTable(_)
            | Error::Reject(_)
            | Error::EmptyCohort(_)
            | Error::Invalid(_)
            | Error::SingleLevel(_) => ErrorClass::Data,
            Error::RankDeficient(_) | Error::NonConvergence { .. } => ErrorClass::Numerical,
        };
        CliError::new(class, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
