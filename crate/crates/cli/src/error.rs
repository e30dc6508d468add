use std::fmt;

use pgakv_core::LlmError;

/// Failures, each with a fixed process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad or unreadable input files and settings.
    Input(String),
    /// A cassette had no entry for this request.
    ReplayMiss(Vec<String>),
    /// Anything else: transport failures, I/O on outputs.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Input(_) => 2,
            CliError::ReplayMiss(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::ReplayMiss(digests) => {
                write!(f, "cassette has no entry for request digest {}", digests.join(", "))
            }
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::ReplayMiss { digest } => CliError::ReplayMiss(vec![digest]),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
