use std::process::ExitCode;

use cavity_kinetics::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("runtime guard: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        Self::Config {
            path: if path.is_empty() {
                "<root>".into()
            } else {
                path
            },
            message: message.into(),
        }
    }

    /// Integrator and enumeration guards are runtime failures; every other
    /// library error traces back to a configured value.
    pub fn from_core(path: &str, e: CoreError) -> Self {
        match e {
            CoreError::StepTooLarge { .. }
            | CoreError::TooManyModes { .. }
            | CoreError::NegativeOccupation { .. } => Self::Runtime(format!("{path}: {e}")),
            other => Self::config(path, other.to_string()),
        }
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        Self::Runtime(format!("{what}: {e}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Config { .. } => ExitCode::from(2),
            Self::Runtime(_) => ExitCode::from(3),
        }
    }
}
