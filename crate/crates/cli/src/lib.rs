//! File formats, result documents, the synthetic instance generator and the
//! `cmle` command-line front end for [`cmle_core`].

pub mod app;
pub mod document;
pub mod generator;
pub mod instance;



/// Error categories map one-to-one onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad flags, unreadable or malformed files, invalid parameters.
    Input,
    /// A solver failed on otherwise valid input.
    Solver,
    /// A configured combinatorial cap was exceeded.
    Budget,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input | ErrorKind::Solver => 1,
            ErrorKind::Budget => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ErrorKind::Input => "input",
            ErrorKind::Solver => "solver",
            ErrorKind::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("error[{}]: {message}", kind.tag())]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn budget(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Budget,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Prefixes the message with `what`, e.g. the file it concerns.
    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<cmle_core::Error> for CliError {
    fn from(e: cmle_core::Error) -> Self {
        use cmle_core::Error as E;
        let kind = match &e {
            _ if e.is_budget() => ErrorKind::Budget,
            E::Domain(_) | E::DimensionMismatch { .. } => ErrorKind::Input,
            _ => ErrorKind::Solver,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

