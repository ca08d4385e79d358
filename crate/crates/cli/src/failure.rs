use std::fmt;
use std::path::Path;

use novelty_core::Error;
use serde::Serialize;

/// Exit code for bad flags, bad config and missing or malformed inputs.
pub const EXIT_INVALID: i32 = 2;
/// Exit code for failures inside a computation.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            kind: "invalid_input",
            message: message.into(),
        }
    }

    pub fn missing(what: &str, path: &Path) -> Self {
        Self {
            code: EXIT_INVALID,
            kind: "missing_input",
            message: format!("{what} not found: {}", path.display()),
        }
    }

    pub fn unset(flag: &str) -> Self {
        Self {
            code: EXIT_INVALID,
            kind: "missing_input",
            message: format!("--{flag} is required (or set it in the config file)"),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind: "io",
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn parse(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INVALID,
            kind: "parse",
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn context(mut self, prefix: impl fmt::Display) -> Self {
        self.message = format!("{prefix}: {}", self.message);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "kind": self.kind, "message": self.message } })
            .to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let (code, kind) = match &err {
            Error::InvalidParameter { .. } => (EXIT_INVALID, "invalid_parameter"),
            Error::ShapeMismatch { .. } => (EXIT_INVALID, "shape_mismatch"),
            Error::InsufficientData(_) => (EXIT_INVALID, "insufficient_data"),
            Error::DuplicateId(_) => (EXIT_INVALID, "duplicate_id"),
            Error::SingleClass => (EXIT_INVALID, "single_class"),
            Error::Json(_) => (EXIT_INVALID, "parse"),
            Error::Degenerate(_) => (EXIT_RUNTIME, "degenerate"),
            Error::NonFinite(_) => (EXIT_RUNTIME, "non_finite"),
            Error::Io(_) => (EXIT_RUNTIME, "io"),
        };
        Self {
            code,
            kind,
            message: err.to_string(),
        }
    }
}
