use std::fmt::Display;
use std::process::ExitCode;

use csigan_core::Error;

/// Process exit statuses. Argument errors reported by clap itself also
/// exit with 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad flags, unreadable or invalid configuration.
    Usage = 2,
    /// Missing, corrupt or inconsistent data files.
    Data = 3,
    /// Training hit a non-finite loss.
    Numerical = 4,
    /// A split produced an empty training set. Outputs are still written.
    EmptyTrain = 5,
}

impl ExitKind {
    pub fn code(self) -> ExitCode {
        ExitCode::from(self as u8)
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        Failure { kind, error: error.into() }
    }

    pub fn usage(msg: impl Display) -> Self {
        Failure::new(ExitKind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl Display) -> Self {
        Failure::new(ExitKind::Data, anyhow::anyhow!("{msg}"))
    }
}

pub fn classify(e: &Error) -> ExitKind {
    match e {
        Error::Config(_) | Error::SplitSpec(_) | Error::Geometry(_) | Error::BadEdges => ExitKind::Usage,
        Error::NanLoss { .. } => ExitKind::Numerical,
        _ => ExitKind::Data,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = classify(&e);
        let diagnostic = match &e {
            Error::Format(f) => Some(FormatDiagnostic { code: f.code(), message: f.to_string() }),
            _ => None,
        };
        let error = match diagnostic {
            Some(d) => anyhow::Error::new(d),
            None => anyhow::Error::new(e),
        };
        Failure { kind, error }
    }
}

/// A format error rendered with its stable numeric code.
#[derive(Debug)]
pub struct FormatDiagnostic {
    pub code: u8,
    pub message: String,
}

impl Display for FormatDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "format error {}: {}", self.code, self.message)
    }
}

impl std::error::Error for FormatDiagnostic {}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Attaches an exit class and a context line to foreign errors.
pub trait OrFail<T> {
    fn or_usage(self, context: impl Display) -> CmdResult<T>;
    fn or_data(self, context: impl Display) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn or_usage(self, context: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::new(ExitKind::Usage, e.into().context(context.to_string())))
    }

    fn or_data(self, context: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::new(ExitKind::Data, e.into().context(context.to_string())))
    }
}

/// Core errors keep their own classification; the context is prepended.
pub trait CoreContext<T> {
    fn within(self, context: impl Display) -> CmdResult<T>;
}

impl<T> CoreContext<T> for csigan_core::Result<T> {
    fn within(self, context: impl Display) -> CmdResult<T> {
        self.map_err(|e| {
            let mut f = Failure::from(e);
            f.error = f.error.context(context.to_string());
            f
        })
    }
}
