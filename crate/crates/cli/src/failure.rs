use foced_core::constraints::{CheckError, ParseError};
use foced_core::ingest::IngestError;
use foced_core::snapshot::SnapshotError;
use foced_core::verifier::VerifyError;
use foced_core::SignatureError;
use thiserror::Error;

/// An operational error: exit code 2, with a short machine-readable kind.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Failure { kind: kind.into(), message: message.into() }
    }

    pub fn io(path: &str, e: std::io::Error) -> Self {
        let kind = match e.kind() {
            std::io::ErrorKind::NotFound => "NotFound",
            _ => "Io",
        };
        Failure::new(kind, format!("{path}: {e}"))
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::new(e.kind(), e.to_string())
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        Failure::new("Snapshot", e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        let kind = match e {
            ParseError::SyntaxError { .. } => "SyntaxError",
            ParseError::DuplicateConstraintName { .. } => "DuplicateConstraintName",
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<SignatureError> for Failure {
    fn from(e: SignatureError) -> Self {
        Failure::new("Signature", e.to_string())
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        Failure::new("UnknownObjectTypeInScope", e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        let kind = match &e {
            VerifyError::ZeroScope => "ZeroScope",
            VerifyError::ScopeTooLarge { .. } => "ScopeTooLarge",
            VerifyError::Check(_) => "UnknownObjectTypeInScope",
            VerifyError::UnknownAttribute { .. } => "UnknownAttribute",
            VerifyError::OpenDomain { .. } => "OpenDomain",
            VerifyError::WitnessRejected(_) => "WitnessRejected",
        };
        Failure::new(kind, e.to_string())
    }
}
