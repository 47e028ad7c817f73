//! XES and OCEL 1.0 ingestion into an [`OcedStore`], and the matching
//! emitters used for round-trip checks.
//!
//! XES traces become objects of type [`CASE_TYPE`]; each event observes its
//! enclosing case. `lifecycle:transition` is stored as the `lifecycle`
//! attribute, and `activity` resolves to the event type (see
//! [`OcedEvent::attr`](crate::store::OcedEvent::attr)).

mod ocel;
mod xes;

use serde::Serialize;
use thiserror::Error;

use crate::store::StoreError;

pub use ocel::{emit_ocel, parse_ocel};
pub use xes::{emit_xes, parse_xes};

/// Object type given to XES traces.
pub const CASE_TYPE: &str = "case";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Fail on the first incomplete or inconsistent record.
    #[default]
    Strict,
    /// Skip bad records and list them in the report.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SourceFormat {
    Xes,
    Ocel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRecord {
    pub location: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub source_format: SourceFormat,
    pub cases_read: usize,
    pub events_read: usize,
    pub objects_created: usize,
    pub skipped_records: Vec<SkippedRecord>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    fn new(source_format: SourceFormat) -> Self {
        IngestReport {
            source_format,
            cases_read: 0,
            events_read: 0,
            objects_created: 0,
            skipped_records: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn skip(&mut self, location: impl Into<String>, reason: impl Into<String>) {
        self.skipped_records.push(SkippedRecord { location: location.into(), reason: reason.into() });
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed XML at {location}: {message}")]
    MalformedXml { location: String, message: String },
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing required attribute `{which}` at {location}")]
    MissingRequiredAttribute { which: String, location: String },
    #[error("invalid value for `{key}` at {location}: {message}")]
    InvalidValue { key: String, location: String, message: String },
    #[error("unexpected structure at {location}: {message}")]
    Structure { location: String, message: String },
    #[error("{location}: {source}")]
    Store { location: String, source: StoreError },
    #[error("declared schema rejected {count} record(s), first: {first}")]
    SchemaViolations { count: usize, first: String },
    #[error("store is not case-shaped: {0}")]
    NotCaseShaped(String),
    #[error("store cannot be written in this format: {0}")]
    Unrepresentable(String),
}

impl IngestError {
    /// Short machine-readable kind, used in CLI reports.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::Io(_) => "Io",
            IngestError::MalformedXml { .. } => "MalformedXml",
            IngestError::MalformedJson(_) => "MalformedJson",
            IngestError::MissingRequiredAttribute { .. } => "MissingRequiredAttribute",
            IngestError::InvalidValue { .. } => "InvalidValue",
            IngestError::Structure { .. } => "Structure",
            IngestError::Store { source: StoreError::DanglingObjectRef(_), .. } => "DanglingObjectRef",
            IngestError::Store { .. } => "Store",
            IngestError::SchemaViolations { .. } => "SchemaViolations",
            IngestError::NotCaseShaped(_) => "NotCaseShaped",
            IngestError::Unrepresentable(_) => "Unrepresentable",
        }
    }
}
