//! Object-centric event data: a validated store, XES/OCEL ingestion,
//! finite-trace constraint checking, a bounded instance finder, and
//! property-graph projection with Cypher/CSV export.

pub mod constraints;
pub mod graph;
pub mod ingest;
pub mod signature;
pub mod snapshot;
pub mod store;
pub mod value;
pub mod verifier;

pub use signature::{Domain, Signature, SignatureError};
pub use store::{Attrs, OcedEvent, OcedObject, OcedStore, Relation, SchemaViolation, StoreError};
pub use value::{TimeMode, Timestamp, Value};
