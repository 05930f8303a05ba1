//! Data ingestion, configuration, and report emission.
//!
//! Input files are UTF-8, comma-delimited CSV with a required header row;
//! configuration is one JSON document; reports are JSON plus CSV tables.

pub mod config;
pub mod reports;
pub mod responses;
pub mod tuples;

pub use config::{GridConfig, RunConfig};
pub use reports::{
    build_audit_report, emit_reports, write_audit_report, write_grid_outputs,
    write_preference_reports, AttributeAudit, AuditReport, CellSummary, GridReport, InitDiagnostic,
    NamedWeights, PreferenceReport, RunOutputs, TupleProfile,
};
pub use responses::{load_responses, write_responses, LoadedResponses, Question, RESPONSE_HEADERS};
pub use tuples::{load_tuples, write_tuples, TUPLE_HEADERS};
