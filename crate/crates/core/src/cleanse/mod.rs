//! The cleansing pipeline: prevention at admission, audit, filtering at
//! element, row and logical-group level, and correction. Every change is
//! recorded in a [`CleansingLog`] that replays onto the pre-state.

mod admit;
mod audit;
mod correct;
pub mod expr;
mod filter;
mod log;

use thiserror::Error;

use crate::tabular::TabularError;

pub use admit::{admit, AdmissionResult, AdmittedRow, RejectedRow};
pub use audit::{
    audit, render_audit_text, AuditOptions, AuditReport, ConstraintViolations, TableAudit,
};
pub use correct::{
    correct, validate_rules, AppliesWhen, CorrectionRule, CorrectionSummary, KeyPair, Strategy,
};
pub use filter::{
    cells_violating, filter_elements, filter_groups, filter_rows, group_closure, rows_violating,
    CellTarget, RowTarget,
};
pub use log::{entries_to_jsonl, parse_jsonl, replay, Action, CleansingLog, LogEntry};

#[derive(Debug, Error)]
pub enum CleanseError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("unknown column `{table}.{column}`")]
    UnknownColumn { table: String, column: String },
    #[error("row {row} out of range for `{table}` ({rows} rows)")]
    OutOfRange {
        table: String,
        row: usize,
        rows: usize,
    },
    #[error(
        "cannot NULL `{table}.{column}` at row {row}: the column is not nullable; \
         escalate to a row filter to remove the record instead"
    )]
    NotNullable {
        table: String,
        row: usize,
        column: String,
    },
    #[error("correction rule {index}: {message}")]
    InvalidRule { index: usize, message: String },
    #[error("alternate source `{table}` has more than one row for key ({key})")]
    LookupKeyCollision { table: String, key: String },
    #[error("replay failed at log entry {seq}: {message}")]
    ReplayMismatch { seq: u64, message: String },
    #[error("cleansing log: {0}")]
    Log(String),
}
