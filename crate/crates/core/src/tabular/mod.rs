//! Warehouse tables, schemas and integrity constraints, plus the violation
//! finder and column profiler shared by every other module.

mod constraint;
pub mod io;
mod profile;
mod schema;
mod value;
mod violations;
mod warehouse;

use std::path::PathBuf;

use thiserror::Error;

pub use constraint::{CompareOp, Constraint, ConstraintRule, Operand, SidecarConstraint};
pub use io::{load_warehouse, save_warehouse};
pub use profile::{
    profile_columns, profile_columns_top, ColumnProfile, ValueFrequency, DEFAULT_TOP_K,
};
pub use schema::{ColumnSpec, Domain, TableSchema, TemporalRole};
pub use value::{cell_text, Cell, ColumnKind, Value, TIMESTAMP_FORMAT};
pub use violations::{find_violations, violating_rows, Violation};
pub use warehouse::{Dataset, Row, Warehouse};

pub(crate) use violations::{eval_check, key_of, parent_keys, CheckRhs};

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("table `{table}`: {source}")]
    Csv {
        table: String,
        #[source]
        source: csv::Error,
    },
    #[error("data file for table `{0}` has no schema sidecar")]
    MissingSchema(String),
    #[error("table `{0}` is defined more than once")]
    DuplicateTable(String),
    #[error("table `{table}`, row {row}, column `{column}`: {message}")]
    MalformedCell {
        table: String,
        row: usize,
        column: String,
        message: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
    #[error("{0}")]
    Invalid(String),
}

impl TabularError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TabularError::Invalid(msg.into())
    }
}
