use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CleanseError;
use crate::tabular::{cell_text, Row, Warehouse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    FilterElement,
    FilterRow,
    FilterGroup,
    Correct,
}

/// One applied action. `row` is the row's position at the moment the entry
/// is applied, so entries replay strictly in sequence; row removals within
/// one action are logged from the highest index down.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub action: Action,
    pub table: String,
    pub row: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Cell text before the change; `None` is NULL.
    #[serde(default)]
    pub old_value: Option<String>,
    #[serde(default)]
    pub new_value: Option<String>,
    /// Removed row contents, for row and group filters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_values: Option<Vec<Option<String>>>,
    pub reason: String,
    pub timestamp: DateTime<Utc>,
}

/// Append-only record of every filter and correction applied in one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleansingLog {
    run_id: String,
    timestamp: DateTime<Utc>,
    entries: Vec<LogEntry>,
}

pub(crate) fn row_text(row: &Row) -> Vec<Option<String>> {
    row.iter().map(cell_text).collect()
}

impl CleansingLog {
    pub fn new(run_id: impl Into<String>, timestamp: DateTime<Utc>) -> Self {
        CleansingLog {
            run_id: run_id.into(),
            timestamp,
            entries: Vec::new(),
        }
    }

    pub fn from_entries(
        run_id: impl Into<String>,
        timestamp: DateTime<Utc>,
        entries: Vec<LogEntry>,
    ) -> Self {
        CleansingLog {
            run_id: run_id.into(),
            timestamp,
            entries,
        }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(
        &mut self,
        action: Action,
        table: &str,
        row: usize,
        column: Option<&str>,
        old_value: Option<String>,
        new_value: Option<String>,
        row_values: Option<Vec<Option<String>>>,
        reason: impl Into<String>,
    ) {
        let seq = self.entries.len() as u64;
        self.entries.push(LogEntry {
            seq,
            action,
            table: table.to_string(),
            row,
            column: column.map(str::to_string),
            old_value,
            new_value,
            row_values,
            reason: reason.into(),
            timestamp: self.timestamp,
        });
    }

    /// Entries from `start` onwards, e.g. those added by the last action.
    pub fn since(&self, start: usize) -> &[LogEntry] {
        &self.entries[start.min(self.entries.len())..]
    }

    pub fn to_jsonl(&self) -> String {
        entries_to_jsonl(&self.entries)
    }
}

pub fn entries_to_jsonl(entries: &[LogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("log entries serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSON-lines log entries; blank lines are skipped.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<LogEntry>, CleanseError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CleanseError::Log(format!("line {}: {e}", n + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CleanseError::Log(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

/// Applies logged entries, in order, to the pre-cleansing warehouse. Each
/// entry's recorded old state must match what it finds.
pub fn replay(pre: &Warehouse, entries: &[LogEntry]) -> Result<Warehouse, CleanseError> {
    let mut w = pre.clone();
    for e in entries {
        let mismatch = |msg: String| CleanseError::ReplayMismatch {
            seq: e.seq,
            message: msg,
        };
        let schema = w
            .schema(&e.table)
            .cloned()
            .ok_or_else(|| mismatch(format!("unknown table `{}`", e.table)))?;
        let data = w
            .dataset_mut(&e.table)
            .expect("dataset exists for every schema");
        if e.row >= data.rows.len() {
            return Err(mismatch(format!(
                "row {} out of range for `{}`",
                e.row, e.table
            )));
        }
        match e.action {
            Action::FilterElement | Action::Correct => {
                let column = e
                    .column
                    .as_deref()
                    .ok_or_else(|| mismatch("entry lacks a column".into()))?;
                let i = schema
                    .column_index(column)
                    .ok_or_else(|| mismatch(format!("unknown column `{column}`")))?;
                let current = cell_text(&data.rows[e.row][i]);
                if current != e.old_value {
                    return Err(mismatch(format!(
                        "cell {}[{}].{column} is {current:?}, log expected {:?}",
                        e.table, e.row, e.old_value
                    )));
                }
                let new = if e.action == Action::FilterElement {
                    None
                } else {
                    e.new_value.as_deref()
                };
                data.rows[e.row][i] = schema.columns[i].kind.parse_cell(new).map_err(mismatch)?;
            }
            Action::FilterRow | Action::FilterGroup => {
                if let Some(expected) = &e.row_values {
                    if row_text(&data.rows[e.row]) != *expected {
                        return Err(mismatch(format!(
                            "row {}[{}] differs from the logged row",
                            e.table, e.row
                        )));
                    }
                }
                data.rows.remove(e.row);
            }
        }
    }
    Ok(w)
}
