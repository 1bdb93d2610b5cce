use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CleanseError;
use crate::agents::incomplete_rows;
use crate::evaluator::align;
use crate::tabular::{
    find_violations, profile_columns_top, ColumnProfile, Violation, Warehouse, DEFAULT_TOP_K,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditOptions {
    /// `None` audits every constraint.
    pub constraints: Option<Vec<String>>,
    pub top_k: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            constraints: None,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolations {
    pub constraint_id: String,
    pub table: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableAudit {
    pub table: String,
    pub rows: usize,
    pub incomplete_rows: usize,
    pub profiles: Vec<ColumnProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub timestamp: DateTime<Utc>,
    pub total_violations: usize,
    /// One entry per audited constraint, in constraint-id order.
    pub constraints: Vec<ConstraintViolations>,
    pub tables: Vec<TableAudit>,
}

impl AuditReport {
    /// Every violation, in `find_violations` order.
    pub fn all_violations(&self) -> Vec<Violation> {
        let mut all: Vec<Violation> = self
            .constraints
            .iter()
            .flat_map(|c| c.violations.clone())
            .collect();
        all.sort_by(|a, b| {
            (&a.table, a.row_index, &a.constraint_id).cmp(&(
                &b.table,
                b.row_index,
                &b.constraint_id,
            ))
        });
        all
    }
}

/// Tests the data against its integrity constraints and profiles every
/// column. Nothing is modified.
pub fn audit(
    warehouse: &Warehouse,
    options: &AuditOptions,
    timestamp: DateTime<Utc>,
) -> Result<AuditReport, CleanseError> {
    let ids = options
        .constraints
        .clone()
        .unwrap_or_else(|| warehouse.constraint_ids());
    let violations = find_violations(warehouse, Some(&ids))?;
    let mut selected = warehouse.select_constraints(&ids)?;
    selected.sort_by(|a, b| a.id.cmp(&b.id));
    selected.dedup_by(|a, b| a.id == b.id);
    let constraints = selected
        .into_iter()
        .map(|c| ConstraintViolations {
            constraint_id: c.id.clone(),
            table: c.table.clone(),
            violations: violations
                .iter()
                .filter(|v| v.constraint_id == c.id)
                .cloned()
                .collect(),
        })
        .collect();
    let tables = warehouse
        .table_names()
        .map(|t| {
            let (schema, data) = warehouse.table(t)?;
            Ok(TableAudit {
                table: t.to_string(),
                rows: data.len(),
                incomplete_rows: incomplete_rows(data, schema).len(),
                profiles: profile_columns_top(data, schema, options.top_k),
            })
        })
        .collect::<Result<Vec<_>, CleanseError>>()?;
    Ok(AuditReport {
        timestamp,
        total_violations: violations.len(),
        constraints,
        tables,
    })
}

pub fn render_audit_text(report: &AuditReport) -> String {
    let mut out = format!("audit: {} violation(s)\n\n", report.total_violations);
    let mut rows = vec![vec![
        "CONSTRAINT".to_string(),
        "TABLE".into(),
        "VIOLATIONS".into(),
    ]];
    for c in &report.constraints {
        rows.push(vec![
            c.constraint_id.clone(),
            c.table.clone(),
            c.violations.len().to_string(),
        ]);
    }
    out.push_str(&align(&rows));
    let all = report.all_violations();
    if !all.is_empty() {
        out.push('\n');
        let mut rows = vec![vec![
            "TABLE".to_string(),
            "ROW".into(),
            "CONSTRAINT".into(),
            "DETAIL".into(),
        ]];
        for v in &all {
            rows.push(vec![
                v.table.clone(),
                v.row_index.to_string(),
                v.constraint_id.clone(),
                v.detail.clone(),
            ]);
        }
        out.push_str(&align(&rows));
    }
    for t in &report.tables {
        out.push_str(&format!(
            "\n{} ({} rows, {} incomplete)\n",
            t.table, t.rows, t.incomplete_rows
        ));
        let mut rows = vec![vec![
            "COLUMN".to_string(),
            "NULLS".into(),
            "DISTINCT".into(),
            "MIN".into(),
            "MAX".into(),
            "TOP".into(),
        ]];
        for p in &t.profiles {
            let top = p
                .top_values
                .iter()
                .map(|f| format!("{}x{}", f.value, f.count))
                .collect::<Vec<_>>()
                .join(" ");
            rows.push(vec![
                p.column.clone(),
                p.null_count.to_string(),
                p.distinct_count.to_string(),
                p.min.clone().unwrap_or_else(|| "-".into()),
                p.max.clone().unwrap_or_else(|| "-".into()),
                top,
            ]);
        }
        out.push_str(&align(&rows));
    }
    out
}
