use serde::{Serialize, Serializer};

use super::log::row_text;
use super::CleanseError;
use crate::tabular::{
    eval_check, key_of, parent_keys, CheckRhs, ConstraintRule, Dataset, Row, TableSchema, Warehouse,
};

fn ser_row<S: Serializer>(row: &Row, s: S) -> Result<S::Ok, S::Error> {
    row_text(row).serialize(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmittedRow {
    pub batch_index: usize,
    #[serde(serialize_with = "ser_row")]
    pub row: Row,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub batch_index: usize,
    #[serde(serialize_with = "ser_row")]
    pub row: Row,
    /// Constraint ids, or `nullable(col)` / `domain(col)` for column rules.
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissionResult {
    pub table: String,
    pub accepted: Vec<AdmittedRow>,
    pub rejected: Vec<RejectedRow>,
}

impl AdmissionResult {
    pub fn accepted_rows(&self) -> Vec<Row> {
        self.accepted.iter().map(|a| a.row.clone()).collect()
    }
}

/// Screens a batch before it enters `table`.
///
/// Each row is checked on its own: column nullability and domains, the
/// table's not-null, domain and check constraints, and its foreign keys
/// against rows already in the warehouse. Rows in the same batch never
/// satisfy each other's foreign keys, so parents must be admitted first.
pub fn admit(
    warehouse: &Warehouse,
    table: &str,
    batch: Vec<Row>,
) -> Result<AdmissionResult, CleanseError> {
    let (schema, _) = warehouse.table(table)?;
    Dataset::new(table, batch.clone()).check(schema)?;

    let mut checks: Vec<(String, RowCheck)> = Vec::new();
    for (i, col) in schema.columns.iter().enumerate() {
        if !col.nullable {
            checks.push((format!("nullable({})", col.name), RowCheck::NotNull(i)));
        }
        if col.domain.is_some() {
            checks.push((format!("domain({})", col.name), RowCheck::Domain(i)));
        }
    }
    for c in warehouse.constraints_on(table) {
        let check = match &c.rule {
            ConstraintRule::NotNull { column } => RowCheck::NotNull(idx(schema, column)?),
            ConstraintRule::Domain { column } => RowCheck::Domain(idx(schema, column)?),
            ConstraintRule::Check { column, op, right } => {
                let left = idx(schema, column)?;
                RowCheck::Check(left, *op, CheckRhs::resolve(schema, left, right)?)
            }
            ConstraintRule::Referential {
                columns,
                parent_table,
                parent_columns,
            } => RowCheck::Reference(
                columns
                    .iter()
                    .map(|c| idx(schema, c))
                    .collect::<Result<_, _>>()?,
                parent_keys(warehouse, parent_table, parent_columns)?,
            ),
            ConstraintRule::Unique { .. } => continue,
        };
        checks.push((c.id.clone(), check));
    }

    let mut result = AdmissionResult {
        table: table.to_string(),
        accepted: Vec::new(),
        rejected: Vec::new(),
    };
    for (batch_index, row) in batch.into_iter().enumerate() {
        let mut reasons: Vec<String> = Vec::new();
        for (name, check) in &checks {
            if !check.passes(schema, &row) && !reasons.contains(name) {
                reasons.push(name.clone());
            }
        }
        if reasons.is_empty() {
            result.accepted.push(AdmittedRow { batch_index, row });
        } else {
            result.rejected.push(RejectedRow {
                batch_index,
                row,
                reasons,
            });
        }
    }
    Ok(result)
}

fn idx(schema: &TableSchema, column: &str) -> Result<usize, CleanseError> {
    schema
        .column_index(column)
        .ok_or_else(|| CleanseError::UnknownColumn {
            table: schema.name.clone(),
            column: column.to_string(),
        })
}

enum RowCheck {
    NotNull(usize),
    Domain(usize),
    Check(usize, crate::tabular::CompareOp, CheckRhs),
    Reference(
        Vec<usize>,
        std::collections::BTreeSet<Vec<crate::tabular::Value>>,
    ),
}

impl RowCheck {
    fn passes(&self, schema: &TableSchema, row: &Row) -> bool {
        match self {
            RowCheck::NotNull(i) => row[*i].is_some(),
            RowCheck::Domain(i) => match (&row[*i], &schema.columns[*i].domain) {
                (Some(v), Some(d)) => d.contains(v),
                _ => true,
            },
            RowCheck::Check(left, op, rhs) => eval_check(row, *left, *op, rhs) != Some(false),
            RowCheck::Reference(cols, parents) => match key_of(row, cols) {
                Some(k) => parents.contains(&k),
                None => true,
            },
        }
    }
}
