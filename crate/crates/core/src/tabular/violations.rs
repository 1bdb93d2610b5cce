use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::constraint::{CompareOp, Constraint, ConstraintRule, Operand};
use super::schema::TableSchema;
use super::value::Value;
use super::warehouse::{Dataset, Row, Warehouse};
use super::TabularError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub constraint_id: String,
    pub table: String,
    /// 0-based position in the table at detection time.
    pub row_index: usize,
    pub columns: Vec<String>,
    pub detail: String,
}

/// Tests rows against constraints. `None` selects every constraint.
///
/// One violation is reported per failing (row, constraint) pair, sorted by
/// table, row and constraint id.
pub fn find_violations(
    warehouse: &Warehouse,
    selection: Option<&[String]>,
) -> Result<Vec<Violation>, TabularError> {
    let constraints: Vec<&Constraint> = match selection {
        Some(ids) => warehouse.select_constraints(ids)?,
        None => warehouse.constraints().iter().collect(),
    };
    let mut out = Vec::new();
    for c in constraints {
        let (schema, data) = warehouse.table(&c.table)?;
        check_constraint(warehouse, c, schema, data, &mut out)?;
    }
    out.sort_by(|a, b| {
        (&a.table, a.row_index, &a.constraint_id).cmp(&(&b.table, b.row_index, &b.constraint_id))
    });
    out.dedup();
    Ok(out)
}

/// Distinct (table, row) pairs named by `violations`.
pub fn violating_rows(violations: &[Violation]) -> BTreeSet<(String, usize)> {
    violations
        .iter()
        .map(|v| (v.table.clone(), v.row_index))
        .collect()
}

fn col(schema: &TableSchema, name: &str) -> Result<usize, TabularError> {
    schema
        .column_index(name)
        .ok_or_else(|| TabularError::invalid(format!("unknown column `{}.{name}`", schema.name)))
}

/// Key tuple of `row` at `cols`, or `None` if any part is NULL.
pub(crate) fn key_of(row: &Row, cols: &[usize]) -> Option<Vec<Value>> {
    cols.iter().map(|&i| row[i].clone()).collect()
}

fn render_key(names: &[String], key: &[Value]) -> String {
    names
        .iter()
        .zip(key)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parent key tuples of a referential constraint; rows with a NULL key part
/// match nothing.
pub(crate) fn parent_keys(
    warehouse: &Warehouse,
    parent_table: &str,
    parent_columns: &[String],
) -> Result<BTreeSet<Vec<Value>>, TabularError> {
    let (pschema, pdata) = warehouse.table(parent_table)?;
    let pcols = parent_columns
        .iter()
        .map(|n| col(pschema, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pdata
        .rows
        .iter()
        .filter_map(|r| key_of(r, &pcols))
        .collect())
}

fn check_constraint(
    warehouse: &Warehouse,
    c: &Constraint,
    schema: &TableSchema,
    data: &Dataset,
    out: &mut Vec<Violation>,
) -> Result<(), TabularError> {
    let mut emit = |row_index: usize, detail: String| {
        out.push(Violation {
            constraint_id: c.id.clone(),
            table: c.table.clone(),
            row_index,
            columns: c.columns(),
            detail,
        })
    };
    match &c.rule {
        ConstraintRule::NotNull { column } => {
            let i = col(schema, column)?;
            for (r, row) in data.rows.iter().enumerate() {
                if row[i].is_none() {
                    emit(r, format!("NULL in `{column}`"));
                }
            }
        }
        ConstraintRule::Domain { column } => {
            let i = col(schema, column)?;
            let Some(domain) = &schema.columns[i].domain else {
                return Ok(());
            };
            for (r, row) in data.rows.iter().enumerate() {
                if let Some(v) = &row[i] {
                    if !domain.contains(v) {
                        emit(r, format!("`{v}` outside the domain of `{column}`"));
                    }
                }
            }
        }
        ConstraintRule::Unique { columns } => {
            let idx = columns
                .iter()
                .map(|n| col(schema, n))
                .collect::<Result<Vec<_>, _>>()?;
            let mut groups: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
            for (r, row) in data.rows.iter().enumerate() {
                if let Some(k) = key_of(row, &idx) {
                    groups.entry(k).or_default().push(r);
                }
            }
            for (key, rows) in groups {
                if rows.len() > 1 {
                    for r in rows {
                        emit(r, format!("duplicate key ({})", render_key(columns, &key)));
                    }
                }
            }
        }
        ConstraintRule::Referential {
            columns,
            parent_table,
            parent_columns,
        } => {
            let idx = columns
                .iter()
                .map(|n| col(schema, n))
                .collect::<Result<Vec<_>, _>>()?;
            let parents = parent_keys(warehouse, parent_table, parent_columns)?;
            for (r, row) in data.rows.iter().enumerate() {
                if let Some(k) = key_of(row, &idx) {
                    if !parents.contains(&k) {
                        emit(
                            r,
                            format!(
                                "no `{parent_table}` row with ({})",
                                render_key(parent_columns, &k)
                            ),
                        );
                    }
                }
            }
        }
        ConstraintRule::Check { column, op, right } => {
            let i = col(schema, column)?;
            let rhs = CheckRhs::resolve(schema, i, right)?;
            for (r, row) in data.rows.iter().enumerate() {
                if let Some(false) = eval_check(row, i, *op, &rhs) {
                    let shown_right = match (&rhs, right) {
                        (CheckRhs::Column(j), Operand::Column(name)) => {
                            format!(
                                "{name} ({})",
                                row[*j].as_ref().map(|v| v.to_string()).unwrap_or_default()
                            )
                        }
                        (CheckRhs::Literal(v), _) => v.to_string(),
                        _ => String::new(),
                    };
                    let left = row[i].as_ref().map(|v| v.to_string()).unwrap_or_default();
                    emit(
                        r,
                        format!("check failed: {column} ({left}) {op} {shown_right}"),
                    );
                }
            }
        }
    }
    Ok(())
}

pub(crate) enum CheckRhs {
    Column(usize),
    Literal(Value),
}

impl CheckRhs {
    pub(crate) fn resolve(
        schema: &TableSchema,
        left: usize,
        right: &Operand,
    ) -> Result<Self, TabularError> {
        Ok(match right {
            Operand::Column(name) => CheckRhs::Column(col(schema, name)?),
            Operand::Literal(text) => CheckRhs::Literal(
                schema.columns[left]
                    .kind
                    .parse(text)
                    .map_err(TabularError::invalid)?,
            ),
        })
    }
}

/// `Some(false)` is a violation; NULL operands yield `None` (unknown).
pub(crate) fn eval_check(row: &Row, left: usize, op: CompareOp, rhs: &CheckRhs) -> Option<bool> {
    let l = row[left].as_ref()?;
    let r = match rhs {
        CheckRhs::Column(j) => row[*j].as_ref()?,
        CheckRhs::Literal(v) => v,
    };
    op.eval(l, r)
}
