use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::log::{Action, CleansingLog};
use super::CleanseError;
use crate::tabular::{key_of, ColumnKind, TableSchema, Value, Violation, Warehouse};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    /// Column of the table being corrected.
    pub column: String,
    /// Matching column of the lookup table.
    pub lookup_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Copy the value from another table, matched on `key_mapping`.
    AlternateSource {
        lookup_table: String,
        key_mapping: Vec<KeyPair>,
        value_column: String,
    },
    /// Compute the value from other columns of the same row.
    Derive { expression: String },
    /// Use a constant, written in the column's text form.
    Default { value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliesWhen {
    /// The cell is NULL.
    Null,
    /// The cell is named by one of the supplied violations.
    InViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRule {
    pub table: String,
    pub column: String,
    pub strategy: Strategy,
    pub applies_when: AppliesWhen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrectionSummary {
    pub corrected: usize,
    pub uncorrectable: usize,
}

enum Prepared {
    Lookup {
        local: Vec<usize>,
        table: BTreeMap<Vec<Value>, Option<Value>>,
    },
    Derive(Expr),
    Default(Value),
}

struct PreparedRule<'r> {
    rule: &'r CorrectionRule,
    column: usize,
    kind: ColumnKind,
    how: Prepared,
}

fn column_of(schema: &TableSchema, column: &str) -> Result<usize, CleanseError> {
    schema
        .column_index(column)
        .ok_or_else(|| CleanseError::UnknownColumn {
            table: schema.name.clone(),
            column: column.to_string(),
        })
}

fn prepare<'r>(
    warehouse: &Warehouse,
    index: usize,
    rule: &'r CorrectionRule,
) -> Result<PreparedRule<'r>, CleanseError> {
    let invalid = |message: String| CleanseError::InvalidRule { index, message };
    let (schema, _) = warehouse.table(&rule.table)?;
    let column = column_of(schema, &rule.column)?;
    let kind = schema.columns[column].kind;
    let how = match &rule.strategy {
        Strategy::Default { value } => {
            if value.is_empty() {
                return Err(invalid("default value must not be empty".into()));
            }
            Prepared::Default(kind.parse(value).map_err(invalid)?)
        }
        Strategy::Derive { expression } => {
            let expr = Expr::parse(expression).map_err(|e| invalid(format!("expression: {e}")))?;
            for c in expr.columns() {
                if c == rule.column {
                    return Err(invalid(format!(
                        "expression reads its own target column `{c}`"
                    )));
                }
                column_of(schema, &c)?;
            }
            Prepared::Derive(expr)
        }
        Strategy::AlternateSource {
            lookup_table,
            key_mapping,
            value_column,
        } => {
            if key_mapping.is_empty() {
                return Err(invalid("key mapping is empty".into()));
            }
            let (lschema, ldata) = warehouse.table(lookup_table)?;
            let local = key_mapping
                .iter()
                .map(|k| column_of(schema, &k.column))
                .collect::<Result<Vec<_>, _>>()?;
            let remote = key_mapping
                .iter()
                .map(|k| column_of(lschema, &k.lookup_column))
                .collect::<Result<Vec<_>, _>>()?;
            let value_idx = column_of(lschema, value_column)?;
            let mut table = BTreeMap::new();
            for row in &ldata.rows {
                if let Some(k) = key_of(row, &remote) {
                    if table.contains_key(&k) {
                        let shown = k
                            .iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(", ");
                        return Err(CleanseError::LookupKeyCollision {
                            table: lookup_table.clone(),
                            key: shown,
                        });
                    }
                    table.insert(k, row[value_idx].clone());
                }
            }
            Prepared::Lookup { local, table }
        }
    };
    Ok(PreparedRule {
        rule,
        column,
        kind,
        how,
    })
}

/// Fits a computed value to the target column kind.
fn coerce(value: Value, kind: ColumnKind) -> Result<Value, String> {
    match (value, kind) {
        (Value::Text(t), _) if t.is_empty() => {
            Err("computed value is empty text, which reads as NULL".into())
        }
        (v, k) if v.kind() == k => Ok(v),
        (v, ColumnKind::Text) => Ok(Value::Text(v.to_string())),
        (Value::Integer(i), ColumnKind::Decimal) => Ok(Value::Decimal(i.into())),
        (Value::Decimal(d), ColumnKind::Integer) if d.fract().is_zero() => i64::try_from(d)
            .map(Value::Integer)
            .map_err(|_| format!("{d} does not fit an integer")),
        (Value::Text(t), k) => k.parse(&t),
        (v, k) => Err(format!(
            "{} value `{v}` does not fit a {k} column",
            v.kind()
        )),
    }
}

/// Validates correction rules against the warehouse without applying them.
pub fn validate_rules(warehouse: &Warehouse, rules: &[CorrectionRule]) -> Result<(), CleanseError> {
    for (i, r) in rules.iter().enumerate() {
        prepare(warehouse, i, r)?;
    }
    Ok(())
}

/// Applies rules in list order; the first rule whose condition matches a cell
/// owns it, whether or not it manages to produce a value. Cells a rule cannot
/// fix are logged as uncorrectable and left as they were.
pub fn correct(
    warehouse: &Warehouse,
    rules: &[CorrectionRule],
    violations: &[Violation],
    log: &mut CleansingLog,
) -> Result<(Warehouse, CorrectionSummary), CleanseError> {
    let prepared = rules
        .iter()
        .enumerate()
        .map(|(i, r)| prepare(warehouse, i, r))
        .collect::<Result<Vec<_>, _>>()?;
    let flagged: BTreeSet<(&str, usize, &str)> = violations
        .iter()
        .flat_map(|v| {
            v.columns
                .iter()
                .map(move |c| (v.table.as_str(), v.row_index, c.as_str()))
        })
        .collect();

    let mut w = warehouse.clone();
    let mut owned: BTreeSet<(String, usize, usize)> = BTreeSet::new();
    let mut summary = CorrectionSummary::default();
    for p in &prepared {
        let table = p.rule.table.as_str();
        let schema = w.table(table)?.0.clone();
        let data = w.dataset_mut(table).expect("table checked in prepare");
        for (r, row) in data.rows.iter_mut().enumerate() {
            let applies = match p.rule.applies_when {
                AppliesWhen::Null => row[p.column].is_none(),
                AppliesWhen::InViolation => flagged.contains(&(table, r, p.rule.column.as_str())),
            };
            if !applies || !owned.insert((table.to_string(), r, p.column)) {
                continue;
            }
            let computed: Result<Value, String> = match &p.how {
                Prepared::Default(v) => Ok(v.clone()),
                Prepared::Derive(expr) => expr
                    .eval(&schema, row)
                    .map_err(|e| e.to_string())
                    .and_then(|v| coerce(v, p.kind)),
                Prepared::Lookup {
                    local,
                    table: lookup,
                } => match key_of(row, local) {
                    None => Err("lookup key is NULL".into()),
                    Some(k) => match lookup.get(&k) {
                        None => Err("key absent from alternate source".into()),
                        Some(None) => Err("alternate source value is NULL".into()),
                        Some(Some(v)) => coerce(v.clone(), p.kind),
                    },
                },
            };
            let old = row[p.column].as_ref().map(Value::to_string);
            match computed {
                Ok(v) => {
                    let reason = match &p.rule.strategy {
                        Strategy::AlternateSource { lookup_table, .. } => {
                            format!("alternate source {lookup_table}")
                        }
                        Strategy::Derive { expression } => format!("derived from {expression}"),
                        Strategy::Default { .. } => "default value".to_string(),
                    };
                    let new = Some(v.to_string());
                    row[p.column] = Some(v);
                    log.push(
                        Action::Correct,
                        table,
                        r,
                        Some(&p.rule.column),
                        old,
                        new,
                        None,
                        reason,
                    );
                    summary.corrected += 1;
                }
                Err(why) => {
                    let same = old.clone();
                    log.push(
                        Action::Correct,
                        table,
                        r,
                        Some(&p.rule.column),
                        old,
                        same,
                        None,
                        format!("uncorrectable: {why}"),
                    );
                    summary.uncorrectable += 1;
                }
            }
        }
    }
    Ok((w, summary))
}
