//! Measuring agents: compute actual values for the data-computable quality
//! parameters, the defect ratio, and ingest externally declared values.
//!
//! Each `measure_*` function is pure and returns a [`Reading`]; [`dispatch`]
//! routes a [`MetricSpec`] to the right agent and stamps the result into a
//! [`Measurement`].

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quality_model::{
    AgentBinding, AgentKind, DefectSource, MetricSpec, ObjectRef, QualityModelDoc, Unit,
};
use crate::quantity::Quantity;
use crate::tabular::{
    find_violations, key_of, violating_rows, Dataset, TableSchema, TabularError, TemporalRole,
    Value, Warehouse,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("table `{table}` designates no {role} column")]
    NoTemporalColumn { table: String, role: &'static str },
    #[error("baseline table `{table}` has duplicate key ({key})")]
    DuplicateBaselineKey { table: String, key: String },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("metric `{0}` is not bound to a declared agent")]
    NotDeclared(String),
    #[error("metric `{metric}`: unit mismatch, spec says {expected}, got {found}")]
    UnitMismatch {
        metric: String,
        expected: Unit,
        found: Unit,
    },
    #[error("metric `{metric}`: value {value} is not numeric")]
    NonNumeric { metric: String, value: String },
    #[error("metric `{metric}`: value {value} lies outside the {unit} domain")]
    OutOfRange {
        metric: String,
        value: Quantity,
        unit: Unit,
    },
    #[error("metric `{0}`: measurement missing")]
    MeasurementMissing(String),
    #[error("defect predicate set is empty")]
    EmptyPredicateSet,
    #[error("metric `{metric}`: agent `{agent}` cannot measure object {object}")]
    UnsupportedObject {
        metric: String,
        agent: &'static str,
        object: ObjectRef,
    },
    #[error("metric `{metric}`: missing parameter `{param}`")]
    MissingParam { metric: String, param: &'static str },
}

/// Numerator and denominator behind a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub numerator: u64,
    pub denominator: u64,
}

/// An agent's output before it is bound to a metric and a timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reading {
    pub value: Quantity,
    pub unit: Unit,
    pub detail: Option<Counts>,
}

impl Reading {
    fn count(n: usize) -> Self {
        Reading {
            value: Quantity::from(n as u64),
            unit: Unit::Count,
            detail: None,
        }
    }

    pub fn into_measurement(
        self,
        metric_id: impl Into<String>,
        object_ref: ObjectRef,
        agent_id: impl Into<String>,
        timestamp: DateTime<Utc>,
    ) -> Measurement {
        Measurement {
            metric_id: metric_id.into(),
            object_ref,
            actual_value: self.value,
            unit: self.unit,
            timestamp,
            agent_id: agent_id.into(),
            detail: self.detail,
        }
    }
}

/// One timestamped actual value of one metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub metric_id: String,
    pub object_ref: ObjectRef,
    pub actual_value: Quantity,
    pub unit: Unit,
    pub timestamp: DateTime<Utc>,
    pub agent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Counts>,
}

/// Rows with a NULL in any required column.
pub fn incomplete_rows(dataset: &Dataset, schema: &TableSchema) -> Vec<usize> {
    let required: Vec<usize> = schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.required)
        .map(|(i, _)| i)
        .collect();
    dataset
        .rows
        .iter()
        .enumerate()
        .filter(|(_, row)| required.iter().any(|&i| row[i].is_none()))
        .map(|(r, _)| r)
        .collect()
}

/// Percentage of records with a NULL in a required column. An empty table
/// measures 0%.
pub fn measure_completeness(dataset: &Dataset, schema: &TableSchema) -> Reading {
    let incomplete = incomplete_rows(dataset, schema).len() as u64;
    let total = dataset.len() as u64;
    let value = if total == 0 {
        Quantity::ZERO
    } else {
        Quantity::percent(incomplete, total)
    };
    Reading {
        value,
        unit: Unit::Percent,
        detail: Some(Counts {
            numerator: incomplete,
            denominator: total,
        }),
    }
}

/// NULL cells in columns whose business rule says NULL is not expected.
pub fn measure_accessibility(dataset: &Dataset, schema: &TableSchema) -> Reading {
    let strict: Vec<usize> = schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.nullable)
        .map(|(i, _)| i)
        .collect();
    let n = dataset
        .rows
        .iter()
        .map(|row| strict.iter().filter(|&&i| row[i].is_none()).count())
        .sum();
    Reading::count(n)
}

/// Records (not violations) failing at least one of the given constraints.
pub fn measure_consistency(
    warehouse: &Warehouse,
    constraint_ids: &[String],
) -> Result<Reading, AgentError> {
    let violations = find_violations(warehouse, Some(constraint_ids))?;
    Ok(Reading::count(violating_rows(&violations).len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyReading {
    /// Matched rows whose compared cells all agree with the baseline.
    pub accuracy: Reading,
    /// Matched rows with at least one disagreeing cell.
    pub credibility: Reading,
    /// Rows with no baseline counterpart (including NULL keys).
    pub unmatched: u64,
}

/// Compares `data` row by row with a validated baseline, matching on `key`.
/// Two NULLs agree; a NULL and a value disagree.
pub fn measure_accuracy_credibility(
    data: (&TableSchema, &Dataset),
    baseline: (&TableSchema, &Dataset),
    key: &[String],
    compared: &[String],
) -> Result<AccuracyReading, AgentError> {
    let (schema, dataset) = data;
    let (bschema, bdata) = baseline;
    let idx = |s: &TableSchema, names: &[String]| -> Result<Vec<usize>, AgentError> {
        names
            .iter()
            .map(|n| {
                s.column_index(n).ok_or_else(|| {
                    TabularError::Invalid(format!("unknown column `{}.{n}`", s.name)).into()
                })
            })
            .collect()
    };
    let (dkey, bkey) = (idx(schema, key)?, idx(bschema, key)?);
    let (dcmp, bcmp) = (idx(schema, compared)?, idx(bschema, compared)?);

    let mut lookup: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
    for (r, row) in bdata.rows.iter().enumerate() {
        if let Some(k) = key_of(row, &bkey) {
            if lookup.insert(k.clone(), r).is_some() {
                let shown = k
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(AgentError::DuplicateBaselineKey {
                    table: bschema.name.clone(),
                    key: shown,
                });
            }
        }
    }

    let (mut accurate, mut inaccurate, mut unmatched) = (0u64, 0u64, 0u64);
    for row in &dataset.rows {
        let Some(brow) = key_of(row, &dkey)
            .and_then(|k| lookup.get(&k))
            .map(|&r| &bdata.rows[r])
        else {
            unmatched += 1;
            continue;
        };
        let agrees = dcmp
            .iter()
            .zip(&bcmp)
            .all(|(&i, &j)| match (&row[i], &brow[j]) {
                (None, None) => true,
                (Some(a), Some(b)) => a == b,
                _ => false,
            });
        if agrees {
            accurate += 1;
        } else {
            inaccurate += 1;
        }
    }
    let matched = accurate + inaccurate;
    let reading = |n: u64| Reading {
        value: Quantity::from(n),
        unit: Unit::Count,
        detail: Some(Counts {
            numerator: n,
            denominator: matched,
        }),
    };
    Ok(AccuracyReading {
        accuracy: reading(accurate),
        credibility: reading(inaccurate),
        unmatched,
    })
}

fn measure_temporal(
    dataset: &Dataset,
    schema: &TableSchema,
    role: TemporalRole,
) -> Result<Reading, AgentError> {
    let i = schema
        .temporal_column(role)
        .ok_or_else(|| AgentError::NoTemporalColumn {
            table: schema.name.clone(),
            role: match role {
                TemporalRole::ValidTime => "valid_time",
                _ => "transaction_time",
            },
        })?;
    Ok(Reading::count(
        dataset.rows.iter().filter(|r| r[i].is_none()).count(),
    ))
}

/// Rows lacking their transaction time.
pub fn measure_currency(dataset: &Dataset, schema: &TableSchema) -> Result<Reading, AgentError> {
    measure_temporal(dataset, schema, TemporalRole::TransactionTime)
}

/// Rows lacking their valid time.
pub fn measure_volatility(dataset: &Dataset, schema: &TableSchema) -> Result<Reading, AgentError> {
    measure_temporal(dataset, schema, TemporalRole::ValidTime)
}

/// Undocumented schema elements (tables and columns with a blank
/// description) across the whole warehouse.
pub fn measure_interpretability(warehouse: &Warehouse) -> Reading {
    measure_interpretability_of(warehouse, &ObjectRef::Warehouse)
}

/// Undocumented elements within one object: the warehouse, a table and its
/// columns, or a single column.
pub fn measure_interpretability_of(warehouse: &Warehouse, object: &ObjectRef) -> Reading {
    let blank = |s: &str| s.trim().is_empty();
    let in_table = |s: &TableSchema| {
        usize::from(blank(&s.description))
            + s.columns.iter().filter(|c| blank(&c.description)).count()
    };
    let n = match object {
        ObjectRef::Warehouse => warehouse.schemas().map(in_table).sum(),
        ObjectRef::Table { table } => warehouse.schema(table).map(in_table).unwrap_or(0),
        ObjectRef::Column { table, column } => warehouse
            .schema(table)
            .and_then(|s| s.column(column))
            .map(|c| usize::from(blank(&c.description)))
            .unwrap_or(0),
    };
    Reading::count(n)
}

/// Ordered, non-empty list of what counts as a defective record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectPredicateSet(Vec<DefectSource>);

impl DefectPredicateSet {
    pub fn new(sources: Vec<DefectSource>) -> Result<Self, AgentError> {
        if sources.is_empty() {
            return Err(AgentError::EmptyPredicateSet);
        }
        Ok(DefectPredicateSet(sources))
    }

    /// Incomplete records plus violations of every constraint.
    pub fn default_for(warehouse: &Warehouse) -> Self {
        DefectPredicateSet(vec![
            DefectSource::IncompleteRecord,
            DefectSource::ViolationOf(warehouse.constraint_ids()),
        ])
    }

    pub fn sources(&self) -> &[DefectSource] {
        &self.0
    }
}

/// Row indices of `table` matching any predicate.
pub fn defective_rows(
    warehouse: &Warehouse,
    table: &str,
    predicates: &DefectPredicateSet,
) -> Result<BTreeSet<usize>, AgentError> {
    let (schema, dataset) = warehouse.table(table)?;
    let mut rows = BTreeSet::new();
    for source in predicates.sources() {
        match source {
            DefectSource::IncompleteRecord => rows.extend(incomplete_rows(dataset, schema)),
            DefectSource::ViolationOf(ids) => rows.extend(
                find_violations(warehouse, Some(ids))?
                    .into_iter()
                    .filter(|v| v.table == table)
                    .map(|v| v.row_index),
            ),
        }
    }
    Ok(rows)
}

/// Fraction of non-defective records, ndR / R. An empty table is vacuously
/// defect-free (1.0).
pub fn compute_defect_ratio(
    warehouse: &Warehouse,
    table: &str,
    predicates: &DefectPredicateSet,
) -> Result<Reading, AgentError> {
    let total = warehouse.table(table)?.1.len() as u64;
    let defective = defective_rows(warehouse, table, predicates)?.len() as u64;
    let sound = total - defective;
    let value = if total == 0 {
        Quantity::ONE
    } else {
        Quantity::ratio(sound as i128, total as i128)
    };
    Ok(Reading {
        value,
        unit: Unit::Ratio,
        detail: Some(Counts {
            numerator: sound,
            denominator: total,
        }),
    })
}

/// One entry of a declared-measurement manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclaredEntry {
    pub metric_id: String,
    pub value: serde_json::Value,
    pub unit: Unit,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

/// Turns manifest entries into measurements. Entries without a timestamp are
/// stamped with `now`.
pub fn ingest_declared(
    manifest: &[DeclaredEntry],
    model: &QualityModelDoc,
    now: DateTime<Utc>,
) -> Result<Vec<Measurement>, AgentError> {
    manifest
        .iter()
        .map(|entry| {
            let spec = model
                .metric(&entry.metric_id)
                .ok_or_else(|| AgentError::UnknownMetric(entry.metric_id.clone()))?;
            if !spec.agent.is_declared() {
                return Err(AgentError::NotDeclared(spec.id.clone()));
            }
            if entry.unit != spec.unit {
                return Err(AgentError::UnitMismatch {
                    metric: spec.id.clone(),
                    expected: spec.unit,
                    found: entry.unit,
                });
            }
            let non_numeric = || AgentError::NonNumeric {
                metric: spec.id.clone(),
                value: entry.value.to_string(),
            };
            let value: Quantity = match &entry.value {
                serde_json::Value::Number(n) => n.to_string().parse().map_err(|_| non_numeric())?,
                _ => return Err(non_numeric()),
            };
            if !entry.unit.admits(&value) {
                return Err(AgentError::OutOfRange {
                    metric: spec.id.clone(),
                    value,
                    unit: entry.unit,
                });
            }
            Ok(Measurement {
                metric_id: spec.id.clone(),
                object_ref: spec.object_ref.clone(),
                actual_value: value,
                unit: entry.unit,
                timestamp: entry.timestamp.unwrap_or(now),
                agent_id: entry.source.clone(),
                detail: None,
            })
        })
        .collect()
}

fn table_of<'w>(
    spec: &MetricSpec,
    agent: AgentKind,
    warehouse: &'w Warehouse,
) -> Result<&'w str, AgentError> {
    match &spec.object_ref {
        ObjectRef::Table { table } if agent.accepts(&spec.object_ref) => {
            Ok(warehouse.table(table)?.0.name.as_str())
        }
        other => Err(AgentError::UnsupportedObject {
            metric: spec.id.clone(),
            agent: agent.id(),
            object: other.clone(),
        }),
    }
}

/// Runs the agent bound to `spec`. Declared specs resolve to the latest
/// measurement for that metric in `declared` (later entries win ties).
pub fn dispatch(
    spec: &MetricSpec,
    warehouse: &Warehouse,
    declared: &[Measurement],
    timestamp: DateTime<Utc>,
) -> Result<Measurement, AgentError> {
    let kind = match &spec.agent {
        AgentBinding::Declared(_) => {
            let latest = declared
                .iter()
                .filter(|m| m.metric_id == spec.id)
                .reduce(|best, m| {
                    if m.timestamp >= best.timestamp {
                        m
                    } else {
                        best
                    }
                });
            let m = latest.ok_or_else(|| AgentError::MeasurementMissing(spec.id.clone()))?;
            if m.unit != spec.unit {
                return Err(AgentError::UnitMismatch {
                    metric: spec.id.clone(),
                    expected: spec.unit,
                    found: m.unit,
                });
            }
            return Ok(m.clone());
        }
        AgentBinding::Automated(kind) => *kind,
    };
    let p = &spec.params;
    let reading = match kind {
        AgentKind::Completeness => {
            let (s, d) = warehouse.table(table_of(spec, kind, warehouse)?)?;
            measure_completeness(d, s)
        }
        AgentKind::Accessibility => {
            let (s, d) = warehouse.table(table_of(spec, kind, warehouse)?)?;
            measure_accessibility(d, s)
        }
        AgentKind::Currency => {
            let (s, d) = warehouse.table(table_of(spec, kind, warehouse)?)?;
            measure_currency(d, s)?
        }
        AgentKind::Volatility => {
            let (s, d) = warehouse.table(table_of(spec, kind, warehouse)?)?;
            measure_volatility(d, s)?
        }
        AgentKind::Interpretability => measure_interpretability_of(warehouse, &spec.object_ref),
        AgentKind::Consistency => {
            let ids = match (&p.constraints, &spec.object_ref) {
                (Some(ids), _) => ids.clone(),
                (None, ObjectRef::Warehouse) => warehouse.constraint_ids(),
                (None, ObjectRef::Table { table }) => warehouse
                    .constraints_on(table)
                    .map(|c| c.id.clone())
                    .collect(),
                (None, other) => {
                    return Err(AgentError::UnsupportedObject {
                        metric: spec.id.clone(),
                        agent: kind.id(),
                        object: other.clone(),
                    })
                }
            };
            measure_consistency(warehouse, &ids)?
        }
        AgentKind::Accuracy | AgentKind::Credibility => {
            let table = table_of(spec, kind, warehouse)?;
            let baseline_name =
                p.baseline_table
                    .as_deref()
                    .ok_or_else(|| AgentError::MissingParam {
                        metric: spec.id.clone(),
                        param: "baseline_table",
                    })?;
            let (schema, data) = warehouse.table(table)?;
            let baseline = warehouse.table(baseline_name)?;
            let key = p
                .key_columns
                .clone()
                .unwrap_or_else(|| schema.primary_key.clone());
            let compared = p.compared_columns.clone().unwrap_or_else(|| {
                schema
                    .columns
                    .iter()
                    .filter(|c| !key.contains(&c.name) && baseline.0.column(&c.name).is_some())
                    .map(|c| c.name.clone())
                    .collect()
            });
            let r = measure_accuracy_credibility((schema, data), baseline, &key, &compared)?;
            if kind == AgentKind::Accuracy {
                r.accuracy
            } else {
                r.credibility
            }
        }
        AgentKind::DefectRatio => {
            let table = table_of(spec, kind, warehouse)?;
            let predicates = match &p.defect_predicates {
                Some(sources) => DefectPredicateSet::new(sources.clone())?,
                None => DefectPredicateSet::default_for(warehouse),
            };
            compute_defect_ratio(warehouse, table, &predicates)?
        }
    };
    if reading.unit != spec.unit {
        return Err(AgentError::UnitMismatch {
            metric: spec.id.clone(),
            expected: spec.unit,
            found: reading.unit,
        });
    }
    Ok(reading.into_measurement(
        spec.id.clone(),
        spec.object_ref.clone(),
        kind.id(),
        timestamp,
    ))
}

/// Measures every metric of the model concurrently. Results keep model order.
pub fn measure_all(
    model: &QualityModelDoc,
    warehouse: &Warehouse,
    declared: &[Measurement],
    timestamp: DateTime<Utc>,
) -> Vec<(String, Result<Measurement, AgentError>)> {
    model
        .metrics
        .par_iter()
        .map(|spec| {
            (
                spec.id.clone(),
                dispatch(spec, warehouse, declared, timestamp),
            )
        })
        .collect()
}

/// Completeness and default defect ratio of one table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub table: String,
    pub rows: u64,
    pub incomplete_rows: u64,
    pub completeness_percent: Quantity,
    pub defective_rows: u64,
    pub defect_ratio: Quantity,
}

pub fn summarize_tables(warehouse: &Warehouse) -> Result<Vec<TableSummary>, AgentError> {
    let predicates = DefectPredicateSet::default_for(warehouse);
    warehouse
        .table_names()
        .map(|table| {
            let (schema, data) = warehouse.table(table)?;
            let completeness = measure_completeness(data, schema);
            let ratio = compute_defect_ratio(warehouse, table, &predicates)?;
            let rows = data.len() as u64;
            Ok(TableSummary {
                table: table.to_string(),
                rows,
                incomplete_rows: completeness.detail.map_or(0, |c| c.numerator),
                completeness_percent: completeness.value,
                defective_rows: rows - ratio.detail.map_or(rows, |c| c.numerator),
                defect_ratio: ratio.value,
            })
        })
        .collect()
}
