//! Compares actual values with expected intervals and rolls metric verdicts
//! up to queries and goals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Measurement, TableSummary};
use crate::quality_model::{
    resolve_goal, Interval, MetricSpec, ModelError, ObjectRef, QualityModelDoc, Unit,
};
use crate::quantity::Quantity;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("metric `{metric}`: measurement unit {found} does not match spec unit {expected}")]
    UnitMismatch {
        metric: String,
        expected: Unit,
        found: Unit,
    },
    #[error("measurement for `{0}` does not belong to this metric")]
    WrongMetric(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    Achieved,
    NotAchieved,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub metric_id: String,
    pub actual_value: Option<Quantity>,
    pub unit: Unit,
    pub expected: Interval,
    pub status: Status,
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub query_id: String,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalVerdict {
    pub goal_id: String,
    pub stakeholder_id: String,
    pub object_ref: ObjectRef,
    pub status: GoalStatus,
    pub queries: Vec<QueryVerdict>,
    pub verdicts: Vec<Verdict>,
}

/// Inclusive containment: a value on either bound passes.
pub fn evaluate_metric(
    measurement: Option<&Measurement>,
    spec: &MetricSpec,
) -> Result<Verdict, EvalError> {
    let Some(m) = measurement else {
        return Ok(Verdict {
            metric_id: spec.id.clone(),
            actual_value: None,
            unit: spec.unit,
            expected: spec.expected,
            status: Status::Missing,
            timestamp: None,
        });
    };
    if m.metric_id != spec.id {
        return Err(EvalError::WrongMetric(m.metric_id.clone()));
    }
    if m.unit != spec.unit {
        return Err(EvalError::UnitMismatch {
            metric: spec.id.clone(),
            expected: spec.unit,
            found: m.unit,
        });
    }
    let status = if spec.expected.contains(&m.actual_value) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(Verdict {
        metric_id: spec.id.clone(),
        actual_value: Some(m.actual_value),
        unit: spec.unit,
        expected: spec.expected,
        status,
        timestamp: Some(m.timestamp),
    })
}

/// Conjunction over three-valued statuses: any fail fails, otherwise any
/// missing is missing.
pub fn combine(statuses: impl IntoIterator<Item = Status>) -> Status {
    let mut acc = Status::Pass;
    for s in statuses {
        match s {
            Status::Fail => return Status::Fail,
            Status::Missing => acc = Status::Missing,
            Status::Pass => {}
        }
    }
    acc
}

/// Rolls verdicts up to one goal. Metrics absent from `verdicts` count as
/// missing.
pub fn evaluate_goal(
    model: &QualityModelDoc,
    goal_id: &str,
    verdicts: &BTreeMap<String, Verdict>,
) -> Result<GoalVerdict, EvalError> {
    let specs = resolve_goal(model, goal_id)?;
    let goal = model
        .goal(goal_id)
        .ok_or_else(|| ModelError::UnknownGoal(goal_id.into()))?;
    let verdict_for = |spec: &MetricSpec| -> Result<Verdict, EvalError> {
        match verdicts.get(&spec.id) {
            Some(v) => Ok(v.clone()),
            None => evaluate_metric(None, spec),
        }
    };
    let mut queries = Vec::new();
    for qid in &goal.query_ids {
        let query = model.query(qid).ok_or_else(|| ModelError::UnknownQuery {
            goal: goal.id.clone(),
            query: qid.clone(),
        })?;
        let mut statuses = Vec::new();
        for mid in &query.metric_ids {
            let spec = model.metric(mid).ok_or_else(|| ModelError::UnknownMetric {
                query: qid.clone(),
                metric: mid.clone(),
            })?;
            statuses.push(verdict_for(spec)?.status);
        }
        queries.push(QueryVerdict {
            query_id: qid.clone(),
            status: combine(statuses),
        });
    }
    let status = match combine(queries.iter().map(|q| q.status)) {
        Status::Pass => GoalStatus::Achieved,
        Status::Fail => GoalStatus::NotAchieved,
        Status::Missing => GoalStatus::Indeterminate,
    };
    Ok(GoalVerdict {
        goal_id: goal.id.clone(),
        stakeholder_id: goal.stakeholder_id.clone(),
        object_ref: goal.object_ref.clone(),
        status,
        queries,
        verdicts: specs
            .into_iter()
            .map(verdict_for)
            .collect::<Result<_, _>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarehouseIdentity {
    pub name: String,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoalTally {
    pub achieved: usize,
    pub not_achieved: usize,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub run_timestamp: DateTime<Utc>,
    pub warehouse: WarehouseIdentity,
    pub tally: GoalTally,
    pub goals: Vec<GoalVerdict>,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<TableSummary>,
    pub notes: Vec<String>,
}

impl QualityReport {
    pub fn goal(&self, id: &str) -> Option<&GoalVerdict> {
        self.goals.iter().find(|g| g.goal_id == id)
    }
}

/// Latest measurement per metric id (later entries win timestamp ties).
pub fn latest_by_metric(measurements: &[Measurement]) -> BTreeMap<&str, &Measurement> {
    let mut out: BTreeMap<&str, &Measurement> = BTreeMap::new();
    for m in measurements {
        match out.get(m.metric_id.as_str()) {
            Some(prev) if prev.timestamp > m.timestamp => {}
            _ => {
                out.insert(m.metric_id.as_str(), m);
            }
        }
    }
    out
}

/// Assembles the full report. Goals are ordered by id, verdicts by metric id.
pub fn build_report(
    model: &QualityModelDoc,
    measurements: &[Measurement],
    warehouse: WarehouseIdentity,
    run_timestamp: DateTime<Utc>,
    tables: Vec<TableSummary>,
    mut notes: Vec<String>,
) -> Result<QualityReport, EvalError> {
    let latest = latest_by_metric(measurements);
    let mut verdicts = BTreeMap::new();
    for spec in &model.metrics {
        let v = evaluate_metric(latest.get(spec.id.as_str()).copied(), spec)?;
        verdicts.insert(spec.id.clone(), v);
    }
    let mut goal_ids: Vec<&str> = model.goals.iter().map(|g| g.id.as_str()).collect();
    goal_ids.sort_unstable();
    let goals = goal_ids
        .into_iter()
        .map(|id| evaluate_goal(model, id, &verdicts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tally = GoalTally::default();
    for g in &goals {
        match g.status {
            GoalStatus::Achieved => tally.achieved += 1,
            GoalStatus::NotAchieved => tally.not_achieved += 1,
            GoalStatus::Indeterminate => tally.indeterminate += 1,
        }
    }
    if tables.iter().any(|t| t.rows == 0) {
        notes.push("empty tables measure completeness 0% and defect ratio 1.0".into());
    }
    Ok(QualityReport {
        run_timestamp,
        warehouse,
        tally,
        goals,
        verdicts: verdicts.into_values().collect(),
        tables,
        notes,
    })
}

fn fmt_value(v: &Quantity, unit: Unit) -> String {
    match unit {
        Unit::Percent => format!("{}%", v.to_fixed(2)),
        Unit::Ratio | Unit::ManHours => v.to_fixed(2),
        Unit::Count | Unit::BooleanCount => v.to_string(),
    }
}

fn status_label(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Missing => "MISSING",
    }
}

fn goal_label(s: GoalStatus) -> &'static str {
    match s {
        GoalStatus::Achieved => "ACHIEVED",
        GoalStatus::NotAchieved => "NOT ACHIEVED",
        GoalStatus::Indeterminate => "INDETERMINATE",
    }
}

/// Pads every column of `rows` to its widest cell.
pub fn align(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; width];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Human-readable rendering of a report.
pub fn render_text(report: &QualityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "quality report for {} ({}) at {}",
        report.warehouse.name,
        report.warehouse.fingerprint,
        report
            .run_timestamp
            .format(crate::tabular::TIMESTAMP_FORMAT)
    );
    let t = report.tally;
    let _ = writeln!(
        out,
        "goals: {} achieved, {} not achieved, {} indeterminate\n",
        t.achieved, t.not_achieved, t.indeterminate
    );

    let mut rows = vec![vec![
        "GOAL".to_string(),
        "STATUS".into(),
        "OBJECT".into(),
        "QUERIES".into(),
    ]];
    for g in &report.goals {
        let queries = g
            .queries
            .iter()
            .map(|q| format!("{}={}", q.query_id, status_label(q.status)))
            .collect::<Vec<_>>()
            .join(" ");
        rows.push(vec![
            g.goal_id.clone(),
            goal_label(g.status).into(),
            g.object_ref.to_string(),
            queries,
        ]);
    }
    out.push_str(&align(&rows));
    out.push('\n');

    let mut rows = vec![vec![
        "METRIC".to_string(),
        "STATUS".into(),
        "ACTUAL".into(),
        "EXPECTED".into(),
    ]];
    for v in &report.verdicts {
        rows.push(vec![
            v.metric_id.clone(),
            status_label(v.status).into(),
            v.actual_value
                .as_ref()
                .map(|q| fmt_value(q, v.unit))
                .unwrap_or_else(|| "-".into()),
            format!("[{}, {}] {}", v.expected.lo, v.expected.hi, v.unit),
        ]);
    }
    out.push_str(&align(&rows));

    if !report.tables.is_empty() {
        out.push('\n');
        let mut rows = vec![vec![
            "TABLE".to_string(),
            "ROWS".into(),
            "INCOMPLETE".into(),
            "COMPLETENESS".into(),
            "DEFECTIVE".into(),
            "DEFECT_RATIO".into(),
        ]];
        for s in &report.tables {
            rows.push(vec![
                s.table.clone(),
                s.rows.to_string(),
                s.incomplete_rows.to_string(),
                format!("{}%", s.completeness_percent.to_fixed(2)),
                s.defective_rows.to_string(),
                s.defect_ratio.to_fixed(2),
            ]);
        }
        out.push_str(&align(&rows));
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality_model::{AgentBinding, AgentKind, AgentParams, QualityParameter};

    fn spec(lo: i128, hi: i128) -> MetricSpec {
        MetricSpec {
            id: "m".into(),
            parameter: QualityParameter::Completeness,
            object_ref: ObjectRef::table("t"),
            agent: AgentBinding::Automated(AgentKind::Completeness),
            unit: Unit::Percent,
            expected: Interval::new(Quantity::from_integer(lo), Quantity::from_integer(hi)),
            params: AgentParams::default(),
        }
    }

    fn measured(value: Quantity, unit: Unit) -> Measurement {
        Measurement {
            metric_id: "m".into(),
            object_ref: ObjectRef::table("t"),
            actual_value: value,
            unit,
            timestamp: DateTime::UNIX_EPOCH,
            agent_id: "completeness".into(),
            detail: None,
        }
    }

    #[test]
    fn boundary_is_inclusive() {
        let s = spec(0, 40);
        let at = evaluate_metric(
            Some(&measured(Quantity::from_integer(40), Unit::Percent)),
            &s,
        )
        .unwrap();
        assert_eq!(at.status, Status::Pass);
        let above = evaluate_metric(
            Some(&measured(Quantity::ratio(4001, 100), Unit::Percent)),
            &s,
        )
        .unwrap();
        assert_eq!(above.status, Status::Fail);
        let low = evaluate_metric(Some(&measured(Quantity::ZERO, Unit::Percent)), &s).unwrap();
        assert_eq!(low.status, Status::Pass);
        assert_eq!(evaluate_metric(None, &s).unwrap().status, Status::Missing);
    }

    #[test]
    fn unit_mismatch_is_an_error() {
        let err =
            evaluate_metric(Some(&measured(Quantity::ONE, Unit::Count)), &spec(0, 40)).unwrap_err();
        assert!(matches!(err, EvalError::UnitMismatch { .. }));
    }

    #[test]
    fn combine_is_three_valued() {
        use Status::*;
        assert_eq!(combine([Pass, Pass]), Pass);
        assert_eq!(combine([Pass, Missing]), Missing);
        assert_eq!(combine([Missing, Fail, Pass]), Fail);
        assert_eq!(combine([]), Pass);
    }

    #[test]
    fn align_pads_columns() {
        let text = align(&[
            vec!["a".into(), "bb".into()],
            vec!["ccc".into(), "d".into()],
        ]);
        assert_eq!(text, "a    bb\nccc  d\n");
    }
}
