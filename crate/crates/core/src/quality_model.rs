//! The quality metamodel: stakeholders pursue goals on warehouse objects,
//! goals are decided by queries, and queries are conjunctions of metrics with
//! inclusive expected intervals and a measuring agent.
//!
//! The model file (`quality_model.json`) has five top-level lists:
//!
//! ```json
//! {
//!   "stakeholders": [{"id": "s1", "name": "Ops", "role": "dw_administrator", "concerns": ["timeliness"]}],
//!   "dimensions":   [{"id": "d1", "name": "completeness", "description": ""}],
//!   "goals":   [{"id": "g1", "stakeholder_id": "s1", "purpose": "evaluate", "dimension_id": "d1",
//!                "object_ref": {"level": "table", "table": "orders"}, "query_ids": ["q1"]}],
//!   "queries": [{"id": "q1", "metric_ids": ["m1"]}],
//!   "metrics": [{"id": "m1", "parameter": "completeness",
//!                "object_ref": {"level": "table", "table": "orders"},
//!                "agent": {"automated": "completeness"}, "unit": "percent",
//!                "expected": {"lo": 0, "hi": 40}}]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantity::Quantity;
use crate::tabular::Warehouse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StakeholderRole {
    DecisionMaker,
    DwAdministrator,
    DwDesigner,
    DwProgrammer,
    ExecutiveManager,
}

impl StakeholderRole {
    pub const ALL: [StakeholderRole; 5] = [
        StakeholderRole::DecisionMaker,
        StakeholderRole::DwAdministrator,
        StakeholderRole::DwDesigner,
        StakeholderRole::DwProgrammer,
        StakeholderRole::ExecutiveManager,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StakeholderRole::DecisionMaker => "Decision Makers",
            StakeholderRole::DwAdministrator => "Data Warehouse Administrator",
            StakeholderRole::DwDesigner => "Data Warehouse Designer",
            StakeholderRole::DwProgrammer => "Data Warehouse Programmer",
            StakeholderRole::ExecutiveManager => "Executive Manager",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stakeholder {
    pub id: String,
    pub name: String,
    pub role: StakeholderRole,
    #[serde(default)]
    pub concerns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityDimension {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// The warehouse object a goal or metric is defined on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum ObjectRef {
    Warehouse,
    Table { table: String },
    Column { table: String, column: String },
}

impl ObjectRef {
    pub fn table(name: impl Into<String>) -> Self {
        ObjectRef::Table { table: name.into() }
    }

    pub fn column(table: impl Into<String>, column: impl Into<String>) -> Self {
        ObjectRef::Column {
            table: table.into(),
            column: column.into(),
        }
    }

    pub fn table_name(&self) -> Option<&str> {
        match self {
            ObjectRef::Warehouse => None,
            ObjectRef::Table { table } | ObjectRef::Column { table, .. } => Some(table),
        }
    }

    pub fn exists_in(&self, warehouse: &Warehouse) -> bool {
        match self {
            ObjectRef::Warehouse => true,
            ObjectRef::Table { table } => warehouse.schema(table).is_some(),
            ObjectRef::Column { table, column } => warehouse
                .schema(table)
                .and_then(|s| s.column(column))
                .is_some(),
        }
    }
}

impl fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectRef::Warehouse => f.write_str("<warehouse>"),
            ObjectRef::Table { table } => f.write_str(table),
            ObjectRef::Column { table, column } => write!(f, "{table}.{column}"),
        }
    }
}

/// The twenty-three warehouse quality parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityParameter {
    Functionality,
    Reliability,
    Usability,
    Efficiency,
    Maintainability,
    Portability,
    Accessibility,
    Accuracy,
    Consistency,
    Security,
    Compliance,
    Recoverability,
    Analyzability,
    Changeability,
    Testability,
    Installability,
    ImplementationEfficiency,
    SystemAvailability,
    Currency,
    Volatility,
    Completeness,
    Credibility,
    DataInterpretability,
}

impl QualityParameter {
    pub const ALL: [QualityParameter; 23] = [
        QualityParameter::Functionality,
        QualityParameter::Reliability,
        QualityParameter::Usability,
        QualityParameter::Efficiency,
        QualityParameter::Maintainability,
        QualityParameter::Portability,
        QualityParameter::Accessibility,
        QualityParameter::Accuracy,
        QualityParameter::Consistency,
        QualityParameter::Security,
        QualityParameter::Compliance,
        QualityParameter::Recoverability,
        QualityParameter::Analyzability,
        QualityParameter::Changeability,
        QualityParameter::Testability,
        QualityParameter::Installability,
        QualityParameter::ImplementationEfficiency,
        QualityParameter::SystemAvailability,
        QualityParameter::Currency,
        QualityParameter::Volatility,
        QualityParameter::Completeness,
        QualityParameter::Credibility,
        QualityParameter::DataInterpretability,
    ];

    /// 1-based position in the parameter catalogue.
    pub fn number(self) -> usize {
        Self::ALL.iter().position(|p| *p == self).unwrap_or(0) + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            QualityParameter::Functionality => "Functionality",
            QualityParameter::Reliability => "Reliability",
            QualityParameter::Usability => "Usability",
            QualityParameter::Efficiency => "Efficiency",
            QualityParameter::Maintainability => "Maintainability",
            QualityParameter::Portability => "Portability",
            QualityParameter::Accessibility => "Accessibility",
            QualityParameter::Accuracy => "Accuracy",
            QualityParameter::Consistency => "Consistency",
            QualityParameter::Security => "Security",
            QualityParameter::Compliance => "Compliance",
            QualityParameter::Recoverability => "Recoverability",
            QualityParameter::Analyzability => "Analyzability",
            QualityParameter::Changeability => "Changeability",
            QualityParameter::Testability => "Testability",
            QualityParameter::Installability => "Install ability",
            QualityParameter::ImplementationEfficiency => "Implementation Efficiency",
            QualityParameter::SystemAvailability => "System Availability",
            QualityParameter::Currency => "Currency",
            QualityParameter::Volatility => "Volatility",
            QualityParameter::Completeness => "Completeness",
            QualityParameter::Credibility => "Credibility",
            QualityParameter::DataInterpretability => "Data Interpretability",
        }
    }

    /// The automated agent that computes this parameter from data, if any.
    /// Every other parameter needs a declared measurement.
    pub fn native_agent(self) -> Option<AgentKind> {
        Some(match self {
            QualityParameter::Accessibility => AgentKind::Accessibility,
            QualityParameter::Accuracy => AgentKind::Accuracy,
            QualityParameter::Consistency => AgentKind::Consistency,
            QualityParameter::Currency => AgentKind::Currency,
            QualityParameter::Volatility => AgentKind::Volatility,
            QualityParameter::Completeness => AgentKind::Completeness,
            QualityParameter::Credibility => AgentKind::Credibility,
            QualityParameter::DataInterpretability => AgentKind::Interpretability,
            _ => return None,
        })
    }

    pub fn is_data_computable(self) -> bool {
        self.native_agent().is_some()
    }

    /// Whether `agent` may measure this parameter automatically: its native
    /// agent, or the defect ratio on any data-computable parameter.
    pub fn permits(self, agent: AgentKind) -> bool {
        match self.native_agent() {
            Some(native) => agent == native || agent == AgentKind::DefectRatio,
            None => false,
        }
    }
}

impl fmt::Display for QualityParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Completeness,
    Accessibility,
    Consistency,
    Accuracy,
    Credibility,
    Currency,
    Volatility,
    Interpretability,
    DefectRatio,
}

impl AgentKind {
    pub const ALL: [AgentKind; 9] = [
        AgentKind::Completeness,
        AgentKind::Accessibility,
        AgentKind::Consistency,
        AgentKind::Accuracy,
        AgentKind::Credibility,
        AgentKind::Currency,
        AgentKind::Volatility,
        AgentKind::Interpretability,
        AgentKind::DefectRatio,
    ];

    pub fn id(self) -> &'static str {
        match self {
            AgentKind::Completeness => "completeness",
            AgentKind::Accessibility => "accessibility",
            AgentKind::Consistency => "consistency",
            AgentKind::Accuracy => "accuracy",
            AgentKind::Credibility => "credibility",
            AgentKind::Currency => "currency",
            AgentKind::Volatility => "volatility",
            AgentKind::Interpretability => "interpretability",
            AgentKind::DefectRatio => "defect_ratio",
        }
    }

    pub fn unit(self) -> Unit {
        match self {
            AgentKind::Completeness => Unit::Percent,
            AgentKind::DefectRatio => Unit::Ratio,
            _ => Unit::Count,
        }
    }

    /// Whether the agent can run against an object at this level.
    pub fn accepts(self, object: &ObjectRef) -> bool {
        match self {
            AgentKind::Interpretability => true,
            AgentKind::Consistency => !matches!(object, ObjectRef::Column { .. }),
            _ => matches!(object, ObjectRef::Table { .. }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Count,
    Percent,
    Ratio,
    ManHours,
    BooleanCount,
}

impl Unit {
    /// Whether `value` lies in this unit's domain.
    pub fn admits(self, value: &Quantity) -> bool {
        match self {
            Unit::Percent => *value >= Quantity::ZERO && *value <= Quantity::from_integer(100),
            Unit::Ratio => *value >= Quantity::ZERO && *value <= Quantity::ONE,
            Unit::Count | Unit::BooleanCount => !value.is_negative() && value.is_integer(),
            Unit::ManHours => !value.is_negative(),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Count => "count",
            Unit::Percent => "percent",
            Unit::Ratio => "ratio",
            Unit::ManHours => "man_hours",
            Unit::BooleanCount => "boolean_count",
        })
    }
}

/// Closed interval of acceptable values; both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Quantity,
    pub hi: Quantity,
}

impl Interval {
    /// Upper bound used to express "no upper limit".
    pub const SENTINEL_MAX: i128 = 1_000_000_000_000_000;

    pub fn new(lo: Quantity, hi: Quantity) -> Self {
        Interval { lo, hi }
    }

    pub fn at_most(hi: Quantity) -> Self {
        Interval {
            lo: Quantity::ZERO,
            hi,
        }
    }

    pub fn at_least(lo: Quantity) -> Self {
        Interval {
            lo,
            hi: Quantity::from_integer(Self::SENTINEL_MAX),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.lo <= self.hi
    }

    pub fn contains(&self, value: &Quantity) -> bool {
        self.lo <= *value && *value <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentBinding {
    Automated(AgentKind),
    /// Measurements are supplied externally under this source label.
    Declared(String),
}

impl AgentBinding {
    pub fn is_declared(&self) -> bool {
        matches!(self, AgentBinding::Declared(_))
    }
}

/// What makes a record defective for the defect ratio.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectSource {
    /// NULL in any required column.
    IncompleteRecord,
    /// Row appears in a violation of one of these constraints.
    ViolationOf(Vec<String>),
}

/// Agent-specific settings; unused fields are ignored by other agents.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgentParams {
    /// Consistency: constraint subset (default: every constraint in scope).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<String>>,
    /// Accuracy/credibility: table holding the validated reference rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_table: Option<String>,
    /// Accuracy/credibility: match columns (default: the primary key).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_columns: Option<Vec<String>>,
    /// Accuracy/credibility: compared columns (default: every non-key column).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compared_columns: Option<Vec<String>>,
    /// Defect ratio: predicate set (default: incomplete records plus
    /// violations of every constraint on the table).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect_predicates: Option<Vec<DefectSource>>,
}

impl AgentParams {
    fn is_default(&self) -> bool {
        *self == AgentParams::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub id: String,
    pub parameter: QualityParameter,
    pub object_ref: ObjectRef,
    pub agent: AgentBinding,
    pub unit: Unit,
    pub expected: Interval,
    #[serde(default, skip_serializing_if = "AgentParams::is_default")]
    pub params: AgentParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryRule {
    /// Passes iff every metric verdict passes.
    #[default]
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityQuery {
    pub id: String,
    pub metric_ids: Vec<String>,
    #[serde(default)]
    pub rule: QueryRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityGoal {
    pub id: String,
    pub stakeholder_id: String,
    pub purpose: String,
    pub dimension_id: String,
    pub object_ref: ObjectRef,
    pub query_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QualityModelDoc {
    #[serde(default)]
    pub stakeholders: Vec<Stakeholder>,
    #[serde(default)]
    pub dimensions: Vec<QualityDimension>,
    #[serde(default)]
    pub goals: Vec<QualityGoal>,
    #[serde(default)]
    pub queries: Vec<QualityQuery>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
}

impl QualityModelDoc {
    pub fn goal(&self, id: &str) -> Option<&QualityGoal> {
        self.goals.iter().find(|g| g.id == id)
    }

    pub fn query(&self, id: &str) -> Option<&QualityQuery> {
        self.queries.iter().find(|q| q.id == id)
    }

    pub fn metric(&self, id: &str) -> Option<&MetricSpec> {
        self.metrics.iter().find(|m| m.id == id)
    }
}

/// A structural problem in a quality model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDefect {
    /// e.g. `goal g1`
    pub subject: String,
    pub message: String,
}

impl fmt::Display for ModelDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("goal `{goal}` references unknown query `{query}`")]
    UnknownQuery { goal: String, query: String },
    #[error("query `{query}` references unknown metric `{metric}`")]
    UnknownMetric { query: String, metric: String },
}

struct Defects(Vec<ModelDefect>);

impl Defects {
    fn push(&mut self, subject: String, message: impl Into<String>) {
        self.0.push(ModelDefect {
            subject,
            message: message.into(),
        });
    }
}

fn unique_ids<'a>(
    kind: &str,
    ids: impl Iterator<Item = &'a str>,
    out: &mut Defects,
) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.trim().is_empty() {
            out.push(format!("{kind} (empty id)"), "id must not be empty");
        } else if !seen.insert(id) {
            out.push(format!("{kind} {id}"), "duplicate id");
        }
    }
    seen
}

/// Defects that can be found without looking at a warehouse.
pub fn validate_structure(model: &QualityModelDoc) -> Vec<ModelDefect> {
    let mut out = Defects(Vec::new());
    let stakeholders = unique_ids(
        "stakeholder",
        model.stakeholders.iter().map(|s| s.id.as_str()),
        &mut out,
    );
    let dimensions = unique_ids(
        "dimension",
        model.dimensions.iter().map(|d| d.id.as_str()),
        &mut out,
    );
    unique_ids("goal", model.goals.iter().map(|g| g.id.as_str()), &mut out);
    let queries = unique_ids(
        "query",
        model.queries.iter().map(|q| q.id.as_str()),
        &mut out,
    );
    let metrics = unique_ids(
        "metric",
        model.metrics.iter().map(|m| m.id.as_str()),
        &mut out,
    );

    for d in &model.dimensions {
        if d.name.trim().is_empty() {
            out.push(format!("dimension {}", d.id), "name must not be empty");
        }
    }
    for g in &model.goals {
        let subject = || format!("goal {}", g.id);
        if !stakeholders.contains(g.stakeholder_id.as_str()) {
            out.push(
                subject(),
                format!("references unknown stakeholder `{}`", g.stakeholder_id),
            );
        }
        if !dimensions.contains(g.dimension_id.as_str()) {
            out.push(
                subject(),
                format!("references unknown dimension `{}`", g.dimension_id),
            );
        }
        if g.query_ids.is_empty() {
            out.push(subject(), "must reference at least one query");
        }
        for q in &g.query_ids {
            if !queries.contains(q.as_str()) {
                out.push(subject(), format!("references unknown query `{q}`"));
            }
        }
    }
    for q in &model.queries {
        let subject = || format!("query {}", q.id);
        if q.metric_ids.is_empty() {
            out.push(subject(), "must reference at least one metric");
        }
        for m in &q.metric_ids {
            if !metrics.contains(m.as_str()) {
                out.push(subject(), format!("references unknown metric `{m}`"));
            }
        }
    }
    for m in &model.metrics {
        let subject = || format!("metric {}", m.id);
        if !m.expected.is_well_formed() {
            out.push(
                subject(),
                format!("expected interval {} has lo > hi", m.expected),
            );
        }
        match &m.agent {
            AgentBinding::Automated(kind) => {
                if !m.parameter.is_data_computable() {
                    out.push(
                        subject(),
                        format!("parameter {} requires declared agent", m.parameter.label()),
                    );
                } else if !m.parameter.permits(*kind) {
                    out.push(
                        subject(),
                        format!(
                            "agent `{}` does not measure parameter {}",
                            kind.id(),
                            m.parameter.label()
                        ),
                    );
                }
                if m.unit != kind.unit() {
                    out.push(
                        subject(),
                        format!(
                            "agent `{}` reports unit {}, spec says {}",
                            kind.id(),
                            kind.unit(),
                            m.unit
                        ),
                    );
                }
                if !kind.accepts(&m.object_ref) {
                    out.push(
                        subject(),
                        format!(
                            "agent `{}` cannot measure object {}",
                            kind.id(),
                            m.object_ref
                        ),
                    );
                }
                if let Some(preds) = &m.params.defect_predicates {
                    if preds.is_empty() {
                        out.push(subject(), "defect predicate set must not be empty");
                    }
                }
                if matches!(kind, AgentKind::Accuracy | AgentKind::Credibility)
                    && m.params.baseline_table.is_none()
                {
                    out.push(subject(), "accuracy agents need params.baseline_table");
                }
            }
            AgentBinding::Declared(label) => {
                if label.trim().is_empty() {
                    out.push(subject(), "declared source label must not be empty");
                }
            }
        }
    }
    out.0
}

/// Every structural defect plus unresolved warehouse references. Empty iff
/// the model is usable against `warehouse`.
pub fn validate_model(model: &QualityModelDoc, warehouse: &Warehouse) -> Vec<ModelDefect> {
    let mut out = Defects(validate_structure(model));
    for g in &model.goals {
        if !g.object_ref.exists_in(warehouse) {
            out.push(
                format!("goal {}", g.id),
                format!("object {} not found in warehouse", g.object_ref),
            );
        }
    }
    for m in &model.metrics {
        let subject = || format!("metric {}", m.id);
        if !m.object_ref.exists_in(warehouse) {
            out.push(
                subject(),
                format!("object {} not found in warehouse", m.object_ref),
            );
        }
        let p = &m.params;
        let mut constraint_ids: Vec<&String> = p.constraints.iter().flatten().collect();
        for pred in p.defect_predicates.iter().flatten() {
            if let DefectSource::ViolationOf(ids) = pred {
                constraint_ids.extend(ids);
            }
        }
        for id in constraint_ids {
            if warehouse.constraint(id).is_none() {
                out.push(subject(), format!("references unknown constraint `{id}`"));
            }
        }
        if let Some(baseline) = &p.baseline_table {
            match warehouse.schema(baseline) {
                None => out.push(subject(), format!("baseline table `{baseline}` not found")),
                Some(bschema) => {
                    let target = m.object_ref.table_name().and_then(|t| warehouse.schema(t));
                    for c in p.key_columns.iter().chain(&p.compared_columns).flatten() {
                        if bschema.column(c).is_none()
                            || target.is_some_and(|t| t.column(c).is_none())
                        {
                            out.push(
                                subject(),
                                format!("column `{c}` missing from data or baseline"),
                            );
                        }
                    }
                }
            }
        }
    }
    out.0
}

/// Metric specs reachable from a goal, in query order then metric order,
/// first occurrence kept.
pub fn resolve_goal<'m>(
    model: &'m QualityModelDoc,
    goal_id: &str,
) -> Result<Vec<&'m MetricSpec>, ModelError> {
    let goal = model
        .goal(goal_id)
        .ok_or_else(|| ModelError::UnknownGoal(goal_id.to_string()))?;
    let by_id: BTreeMap<&str, &MetricSpec> =
        model.metrics.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for qid in &goal.query_ids {
        let query = model.query(qid).ok_or_else(|| ModelError::UnknownQuery {
            goal: goal.id.clone(),
            query: qid.clone(),
        })?;
        for mid in &query.metric_ids {
            let spec = by_id
                .get(mid.as_str())
                .ok_or_else(|| ModelError::UnknownMetric {
                    query: query.id.clone(),
                    metric: mid.clone(),
                })?;
            if seen.insert(mid.as_str()) {
                out.push(*spec);
            }
        }
    }
    Ok(out)
}
