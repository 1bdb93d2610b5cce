use serde::{Deserialize, Serialize};

use super::value::{ColumnKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalRole {
    #[default]
    None,
    TransactionTime,
    ValidTime,
}

impl TemporalRole {
    fn is_none(&self) -> bool {
        *self == TemporalRole::None
    }
}

/// Feasible values for a column. Range bounds are inclusive and only
/// meaningful for integer and decimal columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Values(Vec<Value>),
    Range {
        min: Option<Value>,
        max: Option<Value>,
    },
}

impl Domain {
    pub fn contains(&self, value: &Value) -> bool {
        match self {
            Domain::Values(allowed) => allowed
                .iter()
                .any(|a| a.compare(value) == Some(std::cmp::Ordering::Equal)),
            Domain::Range { min, max } => {
                let Some(v) = value.as_decimal() else {
                    return false;
                };
                let above = min
                    .as_ref()
                    .and_then(Value::as_decimal)
                    .is_none_or(|lo| v >= lo);
                let below = max
                    .as_ref()
                    .and_then(Value::as_decimal)
                    .is_none_or(|hi| v <= hi);
                above && below
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ColumnSpecFile", into = "ColumnSpecFile")]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Business rule: NULLs are expected in this column.
    pub nullable: bool,
    /// A record is incomplete when this column is NULL.
    pub required: bool,
    pub domain: Option<Domain>,
    pub description: String,
    pub temporal_role: TemporalRole,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            nullable: true,
            required: false,
            domain: None,
            description: String::new(),
            temporal_role: TemporalRole::None,
        }
    }

    pub fn not_nullable(mut self) -> Self {
        self.nullable = false;
        self
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn described(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn with_temporal_role(mut self, role: TemporalRole) -> Self {
        self.temporal_role = role;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub columns: Vec<ColumnSpec>,
    pub primary_key: Vec<String>,
}

impl TableSchema {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnSpec>, primary_key: &[&str]) -> Self {
        TableSchema {
            name: name.into(),
            description: String::new(),
            columns,
            primary_key: primary_key.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn described(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn temporal_column(&self, role: TemporalRole) -> Option<usize> {
        self.columns.iter().position(|c| c.temporal_role == role)
    }

    /// Checks the table-local invariants.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(format!(
                    "table `{}` has a column with an empty name",
                    self.name
                ));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(format!(
                    "table `{}` has duplicate column `{}`",
                    self.name, c.name
                ));
            }
            if let Some(Domain::Range { .. }) = &c.domain {
                if !c.kind.is_numeric() {
                    return Err(format!(
                        "column `{}.{}`: range domains require an integer or decimal column",
                        self.name, c.name
                    ));
                }
            }
        }
        for role in [TemporalRole::TransactionTime, TemporalRole::ValidTime] {
            let n = self
                .columns
                .iter()
                .filter(|c| c.temporal_role == role)
                .count();
            if n > 1 {
                return Err(format!(
                    "table `{}` designates {n} columns as {role:?}; at most one is allowed",
                    self.name
                ));
            }
        }
        if self.primary_key.is_empty() {
            return Err(format!("table `{}` has an empty primary key", self.name));
        }
        for k in &self.primary_key {
            if self.column(k).is_none() {
                return Err(format!(
                    "table `{}`: primary key column `{k}` does not exist",
                    self.name
                ));
            }
        }
        Ok(())
    }
}

/// A domain literal as written in JSON: a string, number or boolean.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Literal {
    Text(String),
    Number(serde_json::Number),
    Flag(bool),
}

impl Literal {
    fn text(&self) -> String {
        match self {
            Literal::Text(s) => s.clone(),
            Literal::Number(n) => n.to_string(),
            Literal::Flag(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DomainFile {
    Values(Vec<Literal>),
    Range {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<Literal>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<Literal>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ColumnSpecFile {
    name: String,
    kind: ColumnKind,
    #[serde(default = "yes")]
    nullable: bool,
    #[serde(default)]
    required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainFile>,
    #[serde(default)]
    description: String,
    #[serde(default, skip_serializing_if = "TemporalRole::is_none")]
    temporal_role: TemporalRole,
}

fn yes() -> bool {
    true
}

impl TryFrom<ColumnSpecFile> for ColumnSpec {
    type Error = String;

    fn try_from(f: ColumnSpecFile) -> Result<Self, String> {
        let parse = |lit: &Literal| {
            f.kind
                .parse(&lit.text())
                .map_err(|e| format!("domain of column `{}`: {e}", f.name))
        };
        let domain = match &f.domain {
            None => None,
            Some(DomainFile::Values(vals)) => Some(Domain::Values(
                vals.iter().map(parse).collect::<Result<_, _>>()?,
            )),
            Some(DomainFile::Range { min, max }) => Some(Domain::Range {
                min: min.as_ref().map(parse).transpose()?,
                max: max.as_ref().map(parse).transpose()?,
            }),
        };
        Ok(ColumnSpec {
            name: f.name,
            kind: f.kind,
            nullable: f.nullable,
            required: f.required,
            domain,
            description: f.description,
            temporal_role: f.temporal_role,
        })
    }
}

impl From<ColumnSpec> for ColumnSpecFile {
    fn from(c: ColumnSpec) -> Self {
        let lit = |v: Value| Literal::Text(v.to_string());
        let domain = c.domain.map(|d| match d {
            Domain::Values(vals) => DomainFile::Values(vals.into_iter().map(lit).collect()),
            Domain::Range { min, max } => DomainFile::Range {
                min: min.map(lit),
                max: max.map(lit),
            },
        });
        ColumnSpecFile {
            name: c.name,
            kind: c.kind,
            nullable: c.nullable,
            required: c.required,
            domain,
            description: c.description,
            temporal_role: c.temporal_role,
        }
    }
}
