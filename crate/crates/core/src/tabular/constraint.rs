use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=", alias = "≠", alias = "<>")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
}

impl CompareOp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    /// Evaluates `left op right`; `None` when the values are incomparable.
    pub fn eval(self, left: &Value, right: &Value) -> Option<bool> {
        left.compare(right).map(|o| self.holds(o))
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Right-hand side of a row check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Column(String),
    /// Text form, parsed with the left column's kind.
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintRule {
    NotNull {
        column: String,
    },
    /// Cell must lie in the column's declared domain.
    Domain {
        column: String,
    },
    Unique {
        columns: Vec<String>,
    },
    /// The owning table is the child.
    Referential {
        columns: Vec<String>,
        parent_table: String,
        parent_columns: Vec<String>,
    },
    Check {
        column: String,
        op: CompareOp,
        right: Operand,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub table: String,
    #[serde(flatten)]
    pub rule: ConstraintRule,
}

impl Constraint {
    pub fn new(id: impl Into<String>, table: impl Into<String>, rule: ConstraintRule) -> Self {
        Constraint {
            id: id.into(),
            table: table.into(),
            rule,
        }
    }

    pub fn not_null(id: &str, table: &str, column: &str) -> Self {
        Self::new(
            id,
            table,
            ConstraintRule::NotNull {
                column: column.into(),
            },
        )
    }

    pub fn domain(id: &str, table: &str, column: &str) -> Self {
        Self::new(
            id,
            table,
            ConstraintRule::Domain {
                column: column.into(),
            },
        )
    }

    pub fn unique(id: &str, table: &str, columns: &[&str]) -> Self {
        Self::new(
            id,
            table,
            ConstraintRule::Unique {
                columns: columns.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    pub fn referential(
        id: &str,
        child: &str,
        columns: &[&str],
        parent: &str,
        parent_columns: &[&str],
    ) -> Self {
        Self::new(
            id,
            child,
            ConstraintRule::Referential {
                columns: columns.iter().map(|s| s.to_string()).collect(),
                parent_table: parent.into(),
                parent_columns: parent_columns.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    pub fn check(id: &str, table: &str, column: &str, op: CompareOp, right: Operand) -> Self {
        Self::new(
            id,
            table,
            ConstraintRule::Check {
                column: column.into(),
                op,
                right,
            },
        )
    }

    /// Columns of the owning table this constraint inspects.
    pub fn columns(&self) -> Vec<String> {
        match &self.rule {
            ConstraintRule::NotNull { column } | ConstraintRule::Domain { column } => {
                vec![column.clone()]
            }
            ConstraintRule::Unique { columns } | ConstraintRule::Referential { columns, .. } => {
                columns.clone()
            }
            ConstraintRule::Check { column, right, .. } => match right {
                Operand::Column(other) => vec![column.clone(), other.clone()],
                Operand::Literal(_) => vec![column.clone()],
            },
        }
    }

    pub fn is_referential(&self) -> bool {
        matches!(self.rule, ConstraintRule::Referential { .. })
    }
}

/// A constraint as written in a schema sidecar: the owning table is implied
/// by the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarConstraint {
    pub id: String,
    #[serde(flatten)]
    pub rule: ConstraintRule,
}
