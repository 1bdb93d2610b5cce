use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, NaiveDateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Text,
    Integer,
    Decimal,
    Timestamp,
    Flag,
}

impl ColumnKind {
    /// Kinds whose values have a meaningful min/max.
    pub fn is_ordered(self) -> bool {
        matches!(
            self,
            ColumnKind::Integer | ColumnKind::Decimal | ColumnKind::Timestamp
        )
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Integer | ColumnKind::Decimal)
    }

    /// Parses non-empty cell text. Empty text is NULL and never reaches here.
    pub fn parse(self, text: &str) -> Result<Value, String> {
        match self {
            ColumnKind::Text => Ok(Value::Text(text.to_string())),
            ColumnKind::Integer => text
                .trim()
                .parse::<i64>()
                .map(Value::Integer)
                .map_err(|_| format!("`{text}` is not an integer")),
            ColumnKind::Decimal => text
                .trim()
                .parse::<Decimal>()
                .map(Value::Decimal)
                .map_err(|_| format!("`{text}` is not a decimal")),
            ColumnKind::Timestamp => NaiveDateTime::parse_from_str(text.trim(), TIMESTAMP_FORMAT)
                .map(|t| Value::Timestamp(t.and_utc()))
                .map_err(|_| format!("`{text}` is not a YYYY-MM-DDTHH:MM:SSZ timestamp")),
            ColumnKind::Flag => match text.trim() {
                "true" => Ok(Value::Flag(true)),
                "false" => Ok(Value::Flag(false)),
                _ => Err(format!("`{text}` is not a flag (true/false)")),
            },
        }
    }

    /// Parses optional cell text; `None` or empty text is NULL.
    pub fn parse_cell(self, text: Option<&str>) -> Result<Cell, String> {
        match text {
            None | Some("") => Ok(None),
            Some(t) => self.parse(t).map(Some),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Text => "text",
            ColumnKind::Integer => "integer",
            ColumnKind::Decimal => "decimal",
            ColumnKind::Timestamp => "timestamp",
            ColumnKind::Flag => "flag",
        };
        f.write_str(s)
    }
}

/// A typed, non-NULL cell value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    Timestamp(DateTime<Utc>),
    Flag(bool),
}

/// A cell is a value or NULL.
pub type Cell = Option<Value>;

impl Value {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Value::Text(_) => ColumnKind::Text,
            Value::Integer(_) => ColumnKind::Integer,
            Value::Decimal(_) => ColumnKind::Decimal,
            Value::Timestamp(_) => ColumnKind::Timestamp,
            Value::Flag(_) => ColumnKind::Flag,
        }
    }

    /// Numeric view used by range domains and mixed integer/decimal arithmetic.
    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Value::Integer(i) => Some(Decimal::from(*i)),
            Value::Decimal(d) => Some(*d),
            _ => None,
        }
    }

    /// Compares two values of the same kind (integers and decimals compare
    /// numerically with each other). Other pairs are incomparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Timestamp(a), Value::Timestamp(b)) => Some(a.cmp(b)),
            (Value::Flag(a), Value::Flag(b)) => Some(a.cmp(b)),
            _ => match (self.as_decimal(), other.as_decimal()) {
                (Some(a), Some(b)) => Some(a.cmp(&b)),
                _ => None,
            },
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Total order: by kind first, then by value within the kind.
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind()
            .cmp(&other.kind())
            .then_with(|| self.compare(other).unwrap_or(Ordering::Equal))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Decimal(d) => write!(f, "{d}"),
            Value::Timestamp(t) => write!(f, "{}", t.format(TIMESTAMP_FORMAT)),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

/// Text form of a cell; NULL renders as `None`.
pub fn cell_text(cell: &Cell) -> Option<String> {
    cell.as_ref().map(|v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_each_kind() {
        assert_eq!(ColumnKind::Integer.parse("42").unwrap(), Value::Integer(42));
        assert!(ColumnKind::Integer.parse("abc").is_err());
        assert_eq!(
            ColumnKind::Decimal.parse("1.50").unwrap().to_string(),
            "1.50"
        );
        let ts = ColumnKind::Timestamp.parse("2024-03-01T12:00:00Z").unwrap();
        assert_eq!(ts.to_string(), "2024-03-01T12:00:00Z");
        assert!(ColumnKind::Timestamp.parse("2024-03-01 12:00:00").is_err());
        assert!(ColumnKind::Timestamp
            .parse("2024-03-01T12:00:00+01:00")
            .is_err());
        assert_eq!(ColumnKind::Flag.parse("true").unwrap(), Value::Flag(true));
        assert!(ColumnKind::Flag.parse("yes").is_err());
        assert_eq!(ColumnKind::Text.parse_cell(Some("")).unwrap(), None);
    }

    #[test]
    fn decimal_comparison_is_exact() {
        let a = ColumnKind::Decimal.parse("0.1").unwrap();
        let b = ColumnKind::Decimal.parse("0.10").unwrap();
        assert_eq!(a.compare(&b), Some(Ordering::Equal));
        assert_eq!(a, b);
        assert_eq!(
            Value::Integer(2).compare(&ColumnKind::Decimal.parse("1.99").unwrap()),
            Some(Ordering::Greater)
        );
        assert_eq!(Value::Flag(true).compare(&Value::Integer(1)), None);
    }
}
