use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::constraint::{Constraint, ConstraintRule, Operand};
use super::schema::TableSchema;
use super::value::{cell_text, Cell};
use super::TabularError;

pub type Row = Vec<Cell>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub table: String,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(table: impl Into<String>, rows: Vec<Row>) -> Self {
        Dataset {
            table: table.into(),
            rows,
        }
    }

    pub fn empty(table: impl Into<String>) -> Self {
        Self::new(table, Vec::new())
    }

    /// R, the record count.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks width and cell kinds against the schema.
    pub fn check(&self, schema: &TableSchema) -> Result<(), TabularError> {
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != schema.columns.len() {
                return Err(TabularError::invalid(format!(
                    "table `{}` row {r} has {} cells, schema has {} columns",
                    self.table,
                    row.len(),
                    schema.columns.len()
                )));
            }
            for (cell, col) in row.iter().zip(&schema.columns) {
                if let Some(v) = cell {
                    if v.kind() != col.kind {
                        return Err(TabularError::MalformedCell {
                            table: self.table.clone(),
                            row: r,
                            column: col.name.clone(),
                            message: format!("{} value in {} column", v.kind(), col.kind),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tables, their data and the integrity constraints defined over them.
/// Every schema has a dataset (possibly empty) and vice versa.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Warehouse {
    schemas: BTreeMap<String, TableSchema>,
    datasets: BTreeMap<String, Dataset>,
    constraints: Vec<Constraint>,
}

impl Warehouse {
    /// Builds a warehouse and checks every structural invariant. Tables
    /// without a dataset get an empty one.
    pub fn new(
        schemas: Vec<TableSchema>,
        datasets: Vec<Dataset>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, TabularError> {
        let mut schema_map = BTreeMap::new();
        for s in schemas {
            s.check().map_err(TabularError::invalid)?;
            if schema_map.contains_key(&s.name) {
                return Err(TabularError::DuplicateTable(s.name));
            }
            schema_map.insert(s.name.clone(), s);
        }
        let mut data_map = BTreeMap::new();
        for d in datasets {
            let Some(schema) = schema_map.get(&d.table) else {
                return Err(TabularError::MissingSchema(d.table));
            };
            d.check(schema)?;
            if data_map.contains_key(&d.table) {
                return Err(TabularError::DuplicateTable(d.table));
            }
            data_map.insert(d.table.clone(), d);
        }
        for name in schema_map.keys() {
            data_map
                .entry(name.clone())
                .or_insert_with(|| Dataset::empty(name.clone()));
        }
        let w = Warehouse {
            schemas: schema_map,
            datasets: data_map,
            constraints,
        };
        w.check_constraints()?;
        Ok(w)
    }

    fn check_constraints(&self) -> Result<(), TabularError> {
        let mut ids = BTreeSet::new();
        for c in &self.constraints {
            let bad = |msg: String| TabularError::invalid(format!("constraint `{}`: {msg}", c.id));
            if !ids.insert(c.id.as_str()) {
                return Err(bad("duplicate constraint id".into()));
            }
            let schema = self
                .schemas
                .get(&c.table)
                .ok_or_else(|| bad(format!("unknown table `{}`", c.table)))?;
            for col in c.columns() {
                if schema.column(&col).is_none() {
                    return Err(bad(format!("unknown column `{}.{col}`", c.table)));
                }
            }
            match &c.rule {
                ConstraintRule::NotNull { .. } => {}
                ConstraintRule::Domain { column } => {
                    if schema.column(column).is_some_and(|s| s.domain.is_none()) {
                        return Err(bad(format!(
                            "column `{}.{column}` declares no domain",
                            c.table
                        )));
                    }
                }
                ConstraintRule::Unique { columns } => {
                    if columns.is_empty() {
                        return Err(bad("unique constraint needs at least one column".into()));
                    }
                }
                ConstraintRule::Referential {
                    columns,
                    parent_table,
                    parent_columns,
                } => {
                    let parent = self
                        .schemas
                        .get(parent_table)
                        .ok_or_else(|| bad(format!("unknown parent table `{parent_table}`")))?;
                    if columns.is_empty() || columns.len() != parent_columns.len() {
                        return Err(bad("child and parent column lists differ in length".into()));
                    }
                    for (cc, pc) in columns.iter().zip(parent_columns) {
                        let pspec = parent
                            .column(pc)
                            .ok_or_else(|| bad(format!("unknown column `{parent_table}.{pc}`")))?;
                        let ckind = schema.column(cc).map(|s| s.kind);
                        if ckind != Some(pspec.kind) {
                            return Err(bad(format!(
                                "`{}.{cc}` and `{parent_table}.{pc}` have incompatible kinds",
                                c.table
                            )));
                        }
                    }
                }
                ConstraintRule::Check { column, right, .. } => {
                    let kind = schema
                        .column(column)
                        .map(|s| s.kind)
                        .unwrap_or(super::ColumnKind::Text);
                    match right {
                        Operand::Literal(text) => {
                            kind.parse(text).map_err(|e| bad(format!("literal: {e}")))?;
                        }
                        Operand::Column(other) => {
                            let okind = schema.column(other).map(|s| s.kind).unwrap_or(kind);
                            if okind != kind && !(kind.is_numeric() && okind.is_numeric()) {
                                return Err(bad(format!(
                                    "`{column}` and `{other}` are not comparable"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(String::as_str)
    }

    pub fn schemas(&self) -> impl Iterator<Item = &TableSchema> {
        self.schemas.values()
    }

    pub fn schema(&self, table: &str) -> Option<&TableSchema> {
        self.schemas.get(table)
    }

    pub fn dataset(&self, table: &str) -> Option<&Dataset> {
        self.datasets.get(table)
    }

    pub fn datasets(&self) -> impl Iterator<Item = &Dataset> {
        self.datasets.values()
    }

    pub fn table(&self, table: &str) -> Result<(&TableSchema, &Dataset), TabularError> {
        match (self.schemas.get(table), self.datasets.get(table)) {
            (Some(s), Some(d)) => Ok((s, d)),
            _ => Err(TabularError::UnknownTable(table.to_string())),
        }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    pub fn constraint_ids(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.id.clone()).collect()
    }

    pub fn constraints_on(&self, table: &str) -> impl Iterator<Item = &Constraint> {
        let table = table.to_string();
        self.constraints.iter().filter(move |c| c.table == table)
    }

    /// Resolves a constraint subset, failing on the first unknown id.
    pub fn select_constraints(&self, ids: &[String]) -> Result<Vec<&Constraint>, TabularError> {
        ids.iter()
            .map(|id| {
                self.constraint(id)
                    .ok_or_else(|| TabularError::UnknownConstraint(id.clone()))
            })
            .collect()
    }

    /// Replaces one table's rows. The new rows are checked against the schema.
    pub fn with_rows(&self, table: &str, rows: Vec<Row>) -> Result<Warehouse, TabularError> {
        let (schema, _) = self.table(table)?;
        let d = Dataset::new(table, rows);
        d.check(schema)?;
        let mut w = self.clone();
        w.datasets.insert(table.to_string(), d);
        Ok(w)
    }

    pub(crate) fn dataset_mut(&mut self, table: &str) -> Option<&mut Dataset> {
        self.datasets.get_mut(table)
    }

    pub fn total_rows(&self) -> usize {
        self.datasets.values().map(Dataset::len).sum()
    }

    /// Content fingerprint over schemas, constraints and cells.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            schemas: Vec<&'a TableSchema>,
            constraints: &'a [Constraint],
            rows: Vec<(&'a str, Vec<Vec<Option<String>>>)>,
        }
        let canonical = Canonical {
            schemas: self.schemas.values().collect(),
            constraints: &self.constraints,
            rows: self
                .datasets
                .values()
                .map(|d| {
                    (
                        d.table.as_str(),
                        d.rows
                            .iter()
                            .map(|r| r.iter().map(cell_text).collect())
                            .collect(),
                    )
                })
                .collect(),
        };
        let bytes = serde_json::to_vec(&canonical).unwrap_or_default();
        let digest = Sha256::digest(&bytes);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
