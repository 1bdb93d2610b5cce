//! On-disk warehouse layout.
//!
//! A warehouse directory holds one `<table>.schema.json` sidecar per table and
//! an optional `<table>.csv` data file. The sidecar carries the table schema
//! plus the constraints owned by that table (the child side for referential
//! constraints):
//!
//! ```json
//! {
//!   "name": "orders",
//!   "description": "Customer orders",
//!   "primary_key": ["order_id"],
//!   "columns": [
//!     {"name": "order_id", "kind": "integer", "nullable": false, "required": true},
//!     {"name": "status", "kind": "text", "domain": {"values": ["open", "closed"]}},
//!     {"name": "qty", "kind": "integer", "domain": {"range": {"min": 0, "max": 1000}}},
//!     {"name": "booked_at", "kind": "timestamp", "temporal_role": "transaction_time"}
//!   ],
//!   "constraints": [
//!     {"id": "orders_customer_fk", "kind": "referential", "columns": ["customer_id"],
//!      "parent_table": "customers", "parent_columns": ["customer_id"]}
//!   ]
//! }
//! ```
//!
//! CSV files are UTF-8 with a mandatory header row; an empty field is NULL.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::constraint::{Constraint, SidecarConstraint};
use super::schema::TableSchema;
use super::value::cell_text;
use super::warehouse::{Dataset, Warehouse};
use super::TabularError;

pub const SCHEMA_SUFFIX: &str = ".schema.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaSidecar {
    #[serde(flatten)]
    pub schema: TableSchema,
    #[serde(default)]
    pub constraints: Vec<SidecarConstraint>,
}

fn io_err(path: &Path, source: std::io::Error) -> TabularError {
    TabularError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads every table in `root`.
pub fn load_warehouse(root: &Path) -> Result<Warehouse, TabularError> {
    let mut sidecars: Vec<PathBuf> = Vec::new();
    let mut data_files: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| io_err(root, e))? {
        let path = entry.map_err(|e| io_err(root, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name.ends_with(SCHEMA_SUFFIX) {
            sidecars.push(path);
        } else if name.ends_with(".csv") {
            data_files.push(path);
        }
    }
    sidecars.sort();
    data_files.sort();

    let mut schemas: BTreeMap<String, TableSchema> = BTreeMap::new();
    let mut constraints = Vec::new();
    for path in &sidecars {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let sidecar: SchemaSidecar =
            serde_json::from_str(&text).map_err(|source| TabularError::Json {
                path: path.clone(),
                source,
            })?;
        let name = sidecar.schema.name.clone();
        if schemas.contains_key(&name) {
            return Err(TabularError::DuplicateTable(name));
        }
        constraints.extend(sidecar.constraints.into_iter().map(|c| Constraint {
            id: c.id,
            table: name.clone(),
            rule: c.rule,
        }));
        schemas.insert(name, sidecar.schema);
    }

    let mut datasets = Vec::new();
    for path in &data_files {
        let table = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".csv"))
            .unwrap_or_default()
            .to_string();
        let schema = schemas
            .get(&table)
            .ok_or_else(|| TabularError::MissingSchema(table.clone()))?;
        datasets.push(read_csv(path, schema)?);
    }

    Warehouse::new(schemas.into_values().collect(), datasets, constraints)
}

/// Reads one CSV file against its schema. Header columns may appear in any
/// order but must match the schema's column set exactly.
pub fn read_csv(path: &Path, schema: &TableSchema) -> Result<Dataset, TabularError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_csv_from(file, schema)
}

pub fn read_csv_from<R: std::io::Read>(
    reader: R,
    schema: &TableSchema,
) -> Result<Dataset, TabularError> {
    let table = schema.name.as_str();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let csv_err = |source: csv::Error| TabularError::Csv {
        table: table.to_string(),
        source,
    };
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() {
        return Err(TabularError::invalid(format!(
            "table `{table}`: data file has no header row"
        )));
    }
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = header.iter().position(|h| h == col.name).ok_or_else(|| {
            TabularError::invalid(format!(
                "table `{table}`: header lacks column `{}`",
                col.name
            ))
        })?;
        positions.push(pos);
    }
    if header.len() != schema.columns.len() {
        let extra: Vec<&str> = header
            .iter()
            .filter(|h| schema.column(h).is_none())
            .collect();
        return Err(TabularError::invalid(format!(
            "table `{table}`: header has columns not in the schema: {extra:?}"
        )));
    }
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut row = Vec::with_capacity(schema.columns.len());
        for (col, &pos) in schema.columns.iter().zip(&positions) {
            let cell = col.kind.parse_cell(record.get(pos)).map_err(|message| {
                TabularError::MalformedCell {
                    table: table.to_string(),
                    row: r,
                    column: col.name.clone(),
                    message,
                }
            })?;
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(Dataset::new(table, rows))
}

pub fn write_csv<W: std::io::Write>(
    writer: W,
    schema: &TableSchema,
    dataset: &Dataset,
) -> Result<(), TabularError> {
    let csv_err = |source: csv::Error| TabularError::Csv {
        table: schema.name.clone(),
        source,
    };
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(schema.columns.iter().map(|c| c.name.as_str()))
        .map_err(csv_err)?;
    for row in &dataset.rows {
        wtr.write_record(row.iter().map(|c| cell_text(c).unwrap_or_default()))
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| TabularError::Io {
        path: PathBuf::from(&schema.name),
        source: e,
    })?;
    Ok(())
}

/// Writes every table of `warehouse` into `root` (sidecar + CSV per table).
pub fn save_warehouse(warehouse: &Warehouse, root: &Path) -> Result<(), TabularError> {
    fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
    for schema in warehouse.schemas() {
        let sidecar = SchemaSidecar {
            schema: schema.clone(),
            constraints: warehouse
                .constraints_on(&schema.name)
                .map(|c| SidecarConstraint {
                    id: c.id.clone(),
                    rule: c.rule.clone(),
                })
                .collect(),
        };
        let path = root.join(format!("{}{SCHEMA_SUFFIX}", schema.name));
        let json = serde_json::to_string_pretty(&sidecar).map_err(|source| TabularError::Json {
            path: path.clone(),
            source,
        })?;
        write_atomic(&path, format!("{json}\n").as_bytes())?;

        let dataset = warehouse
            .dataset(&schema.name)
            .expect("dataset exists for every schema");
        let mut buf = Vec::new();
        write_csv(&mut buf, schema, dataset)?;
        write_atomic(&root.join(format!("{}.csv", schema.name)), &buf)?;
    }
    Ok(())
}

/// Write to a sibling temp file, then rename over the target.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TabularError> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
