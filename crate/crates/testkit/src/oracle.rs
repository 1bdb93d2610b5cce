//! Naive scans. Everything here is quadratic on purpose and shares no code
//! with the engine beyond the data types.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use dwq_core::quality_model::DefectSource;
use dwq_core::tabular::{
    Cell, CompareOp, ConstraintRule, Dataset, Domain, Operand, Row, TableSchema, TemporalRole,
    Value, Warehouse,
};
use rust_decimal::Decimal;

fn numeric(v: &Value) -> Option<Decimal> {
    match v {
        Value::Integer(i) => Some(Decimal::from(*i)),
        Value::Decimal(d) => Some(*d),
        _ => None,
    }
}

/// Ordering of two non-NULL values, `None` when incomparable.
pub fn cmp_values(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        (Value::Timestamp(x), Value::Timestamp(y)) => Some(x.cmp(y)),
        (Value::Flag(x), Value::Flag(y)) => Some(x.cmp(y)),
        _ => Some(numeric(a)?.cmp(&numeric(b)?)),
    }
}

fn same(a: &Value, b: &Value) -> bool {
    cmp_values(a, b) == Some(Ordering::Equal)
}

/// Both cells non-NULL and equal.
fn cells_match(a: &Cell, b: &Cell) -> bool {
    matches!((a, b), (Some(x), Some(y)) if same(x, y))
}

fn in_domain(d: &Domain, v: &Value) -> bool {
    match d {
        Domain::Values(vals) => vals.iter().any(|x| same(x, v)),
        Domain::Range { min, max } => {
            let Some(n) = numeric(v) else { return false };
            let lo_ok = match min.as_ref().and_then(numeric) {
                Some(lo) => n >= lo,
                None => true,
            };
            let hi_ok = match max.as_ref().and_then(numeric) {
                Some(hi) => n <= hi,
                None => true,
            };
            lo_ok && hi_ok
        }
    }
}

fn op_holds(op: CompareOp, o: Ordering) -> bool {
    match op {
        CompareOp::Eq => o == Ordering::Equal,
        CompareOp::Ne => o != Ordering::Equal,
        CompareOp::Lt => o == Ordering::Less,
        CompareOp::Le => o == Ordering::Less || o == Ordering::Equal,
        CompareOp::Gt => o == Ordering::Greater,
        CompareOp::Ge => o == Ordering::Greater || o == Ordering::Equal,
    }
}

fn idx(schema: &TableSchema, name: &str) -> usize {
    schema
        .columns
        .iter()
        .position(|c| c.name == name)
        .expect("column exists")
}

/// Does row `r` of the constraint's table violate constraint `id`?
pub fn row_violates(w: &Warehouse, id: &str, r: usize) -> bool {
    let c = w
        .constraints()
        .iter()
        .find(|c| c.id == id)
        .expect("constraint exists");
    let schema = w.schema(&c.table).unwrap();
    let rows = &w.dataset(&c.table).unwrap().rows;
    let row = &rows[r];
    match &c.rule {
        ConstraintRule::NotNull { column } => row[idx(schema, column)].is_none(),
        ConstraintRule::Domain { column } => {
            let i = idx(schema, column);
            match (&row[i], &schema.columns[i].domain) {
                (Some(v), Some(d)) => !in_domain(d, v),
                _ => false,
            }
        }
        ConstraintRule::Unique { columns } => {
            let cols: Vec<usize> = columns.iter().map(|n| idx(schema, n)).collect();
            (0..rows.len())
                .any(|s| s != r && cols.iter().all(|&i| cells_match(&row[i], &rows[s][i])))
        }
        ConstraintRule::Referential {
            columns,
            parent_table,
            parent_columns,
        } => {
            let cols: Vec<usize> = columns.iter().map(|n| idx(schema, n)).collect();
            if cols.iter().any(|&i| row[i].is_none()) {
                return false;
            }
            let pschema = w.schema(parent_table).unwrap();
            let pcols: Vec<usize> = parent_columns.iter().map(|n| idx(pschema, n)).collect();
            let parents = &w.dataset(parent_table).unwrap().rows;
            !parents.iter().any(|p| {
                cols.iter()
                    .zip(&pcols)
                    .all(|(&ci, &pi)| cells_match(&row[ci], &p[pi]))
            })
        }
        ConstraintRule::Check { column, op, right } => {
            let i = idx(schema, column);
            let Some(left) = &row[i] else { return false };
            let rhs = match right {
                Operand::Column(n) => row[idx(schema, n)].clone(),
                Operand::Literal(t) => {
                    Some(schema.columns[i].kind.parse(t).expect("literal parses"))
                }
            };
            match rhs.and_then(|r| cmp_values(left, &r)) {
                Some(o) => !op_holds(*op, o),
                None => false,
            }
        }
    }
}

/// Every (constraint id, table, row) that fails, for the given constraints.
pub fn violations(w: &Warehouse, ids: &[String]) -> BTreeSet<(String, String, usize)> {
    let mut out = BTreeSet::new();
    for c in w.constraints().iter().filter(|c| ids.contains(&c.id)) {
        let n = w.dataset(&c.table).unwrap().rows.len();
        for r in 0..n {
            if row_violates(w, &c.id, r) {
                out.insert((c.id.clone(), c.table.clone(), r));
            }
        }
    }
    out
}

pub fn all_violations(w: &Warehouse) -> BTreeSet<(String, String, usize)> {
    violations(w, &w.constraint_ids())
}

pub fn is_incomplete(schema: &TableSchema, row: &Row) -> bool {
    schema
        .columns
        .iter()
        .zip(row)
        .any(|(c, v)| c.required && v.is_none())
}

pub fn incomplete_count(schema: &TableSchema, data: &Dataset) -> u64 {
    data.rows
        .iter()
        .filter(|r| is_incomplete(schema, r))
        .count() as u64
}

pub fn accessibility(schema: &TableSchema, data: &Dataset) -> u64 {
    let mut n = 0;
    for row in &data.rows {
        for (c, v) in schema.columns.iter().zip(row) {
            if !c.nullable && v.is_none() {
                n += 1;
            }
        }
    }
    n
}

/// NULL count in the column with `role`, or `None` if no column has it.
pub fn temporal_nulls(schema: &TableSchema, data: &Dataset, role: TemporalRole) -> Option<u64> {
    let i = schema
        .columns
        .iter()
        .position(|c| c.temporal_role == role)?;
    Some(data.rows.iter().filter(|r| r[i].is_none()).count() as u64)
}

pub fn undescribed(w: &Warehouse) -> u64 {
    let mut n = 0;
    for s in w.schemas() {
        if s.description.trim().is_empty() {
            n += 1;
        }
        n += s
            .columns
            .iter()
            .filter(|c| c.description.trim().is_empty())
            .count() as u64;
    }
    n
}

/// Distinct rows of `table` failing at least one of the constraints.
pub fn consistency(w: &Warehouse, ids: &[String]) -> u64 {
    violations(w, ids)
        .into_iter()
        .map(|(_, t, r)| (t, r))
        .collect::<BTreeSet<_>>()
        .len() as u64
}

pub fn defective_count(w: &Warehouse, table: &str, sources: &[DefectSource]) -> u64 {
    let schema = w.schema(table).unwrap();
    let data = w.dataset(table).unwrap();
    let table_constraints: Vec<String> = w
        .constraints()
        .iter()
        .filter(|c| c.table == table)
        .map(|c| c.id.clone())
        .collect();
    let mut n = 0;
    for (r, row) in data.rows.iter().enumerate() {
        let bad = sources.iter().any(|s| match s {
            DefectSource::IncompleteRecord => is_incomplete(schema, row),
            DefectSource::ViolationOf(ids) => ids
                .iter()
                .filter(|id| table_constraints.contains(id))
                .any(|id| row_violates(w, id, r)),
        });
        if bad {
            n += 1;
        }
    }
    n
}

/// (accurate, inaccurate, unmatched) by linear search of the baseline. NULL
/// agrees with NULL in compared cells; NULL keys never match.
pub fn accuracy(
    (schema, data): (&TableSchema, &Dataset),
    (bschema, bdata): (&TableSchema, &Dataset),
    key: &[String],
    compared: &[String],
) -> (u64, u64, u64) {
    let (mut acc, mut inacc, mut unmatched) = (0, 0, 0);
    for row in &data.rows {
        let found = bdata.rows.iter().find(|b| {
            key.iter()
                .all(|k| cells_match(&row[idx(schema, k)], &b[idx(bschema, k)]))
        });
        match found {
            None => unmatched += 1,
            Some(b) => {
                let agree = compared.iter().all(|c| {
                    let (x, y) = (&row[idx(schema, c)], &b[idx(bschema, c)]);
                    match (x, y) {
                        (None, None) => true,
                        (Some(x), Some(y)) => same(x, y),
                        _ => false,
                    }
                });
                if agree {
                    acc += 1
                } else {
                    inacc += 1
                }
            }
        }
    }
    (acc, inacc, unmatched)
}

/// Group-filter closure by repeated full passes until nothing changes.
pub fn closure(w: &Warehouse, seeds: &BTreeSet<(String, usize)>) -> BTreeSet<(String, usize)> {
    let mut removed = seeds.clone();
    loop {
        let mut grew = false;
        for c in w.constraints() {
            let ConstraintRule::Referential {
                columns,
                parent_table,
                parent_columns,
            } = &c.rule
            else {
                continue;
            };
            let cs = w.schema(&c.table).unwrap();
            let ps = w.schema(parent_table).unwrap();
            let children = &w.dataset(&c.table).unwrap().rows;
            let parents = &w.dataset(parent_table).unwrap().rows;
            for (cr, child) in children.iter().enumerate() {
                if removed.contains(&(c.table.clone(), cr)) {
                    continue;
                }
                let hit = parents.iter().enumerate().any(|(pr, parent)| {
                    removed.contains(&(parent_table.clone(), pr))
                        && columns
                            .iter()
                            .zip(parent_columns)
                            .all(|(a, b)| cells_match(&child[idx(cs, a)], &parent[idx(ps, b)]))
                });
                if hit {
                    removed.insert((c.table.clone(), cr));
                    grew = true;
                }
            }
        }
        if !grew {
            return removed;
        }
    }
}
