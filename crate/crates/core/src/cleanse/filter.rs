use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::log::{row_text, Action, CleansingLog};
use super::CleanseError;
use crate::tabular::{cell_text, find_violations, key_of, ConstraintRule, Value, Warehouse};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowTarget {
    pub table: String,
    pub row: usize,
}

impl RowTarget {
    pub fn new(table: impl Into<String>, row: usize) -> Self {
        RowTarget {
            table: table.into(),
            row,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellTarget {
    pub table: String,
    pub row: usize,
    pub column: String,
}

impl CellTarget {
    pub fn new(table: impl Into<String>, row: usize, column: impl Into<String>) -> Self {
        CellTarget {
            table: table.into(),
            row,
            column: column.into(),
        }
    }
}

fn check_row(warehouse: &Warehouse, table: &str, row: usize) -> Result<(), CleanseError> {
    let (_, data) = warehouse.table(table)?;
    if row >= data.len() {
        return Err(CleanseError::OutOfRange {
            table: table.to_string(),
            row,
            rows: data.len(),
        });
    }
    Ok(())
}

/// NULLs the targeted cells. Every target column must be nullable; a
/// NULL-intolerant column needs a row filter instead.
pub fn filter_elements(
    warehouse: &Warehouse,
    targets: &BTreeSet<CellTarget>,
    log: &mut CleansingLog,
    reason: &str,
) -> Result<Warehouse, CleanseError> {
    let mut resolved = Vec::with_capacity(targets.len());
    for t in targets {
        check_row(warehouse, &t.table, t.row)?;
        let schema = warehouse.table(&t.table)?.0;
        let i = schema
            .column_index(&t.column)
            .ok_or_else(|| CleanseError::UnknownColumn {
                table: t.table.clone(),
                column: t.column.clone(),
            })?;
        if !schema.columns[i].nullable {
            return Err(CleanseError::NotNullable {
                table: t.table.clone(),
                row: t.row,
                column: t.column.clone(),
            });
        }
        resolved.push((t, i));
    }
    let mut w = warehouse.clone();
    for (t, i) in resolved {
        let data = w.dataset_mut(&t.table).expect("checked above");
        let old = data.rows[t.row][i].take();
        log.push(
            Action::FilterElement,
            &t.table,
            t.row,
            Some(&t.column),
            old.as_ref().map(Value::to_string),
            None,
            None,
            reason,
        );
    }
    Ok(w)
}

fn remove_rows(
    warehouse: &Warehouse,
    targets: &BTreeMap<RowTarget, String>,
    action: Action,
    log: &mut CleansingLog,
) -> Warehouse {
    let mut w = warehouse.clone();
    // highest index first so logged positions stay valid during replay
    for (t, reason) in targets.iter().rev() {
        let data = w.dataset_mut(&t.table).expect("targets were range-checked");
        let removed = data.rows.remove(t.row);
        log.push(
            action,
            &t.table,
            t.row,
            None,
            None,
            None,
            Some(row_text(&removed)),
            reason.clone(),
        );
    }
    w
}

/// Removes whole rows. Nothing cascades: children of a removed parent are
/// left dangling and show up in the next audit.
pub fn filter_rows(
    warehouse: &Warehouse,
    targets: &BTreeSet<RowTarget>,
    log: &mut CleansingLog,
    reason: &str,
) -> Result<Warehouse, CleanseError> {
    for t in targets {
        check_row(warehouse, &t.table, t.row)?;
    }
    let tagged = targets
        .iter()
        .map(|t| (t.clone(), reason.to_string()))
        .collect();
    Ok(remove_rows(warehouse, &tagged, Action::FilterRow, log))
}

/// The seeds plus every row whose foreign key references a removed row,
/// repeated to a fixpoint. Removal flows from parent to child only. Each
/// entry maps to the reason it was removed.
pub fn group_closure(
    warehouse: &Warehouse,
    seeds: &BTreeSet<RowTarget>,
) -> Result<BTreeMap<RowTarget, String>, CleanseError> {
    for t in seeds {
        check_row(warehouse, &t.table, t.row)?;
    }
    struct Edge<'a> {
        id: &'a str,
        child: &'a str,
        parent_cols: Vec<usize>,
        children_by_key: BTreeMap<Vec<Value>, Vec<usize>>,
    }
    let mut edges_by_parent: BTreeMap<&str, Vec<Edge>> = BTreeMap::new();
    for c in warehouse.constraints() {
        let ConstraintRule::Referential {
            columns,
            parent_table,
            parent_columns,
        } = &c.rule
        else {
            continue;
        };
        let (cschema, cdata) = warehouse.table(&c.table)?;
        let (pschema, _) = warehouse.table(parent_table)?;
        let ccols: Vec<usize> = columns
            .iter()
            .filter_map(|n| cschema.column_index(n))
            .collect();
        let pcols: Vec<usize> = parent_columns
            .iter()
            .filter_map(|n| pschema.column_index(n))
            .collect();
        let mut children_by_key: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
        for (r, row) in cdata.rows.iter().enumerate() {
            if let Some(k) = key_of(row, &ccols) {
                children_by_key.entry(k).or_default().push(r);
            }
        }
        edges_by_parent
            .entry(parent_table.as_str())
            .or_default()
            .push(Edge {
                id: &c.id,
                child: &c.table,
                parent_cols: pcols,
                children_by_key,
            });
    }

    let mut removed: BTreeMap<RowTarget, String> = seeds
        .iter()
        .map(|t| (t.clone(), "group seed".to_string()))
        .collect();
    let mut queue: VecDeque<RowTarget> = seeds.iter().cloned().collect();
    while let Some(parent) = queue.pop_front() {
        let Some(edges) = edges_by_parent.get(parent.table.as_str()) else {
            continue;
        };
        let prow = &warehouse.table(&parent.table)?.1.rows[parent.row];
        for edge in edges {
            let Some(k) = key_of(prow, &edge.parent_cols) else {
                continue;
            };
            for &r in edge.children_by_key.get(&k).into_iter().flatten() {
                let child = RowTarget::new(edge.child, r);
                if !removed.contains_key(&child) {
                    let reason = format!(
                        "group cascade via {} from {}[{}]",
                        edge.id, parent.table, parent.row
                    );
                    removed.insert(child.clone(), reason);
                    queue.push_back(child);
                }
            }
        }
    }
    Ok(removed)
}

/// Removes the seed rows together with every row that (transitively)
/// references them, so no surviving row points at a removed one.
pub fn filter_groups(
    warehouse: &Warehouse,
    seeds: &BTreeSet<RowTarget>,
    log: &mut CleansingLog,
) -> Result<Warehouse, CleanseError> {
    let closure = group_closure(warehouse, seeds)?;
    Ok(remove_rows(warehouse, &closure, Action::FilterGroup, log))
}

/// Rows appearing in a violation of any of the given constraints.
pub fn rows_violating(
    warehouse: &Warehouse,
    constraint_ids: &[String],
) -> Result<BTreeSet<RowTarget>, CleanseError> {
    Ok(find_violations(warehouse, Some(constraint_ids))?
        .into_iter()
        .map(|v| RowTarget::new(v.table, v.row_index))
        .collect())
}

/// Non-NULL cells named by violations of the given constraints.
pub fn cells_violating(
    warehouse: &Warehouse,
    constraint_ids: &[String],
) -> Result<BTreeSet<CellTarget>, CleanseError> {
    let mut out = BTreeSet::new();
    for v in find_violations(warehouse, Some(constraint_ids))? {
        let (schema, data) = warehouse.table(&v.table)?;
        for c in &v.columns {
            if let Some(i) = schema.column_index(c) {
                if cell_text(&data.rows[v.row_index][i]).is_some() {
                    out.insert(CellTarget::new(v.table.clone(), v.row_index, c.clone()));
                }
            }
        }
    }
    Ok(out)
}
