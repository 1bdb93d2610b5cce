use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use dwq_core::cleanse::{AppliesWhen, CellTarget, CorrectionRule, KeyPair, RowTarget, Strategy};
use dwq_core::tabular::{
    ColumnKind, ColumnSpec, CompareOp, Constraint, Dataset, Domain, Operand, Row, TableSchema,
    TemporalRole, Value, Warehouse,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_tables: usize,
    pub max_rows: usize,
    /// Probability that a table gets a foreign key to a random table.
    pub fk_chance: f64,
    /// Make the first two tables reference each other.
    pub force_cycle: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_tables: 3,
            max_rows: 50,
            fk_chance: 0.6,
            force_cycle: false,
        }
    }
}

const KINDS: [ColumnKind; 5] = [
    ColumnKind::Text,
    ColumnKind::Integer,
    ColumnKind::Decimal,
    ColumnKind::Timestamp,
    ColumnKind::Flag,
];
const TEXTS: [&str; 4] = ["a", "b", "c", "d"];
const OPS: [CompareOp; 6] = [
    CompareOp::Eq,
    CompareOp::Ne,
    CompareOp::Lt,
    CompareOp::Le,
    CompareOp::Gt,
    CompareOp::Ge,
];

fn ts(secs: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000 + secs, 0).expect("in range")
}

/// A value drawn from a small pool so duplicates and matches are common.
pub fn random_value(rng: &mut impl Rng, kind: ColumnKind) -> Value {
    match kind {
        ColumnKind::Text => Value::Text(TEXTS.choose(rng).unwrap().to_string()),
        ColumnKind::Integer => Value::Integer(rng.gen_range(-1..6)),
        ColumnKind::Decimal => Value::Decimal(Decimal::new(rng.gen_range(-2..12) * 5, 1)),
        ColumnKind::Timestamp => Value::Timestamp(ts(rng.gen_range(0..4) * 3600)),
        ColumnKind::Flag => Value::Flag(rng.gen_bool(0.5)),
    }
}

fn random_cell(rng: &mut impl Rng, kind: ColumnKind, null_chance: f64) -> Option<Value> {
    if rng.gen_bool(null_chance) {
        None
    } else {
        Some(random_value(rng, kind))
    }
}

fn random_domain(rng: &mut impl Rng, kind: ColumnKind) -> Option<Domain> {
    match kind {
        ColumnKind::Integer => Some(Domain::Range {
            min: Some(Value::Integer(0)),
            max: Some(Value::Integer(rng.gen_range(2..5))),
        }),
        ColumnKind::Decimal => Some(Domain::Range {
            min: None,
            max: Some(Value::Decimal(Decimal::new(35, 1))),
        }),
        ColumnKind::Text => Some(Domain::Values(vec![
            Value::Text("a".into()),
            Value::Text("b".into()),
        ])),
        ColumnKind::Timestamp | ColumnKind::Flag => None,
    }
}

fn described(rng: &mut impl Rng, text: &str) -> String {
    match rng.gen_range(0..4) {
        0 => String::new(),
        1 => "  ".into(),
        _ => text.to_string(),
    }
}

fn table_name(i: usize) -> String {
    format!("t{i}")
}

/// A random warehouse: every table has an integer `id` primary key (not
/// necessarily unique or non-NULL in the data), a few random columns, and
/// optional `ref_tJ` foreign keys. Constraints of every kind are sprinkled in.
pub fn random_warehouse(rng: &mut impl Rng, cfg: &GenConfig) -> Warehouse {
    let n_tables = rng.gen_range(1..=cfg.max_tables.max(1));
    let n_tables = if cfg.force_cycle {
        n_tables.max(2)
    } else {
        n_tables
    };
    let mut fks: Vec<Vec<usize>> = vec![Vec::new(); n_tables];
    for (t, refs) in fks.iter_mut().enumerate() {
        if rng.gen_bool(cfg.fk_chance) {
            refs.push(rng.gen_range(0..n_tables));
        }
        if rng.gen_bool(cfg.fk_chance / 3.0) {
            let p = rng.gen_range(0..n_tables);
            if !refs.contains(&p) {
                refs.push(p);
            }
        }
        if cfg.force_cycle && t < 2 {
            let other = 1 - t;
            if !refs.contains(&other) {
                refs.push(other);
            }
        }
    }

    let mut schemas = Vec::new();
    let mut datasets = Vec::new();
    let mut constraints = Vec::new();
    for (t, refs) in fks.iter().enumerate() {
        let name = table_name(t);
        let mut cols = vec![{
            let mut c =
                ColumnSpec::new("id", ColumnKind::Integer).described(described(rng, "row key"));
            c.nullable = rng.gen_bool(0.3);
            c.required = rng.gen_bool(0.5);
            c
        }];
        for j in 0..rng.gen_range(1..=4) {
            let kind = *KINDS.choose(rng).unwrap();
            let mut c = ColumnSpec::new(format!("c{j}"), kind).described(described(rng, "value"));
            c.nullable = rng.gen_bool(0.6);
            c.required = rng.gen_bool(0.4);
            if rng.gen_bool(0.4) {
                c.domain = random_domain(rng, kind);
            }
            cols.push(c);
        }
        if rng.gen_bool(0.5) {
            cols.push(
                ColumnSpec::new("tx", ColumnKind::Timestamp)
                    .with_temporal_role(TemporalRole::TransactionTime),
            );
        }
        if rng.gen_bool(0.5) {
            cols.push(
                ColumnSpec::new("vt", ColumnKind::Timestamp)
                    .with_temporal_role(TemporalRole::ValidTime),
            );
        }
        for &p in refs {
            cols.push(ColumnSpec::new(
                format!("ref_{}", table_name(p)),
                ColumnKind::Integer,
            ));
        }
        let schema = TableSchema::new(&name, cols, &["id"]).described(described(rng, "a table"));

        let n_rows = rng.gen_range(0..=cfg.max_rows);
        let id_pool = (n_rows as i64 / 2).max(2) + 2;
        let rows: Vec<Row> = (0..n_rows)
            .map(|r| {
                schema
                    .columns
                    .iter()
                    .map(|c| match c.name.as_str() {
                        "id" if rng.gen_bool(0.05) => None,
                        "id" if rng.gen_bool(0.85) => Some(Value::Integer(r as i64)),
                        "id" => Some(Value::Integer(rng.gen_range(0..id_pool))),
                        n if n.starts_with("ref_") => {
                            if rng.gen_bool(0.2) {
                                None
                            } else {
                                Some(Value::Integer(rng.gen_range(0..id_pool)))
                            }
                        }
                        _ => random_cell(rng, c.kind, 0.2),
                    })
                    .collect()
            })
            .collect();

        let mut k = 0;
        let next_id = |k: &mut usize| {
            *k += 1;
            format!("{name}_k{k}")
        };
        for c in &schema.columns {
            if c.name.starts_with("ref_") {
                continue;
            }
            if rng.gen_bool(0.3) {
                constraints.push(Constraint::not_null(&next_id(&mut k), &name, &c.name));
            }
            if c.domain.is_some() && rng.gen_bool(0.7) {
                constraints.push(Constraint::domain(&next_id(&mut k), &name, &c.name));
            }
        }
        if rng.gen_bool(0.6) {
            constraints.push(Constraint::unique(&next_id(&mut k), &name, &["id"]));
        }
        if rng.gen_bool(0.2) && schema.columns.len() > 2 {
            let other = &schema.columns[1].name;
            constraints.push(Constraint::unique(&next_id(&mut k), &name, &["id", other]));
        }
        for _ in 0..rng.gen_range(0..3) {
            let left = schema.columns.choose(rng).unwrap();
            let op = *OPS.choose(rng).unwrap();
            let right = if rng.gen_bool(0.5) {
                Operand::Literal(random_value(rng, left.kind).to_string())
            } else {
                let comparable: Vec<&ColumnSpec> = schema
                    .columns
                    .iter()
                    .filter(|o| {
                        o.name != left.name
                            && (o.kind == left.kind
                                || (o.kind.is_numeric() && left.kind.is_numeric()))
                    })
                    .collect();
                match comparable.choose(rng) {
                    Some(o) => Operand::Column(o.name.clone()),
                    None => Operand::Literal(random_value(rng, left.kind).to_string()),
                }
            };
            constraints.push(Constraint::check(
                &next_id(&mut k),
                &name,
                &left.name,
                op,
                right,
            ));
        }
        for &p in refs {
            let col = format!("ref_{}", table_name(p));
            constraints.push(Constraint::referential(
                &next_id(&mut k),
                &name,
                &[&col],
                &table_name(p),
                &["id"],
            ));
        }

        datasets.push(Dataset::new(&name, rows));
        schemas.push(schema);
    }
    Warehouse::new(schemas, datasets, constraints).expect("generated warehouse is well-formed")
}

/// Adds `baseline` as a uniquely keyed, partly perturbed copy of `table`.
/// Returns the new warehouse and the compared (non-key) columns.
pub fn with_baseline(rng: &mut impl Rng, w: &Warehouse, table: &str) -> (Warehouse, Vec<String>) {
    let (schema, data) = w.table(table).expect("table exists");
    let id = schema.column_index("id").expect("id column");
    let mut seen = BTreeSet::new();
    let mut rows: Vec<Row> = Vec::new();
    for row in &data.rows {
        let Some(Value::Integer(k)) = &row[id] else {
            continue;
        };
        if !seen.insert(*k) || rng.gen_bool(0.2) {
            continue;
        }
        let mut copy = row.clone();
        if rng.gen_bool(0.35) && copy.len() > 1 {
            let j = rng.gen_range(1..copy.len());
            copy[j] = random_cell(rng, schema.columns[j].kind, 0.3);
        }
        rows.push(copy);
    }
    for extra in 0..rng.gen_range(0..3) {
        let k = 1000 + extra;
        let mut row: Row = schema
            .columns
            .iter()
            .map(|c| random_cell(rng, c.kind, 0.2))
            .collect();
        row[id] = Some(Value::Integer(k));
        rows.push(row);
    }
    rows.shuffle(rng);
    let mut bschema = schema.clone();
    bschema.name = "baseline".into();
    let compared = schema
        .columns
        .iter()
        .filter(|c| c.name != "id")
        .map(|c| c.name.clone())
        .collect();

    let mut schemas: Vec<TableSchema> = w.schemas().cloned().collect();
    let mut datasets: Vec<Dataset> = w.datasets().cloned().collect();
    schemas.push(bschema);
    datasets.push(Dataset::new("baseline", rows));
    (
        Warehouse::new(schemas, datasets, w.constraints().to_vec())
            .expect("baseline is well-formed"),
        compared,
    )
}

/// Up to `max` distinct random row targets across all tables.
pub fn random_row_targets(rng: &mut impl Rng, w: &Warehouse, max: usize) -> BTreeSet<RowTarget> {
    let tables: Vec<(String, usize)> = w
        .datasets()
        .filter(|d| !d.is_empty())
        .map(|d| (d.table.clone(), d.len()))
        .collect();
    let mut out = BTreeSet::new();
    if tables.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(0..=max) {
        let (t, n) = tables.choose(rng).unwrap();
        out.insert(RowTarget::new(t.clone(), rng.gen_range(0..*n)));
    }
    out
}

/// Up to `max` random cells in nullable columns.
pub fn random_cell_targets(rng: &mut impl Rng, w: &Warehouse, max: usize) -> BTreeSet<CellTarget> {
    let mut candidates = Vec::new();
    for s in w.schemas() {
        let n = w.dataset(&s.name).map_or(0, Dataset::len);
        for c in s.columns.iter().filter(|c| c.nullable) {
            candidates.push((s.name.clone(), n, c.name.clone()));
        }
    }
    candidates.retain(|(_, n, _)| *n > 0);
    let mut out = BTreeSet::new();
    if candidates.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(0..=max) {
        let (t, n, c) = candidates.choose(rng).unwrap();
        out.insert(CellTarget::new(t.clone(), rng.gen_range(0..*n), c.clone()));
    }
    out
}

/// Random, valid correction rules. Lookup rules only target tables whose
/// `id` values are unique and non-NULL, so they never collide.
pub fn random_rules(rng: &mut impl Rng, w: &Warehouse) -> Vec<CorrectionRule> {
    let schemas: Vec<&TableSchema> = w.schemas().collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..4) {
        let s = *schemas.choose(rng).unwrap();
        let c = s.columns.choose(rng).unwrap();
        let applies_when = if rng.gen_bool(0.6) {
            AppliesWhen::Null
        } else {
            AppliesWhen::InViolation
        };
        let strategy = match rng.gen_range(0..3) {
            0 => Strategy::Default {
                value: random_value(rng, c.kind).to_string(),
            },
            1 => {
                let operands: Vec<&ColumnSpec> = s
                    .columns
                    .iter()
                    .filter(|o| o.name != c.name && o.kind.is_numeric())
                    .collect();
                match (c.kind, operands.choose(rng)) {
                    (ColumnKind::Integer | ColumnKind::Decimal, Some(o)) => {
                        let op = ["+", "-", "*", "/"].choose(rng).unwrap();
                        Strategy::Derive {
                            expression: format!("{} {op} {}", o.name, rng.gen_range(0..3)),
                        }
                    }
                    (ColumnKind::Text, Some(o)) => Strategy::Derive {
                        expression: format!("'x' || {}", o.name),
                    },
                    _ => Strategy::Default {
                        value: random_value(rng, c.kind).to_string(),
                    },
                }
            }
            _ => {
                let lookup = schemas.iter().find(|l| {
                    let d = w.dataset(&l.name).unwrap();
                    let i = l.column_index("id").unwrap();
                    let keys: BTreeSet<_> = d.rows.iter().filter_map(|r| r[i].clone()).collect();
                    keys.len() == d.len()
                        && l.columns.iter().any(|x| x.kind == c.kind && x.name != "id")
                });
                match lookup {
                    Some(l) => {
                        let value_column = l
                            .columns
                            .iter()
                            .filter(|x| x.kind == c.kind && x.name != "id")
                            .collect::<Vec<_>>();
                        Strategy::AlternateSource {
                            lookup_table: l.name.clone(),
                            key_mapping: vec![KeyPair {
                                column: "id".into(),
                                lookup_column: "id".into(),
                            }],
                            value_column: value_column.choose(rng).unwrap().name.clone(),
                        }
                    }
                    None => Strategy::Default {
                        value: random_value(rng, c.kind).to_string(),
                    },
                }
            }
        };
        if let Strategy::Derive { expression } = &strategy {
            if expression.contains(&c.name) {
                continue;
            }
        }
        rules.push(CorrectionRule {
            table: s.name.clone(),
            column: c.name.clone(),
            strategy,
            applies_when,
        });
    }
    rules
}
