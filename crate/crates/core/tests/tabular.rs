use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use dwq_core::tabular::{
    find_violations, load_warehouse, profile_columns, save_warehouse, ColumnKind, ColumnSpec,
    Constraint, Dataset, TableSchema, TabularError, Value, Warehouse,
};
use dwq_testkit::gen::random_warehouse;
use dwq_testkit::{oracle, rng, GenConfig};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

const ITEMS_SCHEMA: &str = r#"{
  "name": "items",
  "primary_key": ["id"],
  "columns": [
    {"name": "id", "kind": "integer", "nullable": false},
    {"name": "label", "kind": "text"}
  ]
}"#;

#[test]
fn empty_directory_loads_as_empty_warehouse() {
    let dir = tempfile::tempdir().unwrap();
    let w = load_warehouse(dir.path()).unwrap();
    assert_eq!(w.table_names().count(), 0);
}

#[test]
fn three_valid_rows_load() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "items.schema.json", ITEMS_SCHEMA);
    write(
        dir.path(),
        "items.csv",
        "id,label\n1,a\n2,\"b, quoted\"\n3,\n",
    );
    let w = load_warehouse(dir.path()).unwrap();
    let (_, d) = w.table("items").unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.rows[1][1], Some(Value::Text("b, quoted".into())));
    assert_eq!(d.rows[2][1], None);
}

#[test]
fn malformed_cell_names_its_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "items.schema.json", ITEMS_SCHEMA);
    write(dir.path(), "items.csv", "id,label\n1,a\nabc,b\n");
    match load_warehouse(dir.path()) {
        Err(TabularError::MalformedCell {
            table, row, column, ..
        }) => {
            assert_eq!((table.as_str(), row, column.as_str()), ("items", 1, "id"));
        }
        other => panic!("expected malformed cell, got {other:?}"),
    }
}

#[test]
fn data_file_without_schema_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "orphan.csv", "id\n1\n");
    assert!(matches!(
        load_warehouse(dir.path()),
        Err(TabularError::MissingSchema(_))
    ));
}

#[test]
fn duplicate_table_name_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "items.schema.json", ITEMS_SCHEMA);
    write(dir.path(), "copy.schema.json", ITEMS_SCHEMA);
    assert!(matches!(
        load_warehouse(dir.path()),
        Err(TabularError::DuplicateTable(_))
    ));
}

fn int(i: i64) -> Option<Value> {
    Some(Value::Integer(i))
}

#[test]
fn no_constraints_no_violations() {
    let s = TableSchema::new(
        "t",
        vec![ColumnSpec::new("id", ColumnKind::Integer)],
        &["id"],
    );
    let w = Warehouse::new(
        vec![s],
        vec![Dataset::new("t", vec![vec![None], vec![int(1)]])],
        vec![],
    )
    .unwrap();
    assert!(find_violations(&w, None).unwrap().is_empty());
}

#[test]
fn not_null_on_column_with_two_nulls() {
    let s = TableSchema::new(
        "t",
        vec![
            ColumnSpec::new("id", ColumnKind::Integer),
            ColumnSpec::new("v", ColumnKind::Integer),
        ],
        &["id"],
    );
    let rows = vec![
        vec![int(0), int(5)],
        vec![int(1), None],
        vec![int(2), int(7)],
        vec![int(3), None],
        vec![int(4), int(9)],
    ];
    let w = Warehouse::new(
        vec![s],
        vec![Dataset::new("t", rows)],
        vec![Constraint::not_null("nn", "t", "v")],
    )
    .unwrap();
    let v = find_violations(&w, None).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(v.iter().map(|x| x.row_index).collect::<Vec<_>>(), [1, 3]);
    assert_eq!(v.len(), oracle::all_violations(&w).len());
}

#[test]
fn one_dangling_foreign_key() {
    let parent = TableSchema::new(
        "p",
        vec![ColumnSpec::new("id", ColumnKind::Integer)],
        &["id"],
    );
    let child = TableSchema::new(
        "c",
        vec![
            ColumnSpec::new("id", ColumnKind::Integer),
            ColumnSpec::new("pid", ColumnKind::Integer),
        ],
        &["id"],
    );
    let w = Warehouse::new(
        vec![parent, child],
        vec![
            Dataset::new("p", vec![vec![int(1)], vec![int(2)]]),
            Dataset::new(
                "c",
                vec![
                    vec![int(10), int(1)],
                    vec![int(11), int(9)],
                    vec![int(12), None],
                ],
            ),
        ],
        vec![Constraint::referential("fk", "c", &["pid"], "p", &["id"])],
    )
    .unwrap();
    let v = find_violations(&w, None).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(
        (
            v[0].table.as_str(),
            v[0].row_index,
            v[0].constraint_id.as_str()
        ),
        ("c", 1, "fk")
    );
}

#[test]
fn profile_of_small_column() {
    let s = TableSchema::new("t", vec![ColumnSpec::new("v", ColumnKind::Integer)], &["v"]);
    let d = Dataset::new(
        "t",
        vec![vec![int(1)], vec![int(1)], vec![int(2)], vec![None]],
    );
    let p = &profile_columns(&d, &s)[0];
    assert_eq!(
        (p.null_count, p.non_null_count, p.distinct_count),
        (1, 3, 2)
    );
    assert_eq!((p.min.as_deref(), p.max.as_deref()), (Some("1"), Some("2")));
    assert_eq!(p.top_values[0].value, "1");
    assert_eq!(p.top_values[0].count, 2);
}

#[test]
fn profile_of_empty_and_all_null_columns() {
    let s = TableSchema::new("t", vec![ColumnSpec::new("v", ColumnKind::Decimal)], &["v"]);
    let p = &profile_columns(&Dataset::empty("t"), &s)[0];
    assert_eq!(
        (p.null_count, p.non_null_count, p.distinct_count),
        (0, 0, 0)
    );
    assert!(p.min.is_none() && p.max.is_none());

    let p = &profile_columns(&Dataset::new("t", vec![vec![None]; 4]), &s)[0];
    assert_eq!((p.null_count, p.distinct_count), (4, 0));
    assert!(p.min.is_none());
}

fn as_set(w: &Warehouse) -> BTreeSet<(String, String, usize)> {
    find_violations(w, None)
        .unwrap()
        .into_iter()
        .map(|v| (v.constraint_id, v.table, v.row_index))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn violations_match_double_loop_oracle(seed in any::<u64>()) {
        let cfg = GenConfig { max_tables: 5, ..GenConfig::default() };
        let w = random_warehouse(&mut rng(seed), &cfg);
        let first = find_violations(&w, None).unwrap();
        // one entry per failing (row, constraint) pair
        prop_assert_eq!(first.len(), as_set(&w).len());
        prop_assert_eq!(as_set(&w), oracle::all_violations(&w));
        prop_assert_eq!(&first, &find_violations(&w, None).unwrap());
        let mut sorted = first.clone();
        sorted.sort_by(|a, b| (&a.table, a.row_index, &a.constraint_id).cmp(&(&b.table, b.row_index, &b.constraint_id)));
        prop_assert_eq!(first, sorted);
    }

    #[test]
    fn profile_counts_cover_every_cell(seed in any::<u64>()) {
        let w = random_warehouse(&mut rng(seed), &GenConfig::default());
        for s in w.schemas() {
            let d = w.dataset(&s.name).unwrap();
            let profiles = profile_columns(d, s);
            prop_assert_eq!(profiles.len(), s.columns.len());
            let cells: usize = profiles.iter().map(|p| p.null_count + p.non_null_count).sum();
            prop_assert_eq!(cells, s.columns.len() * d.len());
            for p in &profiles {
                prop_assert!(p.distinct_count <= d.len());
            }
        }
    }

    #[test]
    fn save_and_reload_is_identity(seed in any::<u64>()) {
        let w = random_warehouse(&mut rng(seed), &GenConfig::default());
        let dir = tempfile::tempdir().unwrap();
        save_warehouse(&w, dir.path()).unwrap();
        let back = load_warehouse(dir.path()).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(back.fingerprint(), w.fingerprint());
    }
}
