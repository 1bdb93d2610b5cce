//! Acceptance criteria, one PASS/FAIL line each on stderr.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use dwq_core::agents::{
    compute_defect_ratio, measure_accessibility, measure_accuracy_credibility,
    measure_completeness, measure_consistency, measure_currency, measure_interpretability,
    measure_volatility, DefectPredicateSet,
};
use dwq_core::cleanse::{
    correct, filter_elements, filter_groups, filter_rows, group_closure, replay, CleansingLog,
};
use dwq_core::evaluator::{evaluate_metric, Status};
use dwq_core::lint::{lint_pipeline, PipelineConfig, Severity};
use dwq_core::quality_model::{
    validate_model, AgentBinding, AgentKind, AgentParams, DefectSource, Interval, MetricSpec,
    ObjectRef, QualityModelDoc, QualityParameter, Unit,
};
use dwq_core::repository::Repository;
use dwq_core::tabular::{
    find_violations, ColumnKind, ColumnSpec, ConstraintRule, Dataset, TableSchema, TemporalRole,
    Value, Warehouse,
};
use dwq_core::Quantity;
use dwq_testkit::gen::{
    random_cell_targets, random_row_targets, random_rules, random_warehouse, with_baseline,
};
use dwq_testkit::model::random_model;
use dwq_testkit::{oracle, rng, GenConfig};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn at(secs: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(1_750_000_000 + secs, 0).unwrap()
}

fn worked_example() -> Outcome {
    let schema = TableSchema::new(
        "customers",
        vec![
            ColumnSpec::new("id", ColumnKind::Integer)
                .not_nullable()
                .required(),
            ColumnSpec::new("email", ColumnKind::Text).required(),
        ],
        &["id"],
    );
    let table = |incomplete: i64| {
        let rows = (0..10)
            .map(|i| {
                vec![
                    Some(Value::Integer(i)),
                    (i >= incomplete).then(|| Value::Text(format!("u{i}@x"))),
                ]
            })
            .collect();
        Dataset::new("customers", rows)
    };
    let spec = MetricSpec {
        id: "customer_completeness".into(),
        parameter: QualityParameter::Completeness,
        object_ref: ObjectRef::table("customers"),
        agent: AgentBinding::Automated(AgentKind::Completeness),
        unit: Unit::Percent,
        expected: Interval::new(Quantity::ZERO, Quantity::from_integer(40)),
        params: AgentParams::default(),
    };
    let mut seen = Vec::new();
    for (incomplete, value, status) in [(4, 40, Status::Pass), (5, 50, Status::Fail)] {
        let reading = measure_completeness(&table(incomplete), &schema);
        ensure!(
            reading.value == Quantity::from_integer(value),
            "{incomplete} incomplete gave {}",
            reading.value
        );
        let m = dwq_core::agents::Measurement {
            metric_id: spec.id.clone(),
            object_ref: spec.object_ref.clone(),
            actual_value: reading.value,
            unit: reading.unit,
            timestamp: at(0),
            agent_id: "completeness".into(),
            detail: reading.detail,
        };
        let verdict = evaluate_metric(Some(&m), &spec).map_err(|e| e.to_string())?;
        ensure!(
            verdict.status == status,
            "{value}% gave {:?}",
            verdict.status
        );
        seen.push(format!(
            "{}% {:?}",
            reading.value.to_fixed(1),
            verdict.status
        ));
    }
    Ok(seen.join(", "))
}

fn defect_ratio_properties() -> Outcome {
    let mut tables = 0;
    for seed in 0..250u64 {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        for table in w.table_names() {
            tables += 1;
            let rows = w.dataset(table).unwrap().len() as u64;
            let full = DefectPredicateSet::default_for(&w);
            let value = compute_defect_ratio(&w, table, &full)
                .map_err(|e| e.to_string())?
                .value;
            let defective = oracle::defective_count(&w, table, full.sources());
            let expected = if rows == 0 {
                Quantity::ONE
            } else {
                Quantity::ratio((rows - defective) as i128, rows as i128)
            };
            ensure!(
                value == expected,
                "seed {seed} {table}: {value} vs oracle {expected}"
            );
            ensure!(
                value >= Quantity::ZERO && value <= Quantity::ONE,
                "seed {seed} {table}: {value} out of [0, 1]"
            );
            ensure!(
                (value == Quantity::ONE) == (defective == 0),
                "seed {seed} {table}: 1.0 iff no defects broken"
            );

            // grow the predicate set one source at a time
            let mut sources: Vec<DefectSource> = vec![DefectSource::IncompleteRecord];
            sources.extend(
                w.constraint_ids()
                    .into_iter()
                    .map(|id| DefectSource::ViolationOf(vec![id])),
            );
            sources.shuffle(&mut g);
            let mut previous = Quantity::ONE;
            for n in 1..=sources.len() {
                let set =
                    DefectPredicateSet::new(sources[..n].to_vec()).map_err(|e| e.to_string())?;
                let v = compute_defect_ratio(&w, table, &set)
                    .map_err(|e| e.to_string())?
                    .value;
                ensure!(
                    v <= previous,
                    "seed {seed} {table}: adding a predicate raised {previous} to {v}"
                );
                previous = v;
            }
        }
    }
    Ok(format!("250 warehouses, {tables} tables"))
}

fn metric_oracles() -> Outcome {
    for seed in 0..250u64 {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        for s in w.schemas() {
            let d = w.dataset(&s.name).unwrap();
            let incomplete = oracle::incomplete_count(s, d);
            let want = if d.is_empty() {
                Quantity::ZERO
            } else {
                Quantity::percent(incomplete, d.len() as u64)
            };
            ensure!(
                measure_completeness(d, s).value == want,
                "seed {seed}: completeness of {}",
                s.name
            );
            ensure!(
                measure_accessibility(d, s).value == Quantity::from(oracle::accessibility(s, d)),
                "seed {seed}: accessibility of {}",
                s.name
            );
            let currency = measure_currency(d, s).ok().map(|r| r.value);
            let want =
                oracle::temporal_nulls(s, d, TemporalRole::TransactionTime).map(Quantity::from);
            ensure!(currency == want, "seed {seed}: currency of {}", s.name);
            let volatility = measure_volatility(d, s).ok().map(|r| r.value);
            let want = oracle::temporal_nulls(s, d, TemporalRole::ValidTime).map(Quantity::from);
            ensure!(volatility == want, "seed {seed}: volatility of {}", s.name);
        }
        ensure!(
            measure_interpretability(&w).value == Quantity::from(oracle::undescribed(&w)),
            "seed {seed}: interpretability"
        );
        let ids = w.constraint_ids();
        let consistency = measure_consistency(&w, &ids)
            .map_err(|e| e.to_string())?
            .value;
        ensure!(
            consistency == Quantity::from(oracle::consistency(&w, &ids)),
            "seed {seed}: consistency"
        );

        let table = w.table_names().next().unwrap().to_string();
        let (wb, compared) = with_baseline(&mut g, &w, &table);
        let data = wb.table(&table).unwrap();
        let base = wb.table("baseline").unwrap();
        let key = vec!["id".to_string()];
        let r =
            measure_accuracy_credibility(data, base, &key, &compared).map_err(|e| e.to_string())?;
        let (a, c, u) = oracle::accuracy(data, base, &key, &compared);
        ensure!(
            (r.accuracy.value, r.credibility.value, r.unmatched) == (a.into(), c.into(), u),
            "seed {seed}: accuracy/credibility"
        );
        ensure!(
            a + c + u == data.1.len() as u64,
            "seed {seed}: accuracy + credibility + unmatched != R"
        );
    }
    Ok("250 warehouses, 7 agents".into())
}

fn has_referential(w: &Warehouse) -> bool {
    w.constraints()
        .iter()
        .any(|c| matches!(c.rule, ConstraintRule::Referential { .. }))
}

fn group_filter_safety() -> Outcome {
    let (mut checked, mut cyclic, mut seed) = (0, 0, 0u64);
    while checked < 120 {
        seed += 1;
        let force_cycle = seed % 8 == 0;
        let mut g = rng(seed);
        let cfg = GenConfig {
            fk_chance: 0.9,
            force_cycle,
            ..GenConfig::default()
        };
        let w = random_warehouse(&mut g, &cfg);
        if w.table_names().count() < 2 || !has_referential(&w) {
            continue;
        }
        checked += 1;
        cyclic += force_cycle as usize;
        let seeds = random_row_targets(&mut g, &w, 4);
        let pairs: BTreeSet<(String, usize)> =
            seeds.iter().map(|t| (t.table.clone(), t.row)).collect();
        let removed: BTreeSet<(String, usize)> = group_closure(&w, &seeds)
            .map_err(|e| e.to_string())?
            .into_keys()
            .map(|t| (t.table, t.row))
            .collect();
        ensure!(
            removed == oracle::closure(&w, &pairs),
            "seed {seed}: closure differs from fixpoint oracle"
        );
        let out = filter_groups(&w, &seeds, &mut CleansingLog::new("a", at(0)))
            .map_err(|e| e.to_string())?;
        ensure!(
            w.total_rows() - out.total_rows() == removed.len(),
            "seed {seed}: removed count"
        );

        // map each surviving row back to its pre-state position
        let mut origin: BTreeMap<(String, usize), usize> = BTreeMap::new();
        for t in w.table_names() {
            let kept = (0..w.dataset(t).unwrap().len())
                .filter(|r| !removed.contains(&(t.to_string(), *r)));
            for (post, pre) in kept.enumerate() {
                origin.insert((t.to_string(), post), pre);
            }
        }
        let before: BTreeSet<(String, String, usize)> = find_violations(&w, None)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|v| (v.constraint_id, v.table, v.row_index))
            .collect();
        for v in find_violations(&out, None).map_err(|e| e.to_string())? {
            let c = out.constraint(&v.constraint_id).unwrap();
            if !matches!(c.rule, ConstraintRule::Referential { .. }) {
                continue;
            }
            let pre = origin[&(v.table.clone(), v.row_index)];
            ensure!(
                before.contains(&(v.constraint_id.clone(), v.table.clone(), pre)),
                "seed {seed}: {}[{pre}] lost its parent to the group filter",
                v.table
            );
        }
    }
    ensure!(cyclic > 0, "no cyclic warehouse generated");
    Ok(format!(
        "{checked} warehouses, {cyclic} with reference cycles"
    ))
}

fn log_replay() -> Outcome {
    let mut entries = 0;
    for seed in 0..200u64 {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        let mut log = CleansingLog::new(format!("r{seed}"), at(0));
        let mut cur = w.clone();
        for _ in 0..g.gen_range(1..8) {
            let step = match g.gen_range(0..4) {
                0 => filter_elements(
                    &cur,
                    &random_cell_targets(&mut g, &cur, 5),
                    &mut log,
                    "element",
                ),
                1 => filter_rows(&cur, &random_row_targets(&mut g, &cur, 5), &mut log, "row"),
                2 => filter_groups(&cur, &random_row_targets(&mut g, &cur, 3), &mut log),
                _ => {
                    let rules = random_rules(&mut g, &cur);
                    let violations = find_violations(&cur, None).map_err(|e| e.to_string())?;
                    correct(&cur, &rules, &violations, &mut log).map(|(w, _)| w)
                }
            };
            cur = step.map_err(|e| format!("seed {seed}: {e}"))?;
        }
        entries += log.len();
        let replayed = replay(&w, log.entries()).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(
            replayed == cur,
            "seed {seed}: replay differs from post-state"
        );
    }
    Ok(format!("200 sequences, {entries} log entries"))
}

type Breach = (&'static str, fn(&mut QualityModelDoc) -> bool, &'static str);

fn breaches() -> [Breach; 6] {
    [
        (
            "goal -> query",
            |m| {
                m.goals
                    .first_mut()
                    .map(|g| g.query_ids.push("nope_q".into()))
                    .is_some()
            },
            "nope_q",
        ),
        (
            "goal -> stakeholder",
            |m| {
                m.goals
                    .first_mut()
                    .map(|g| g.stakeholder_id = "nope_s".into())
                    .is_some()
            },
            "nope_s",
        ),
        (
            "goal -> dimension",
            |m| {
                m.goals
                    .first_mut()
                    .map(|g| g.dimension_id = "nope_d".into())
                    .is_some()
            },
            "nope_d",
        ),
        (
            "query -> metric",
            |m| {
                m.queries
                    .first_mut()
                    .map(|q| q.metric_ids.push("nope_m".into()))
                    .is_some()
            },
            "nope_m",
        ),
        (
            "automated agent on declared-only parameter",
            |m| {
                m.metrics
                    .first_mut()
                    .map(|s| {
                        s.parameter = QualityParameter::Maintainability;
                        s.agent = AgentBinding::Automated(AgentKind::Completeness);
                        s.unit = Unit::Percent;
                    })
                    .is_some()
            },
            "requires declared agent",
        ),
        (
            "malformed interval",
            |m| {
                m.metrics
                    .first_mut()
                    .map(|s| s.expected = Interval::new(Quantity::from_integer(2), Quantity::ONE))
                    .is_some()
            },
            "lo > hi",
        ),
    ]
}

fn model_round_trip() -> Outcome {
    let mut rejected = [0usize; 6];
    for seed in 0..120u64 {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        let m = random_model(&mut g, &w);
        let dir = tempfile::tempdir().unwrap();
        let repo = Repository::create(dir.path()).map_err(|e| e.to_string())?;
        repo.writer()
            .map_err(|e| e.to_string())?
            .save_model(&m)
            .map_err(|e| e.to_string())?;
        ensure!(
            repo.load_model().map_err(|e| e.to_string())? == m,
            "seed {seed}: round trip changed the model"
        );
        ensure!(
            validate_model(&m, &w).is_empty(),
            "seed {seed}: valid model rejected"
        );
        for (i, (name, breach, needle)) in breaches().iter().enumerate() {
            let mut bad = m.clone();
            if !breach(&mut bad) {
                continue;
            }
            let defects: Vec<String> = validate_model(&bad, &w)
                .iter()
                .map(|d| d.to_string())
                .collect();
            ensure!(
                defects.iter().any(|d| d.contains(needle)),
                "seed {seed}: {name} not reported: {defects:?}"
            );
            rejected[i] += 1;
        }
    }
    ensure!(
        rejected.iter().all(|&n| n > 0),
        "some breach never exercised: {rejected:?}"
    );
    Ok(format!(
        "120 models round-tripped, breaches rejected {rejected:?}"
    ))
}

fn end_to_end() -> Outcome {
    let ws = common::workspace();
    let p = ws.path();
    let first = common::dwq(p, &["--at", common::AT, "evaluate"]);
    ensure!(
        first.code == 1,
        "first evaluate exited {} ({})",
        first.code,
        first.stderr
    );
    common::golden("evaluate_before.txt", &first.stdout)?;
    let audit = common::dwq(p, &["--at", common::AT, "audit"]);
    ensure!(audit.code == 0, "audit exited {}", audit.code);
    common::golden("audit.txt", &audit.stdout)?;
    let audit_json = common::dwq(
        p,
        &[
            "--at",
            common::AT,
            "--format",
            "json",
            "audit",
            "--top-k",
            "2",
        ],
    );
    common::golden("audit.json", &audit_json.stdout)?;
    let filter = common::dwq(
        p,
        &[
            "--at",
            common::AT,
            "--run-id",
            "cleanse-1",
            "filter",
            "--mode",
            "row",
            "--violations",
            "orders_customer_fk,orders_qty_positive",
            "--reason",
            "constraint violation",
        ],
    );
    ensure!(
        filter.code == 0,
        "filter exited {} ({})",
        filter.code,
        filter.stderr
    );
    common::golden("filter.txt", &filter.stdout)?;
    let second = common::dwq(p, &["--at", common::LATER, "evaluate"]);
    common::golden("evaluate_after.txt", &second.stdout)?;
    ensure!(second.code == 0, "second evaluate exited {}", second.code);
    let history = common::dwq(p, &["history", "--metric", "orders_violating_rows"]);
    common::golden("history.txt", &history.stdout)?;
    Ok("exit 1 -> 0, 6 golden files".into())
}

fn lint_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let good = PipelineConfig {
        staging_integrity_constraints_enabled: true,
        metadata_repository_root: Some(dir.path().to_path_buf()),
        cleaning_rules_in_repository: true,
        source_validation_declared: true,
        notes: String::new(),
    };
    let errors = |c: &PipelineConfig| -> Vec<char> {
        lint_pipeline(c)
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .map(|f| f.item)
            .collect()
    };
    ensure!(
        errors(&good).is_empty(),
        "clean config reported {:?}",
        errors(&good)
    );
    let toggles: [(char, PipelineConfig); 4] = [
        (
            'i',
            PipelineConfig {
                staging_integrity_constraints_enabled: false,
                ..good.clone()
            },
        ),
        (
            'j',
            PipelineConfig {
                metadata_repository_root: None,
                ..good.clone()
            },
        ),
        (
            'j',
            PipelineConfig {
                metadata_repository_root: Some(dir.path().join("missing")),
                ..good.clone()
            },
        ),
        (
            'k',
            PipelineConfig {
                cleaning_rules_in_repository: false,
                ..good.clone()
            },
        ),
    ];
    for (item, cfg) in &toggles {
        ensure!(
            errors(cfg) == [*item],
            "toggling {item} gave errors {:?}",
            errors(cfg)
        );
    }
    Ok("items i, j (absent and unreadable), k".into())
}

/// Writes straight to stderr so the lines show even when the harness
/// captures test output.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        (
            "1 worked completeness example",
            worked_example,
            Duration::from_secs(1),
        ),
        (
            "2 defect-ratio properties",
            defect_ratio_properties,
            Duration::from_secs(30),
        ),
        (
            "3 metric-oracle equivalence",
            metric_oracles,
            Duration::from_secs(30),
        ),
        (
            "4 group-filter safety",
            group_filter_safety,
            Duration::from_secs(30),
        ),
        (
            "5 cleansing-log replay",
            log_replay,
            Duration::from_secs(30),
        ),
        (
            "6 metamodel round trip and rejection",
            model_round_trip,
            Duration::from_secs(30),
        ),
        ("7 end-to-end pipeline", end_to_end, Duration::from_secs(5)),
        ("8 lint contract", lint_contract, Duration::from_secs(1)),
    ];
    let mut failed = Vec::new();
    report("");
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > budget {
                Err(format!("took {elapsed:.2?}, budget {budget:?}"))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => report(&format!("PASS  {name}: {detail} ({elapsed:.2?})")),
            Err(why) => {
                report(&format!("FAIL  {name}: {why}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
