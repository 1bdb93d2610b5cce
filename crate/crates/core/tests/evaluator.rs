use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use dwq_core::agents::{measure_all, Measurement};
use dwq_core::evaluator::{
    build_report, evaluate_goal, evaluate_metric, EvalError, GoalStatus, Status, Verdict,
    WarehouseIdentity,
};
use dwq_core::quality_model::{
    resolve_goal, AgentBinding, AgentKind, AgentParams, Interval, MetricSpec, ObjectRef,
    QualityDimension, QualityGoal, QualityModelDoc, QualityParameter, QualityQuery, QueryRule,
    Stakeholder, StakeholderRole, Unit,
};
use dwq_core::Quantity;
use dwq_testkit::gen::random_warehouse;
use dwq_testkit::model::random_model;
use dwq_testkit::{rng, GenConfig};
use proptest::prelude::*;
use rand::Rng;

fn at(secs: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(1_750_000_000 + secs, 0).unwrap()
}

fn completeness_spec(id: &str) -> MetricSpec {
    MetricSpec {
        id: id.into(),
        parameter: QualityParameter::Completeness,
        object_ref: ObjectRef::table("t"),
        agent: AgentBinding::Automated(AgentKind::Completeness),
        unit: Unit::Percent,
        expected: Interval::at_most(Quantity::from_integer(40)),
        params: AgentParams::default(),
    }
}

fn measured(spec: &MetricSpec, value: &str) -> Measurement {
    Measurement {
        metric_id: spec.id.clone(),
        object_ref: spec.object_ref.clone(),
        actual_value: value.parse().unwrap(),
        unit: spec.unit,
        timestamp: at(0),
        agent_id: "completeness".into(),
        detail: None,
    }
}

#[test]
fn inclusive_boundary() {
    let spec = completeness_spec("m1");
    assert_eq!(
        evaluate_metric(Some(&measured(&spec, "40.0")), &spec)
            .unwrap()
            .status,
        Status::Pass
    );
    assert_eq!(
        evaluate_metric(Some(&measured(&spec, "40.01")), &spec)
            .unwrap()
            .status,
        Status::Fail
    );
    assert_eq!(
        evaluate_metric(Some(&measured(&spec, "0")), &spec)
            .unwrap()
            .status,
        Status::Pass
    );
    let missing = evaluate_metric(None, &spec).unwrap();
    assert_eq!(
        (missing.status, missing.actual_value),
        (Status::Missing, None)
    );

    let mut wrong = measured(&spec, "1");
    wrong.unit = Unit::Count;
    assert!(matches!(
        evaluate_metric(Some(&wrong), &spec),
        Err(EvalError::UnitMismatch { .. })
    ));
}

fn three_metric_model() -> QualityModelDoc {
    QualityModelDoc {
        stakeholders: vec![Stakeholder {
            id: "s".into(),
            name: "Exec".into(),
            role: StakeholderRole::ExecutiveManager,
            concerns: vec![],
        }],
        dimensions: vec![QualityDimension {
            id: "d".into(),
            name: "believability".into(),
            description: String::new(),
        }],
        goals: vec![QualityGoal {
            id: "g".into(),
            stakeholder_id: "s".into(),
            purpose: "trust the numbers".into(),
            dimension_id: "d".into(),
            object_ref: ObjectRef::table("t"),
            query_ids: vec!["q1".into(), "q2".into()],
        }],
        queries: vec![
            QualityQuery {
                id: "q1".into(),
                metric_ids: vec!["a".into(), "b".into()],
                rule: QueryRule::All,
            },
            QualityQuery {
                id: "q2".into(),
                metric_ids: vec!["c".into()],
                rule: QueryRule::All,
            },
        ],
        metrics: vec![
            completeness_spec("a"),
            completeness_spec("b"),
            completeness_spec("c"),
        ],
    }
}

fn verdicts(model: &QualityModelDoc, statuses: &[(&str, Status)]) -> BTreeMap<String, Verdict> {
    statuses
        .iter()
        .map(|(id, s)| {
            let spec = model.metric(id).unwrap();
            let mut v = evaluate_metric(Some(&measured(spec, "1")), spec).unwrap();
            v.status = *s;
            (id.to_string(), v)
        })
        .collect()
}

#[test]
fn goal_roll_up() {
    use Status::*;
    let m = three_metric_model();
    let status = |s: &[(&str, Status)]| evaluate_goal(&m, "g", &verdicts(&m, s)).unwrap().status;
    assert_eq!(
        status(&[("a", Pass), ("b", Pass), ("c", Pass)]),
        GoalStatus::Achieved
    );
    assert_eq!(
        status(&[("a", Pass), ("b", Fail), ("c", Pass)]),
        GoalStatus::NotAchieved
    );
    assert_eq!(
        status(&[("a", Pass), ("b", Missing), ("c", Pass)]),
        GoalStatus::Indeterminate
    );
    assert_eq!(
        status(&[("a", Pass), ("c", Pass)]),
        GoalStatus::Indeterminate
    );
    assert_eq!(
        status(&[("a", Missing), ("c", Fail)]),
        GoalStatus::NotAchieved
    );
}

fn identity() -> WarehouseIdentity {
    WarehouseIdentity {
        name: "wh".into(),
        fingerprint: "00".into(),
    }
}

#[test]
fn report_shapes() {
    let empty = build_report(
        &QualityModelDoc::default(),
        &[],
        identity(),
        at(0),
        vec![],
        vec![],
    )
    .unwrap();
    assert!(empty.goals.is_empty() && empty.verdicts.is_empty());

    let mut m = three_metric_model();
    m.queries = vec![QualityQuery {
        id: "q1".into(),
        metric_ids: vec!["a".into()],
        rule: QueryRule::All,
    }];
    m.goals[0].query_ids = vec!["q1".into()];
    m.metrics.truncate(1);
    let spec = &m.metrics[0];
    let r = build_report(
        &m,
        &[measured(spec, "40")],
        identity(),
        at(1),
        vec![],
        vec![],
    )
    .unwrap();
    assert_eq!(r.goals.len(), 1);
    assert_eq!(r.goals[0].status, GoalStatus::Achieved);
    assert_eq!(r.tally.achieved, 1);

    // the newest measurement wins
    let mut late = measured(spec, "41");
    late.timestamp = at(9);
    let r = build_report(
        &m,
        &[late, measured(spec, "40")],
        identity(),
        at(1),
        vec![],
        vec![],
    )
    .unwrap();
    assert_eq!(r.goals[0].status, GoalStatus::NotAchieved);
}

/// Goal status recomputed straight from the metric statuses it reaches.
fn oracle_goal(
    model: &QualityModelDoc,
    goal: &QualityGoal,
    verdicts: &BTreeMap<String, Verdict>,
) -> GoalStatus {
    let mut any_fail = false;
    let mut any_missing = false;
    for q in &goal.query_ids {
        for mid in &model.query(q).unwrap().metric_ids {
            match verdicts.get(mid).map(|v| v.status) {
                Some(Status::Fail) => any_fail = true,
                Some(Status::Pass) => {}
                _ => any_missing = true,
            }
        }
    }
    if any_fail {
        GoalStatus::NotAchieved
    } else if any_missing {
        GoalStatus::Indeterminate
    } else {
        GoalStatus::Achieved
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn report_matches_independent_roll_up(seed in any::<u64>()) {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        let m = random_model(&mut g, &w);
        let measurements: Vec<Measurement> = measure_all(&m, &w, &[], at(0))
            .into_iter()
            .filter_map(|(_, r)| r.ok())
            .filter(|_| g.gen_bool(0.9))
            .collect();
        let r = build_report(&m, &measurements, identity(), at(0), vec![], vec![]).unwrap();
        let again = build_report(&m, &measurements, identity(), at(0), vec![], vec![]).unwrap();
        prop_assert_eq!(&r, &again);
        prop_assert_eq!(r.goals.len(), m.goals.len());
        let mut ids: Vec<&str> = r.goals.iter().map(|g| g.goal_id.as_str()).collect();
        let unsorted = ids.clone();
        ids.sort_unstable();
        prop_assert_eq!(ids, unsorted);
        let by_metric: BTreeMap<String, Verdict> = r.verdicts.iter().map(|v| (v.metric_id.clone(), v.clone())).collect();
        for goal in &m.goals {
            prop_assert_eq!(r.goal(&goal.id).unwrap().status, oracle_goal(&m, goal, &by_metric));
            prop_assert_eq!(r.goal(&goal.id).unwrap().verdicts.len(), resolve_goal(&m, &goal.id).unwrap().len());
        }
    }

    #[test]
    fn failing_a_metric_never_achieves_a_goal(seed in any::<u64>(), pick in 0usize..3) {
        let m = three_metric_model();
        let mut g = rng(seed);
        let all = [Status::Pass, Status::Fail, Status::Missing];
        let mut v: Vec<(&str, Status)> = ["a", "b", "c"].iter().map(|id| (*id, all[g.gen_range(0..3)])).collect();
        let before = evaluate_goal(&m, "g", &verdicts(&m, &v)).unwrap().status;
        if v[pick].1 == Status::Pass {
            v[pick].1 = Status::Fail;
            let after = evaluate_goal(&m, "g", &verdicts(&m, &v)).unwrap().status;
            prop_assert_eq!(after, GoalStatus::NotAchieved);
            prop_assert!(!(before == GoalStatus::NotAchieved && after == GoalStatus::Achieved));
        }
    }

    #[test]
    fn widening_never_turns_pass_into_fail(
        lo in 0i128..100, span in 0i128..100, actual in 0i128..200, wl in 0i128..50, wh in 0i128..50,
    ) {
        let mut spec = completeness_spec("m");
        spec.expected = Interval::new(Quantity::from_integer(lo), Quantity::from_integer(lo + span));
        let m = measured(&spec, &Quantity::ratio(actual, 2).to_string());
        let narrow = evaluate_metric(Some(&m), &spec).unwrap().status;
        spec.expected = Interval::new(Quantity::from_integer(lo - wl), Quantity::from_integer(lo + span + wh));
        let wide = evaluate_metric(Some(&m), &spec).unwrap().status;
        prop_assert!(!(narrow == Status::Pass && wide == Status::Fail));
    }
}
