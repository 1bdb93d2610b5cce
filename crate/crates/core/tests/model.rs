use dwq_core::quality_model::{
    resolve_goal, validate_model, validate_structure, AgentBinding, AgentKind, AgentParams,
    Interval, MetricSpec, ModelError, ObjectRef, QualityDimension, QualityGoal, QualityModelDoc,
    QualityParameter, QualityQuery, QueryRule, Stakeholder, StakeholderRole, Unit,
};
use dwq_core::tabular::{ColumnKind, ColumnSpec, TableSchema, Warehouse};
use dwq_core::Quantity;
use dwq_testkit::gen::random_warehouse;
use dwq_testkit::model::random_model;
use dwq_testkit::{rng, GenConfig};
use proptest::prelude::*;

fn warehouse() -> Warehouse {
    let s = TableSchema::new(
        "t",
        vec![
            ColumnSpec::new("id", ColumnKind::Integer),
            ColumnSpec::new("v", ColumnKind::Text),
        ],
        &["id"],
    );
    Warehouse::new(vec![s], vec![], vec![]).unwrap()
}

fn metric(id: &str, parameter: QualityParameter, agent: AgentBinding, unit: Unit) -> MetricSpec {
    MetricSpec {
        id: id.into(),
        parameter,
        object_ref: ObjectRef::table("t"),
        agent,
        unit,
        expected: Interval::at_most(Quantity::from_integer(40)),
        params: AgentParams::default(),
    }
}

fn model() -> QualityModelDoc {
    QualityModelDoc {
        stakeholders: vec![Stakeholder {
            id: "s1".into(),
            name: "Designer".into(),
            role: StakeholderRole::DwDesigner,
            concerns: vec![],
        }],
        dimensions: vec![QualityDimension {
            id: "d1".into(),
            name: "completeness".into(),
            description: String::new(),
        }],
        goals: vec![QualityGoal {
            id: "g1".into(),
            stakeholder_id: "s1".into(),
            purpose: "complete customer records".into(),
            dimension_id: "d1".into(),
            object_ref: ObjectRef::table("t"),
            query_ids: vec!["q1".into(), "q2".into()],
        }],
        queries: vec![
            QualityQuery {
                id: "q1".into(),
                metric_ids: vec!["m1".into()],
                rule: QueryRule::All,
            },
            QualityQuery {
                id: "q2".into(),
                metric_ids: vec!["m2".into(), "m1".into()],
                rule: QueryRule::All,
            },
        ],
        metrics: vec![
            metric(
                "m1",
                QualityParameter::Completeness,
                AgentBinding::Automated(AgentKind::Completeness),
                Unit::Percent,
            ),
            metric(
                "m2",
                QualityParameter::Maintainability,
                AgentBinding::Declared("ops".into()),
                Unit::ManHours,
            ),
        ],
    }
}

fn defect_text(m: &QualityModelDoc) -> Vec<String> {
    validate_model(m, &warehouse())
        .iter()
        .map(|d| d.to_string())
        .collect()
}

#[test]
fn empty_and_sample_models_are_clean() {
    assert!(validate_model(&QualityModelDoc::default(), &warehouse()).is_empty());
    assert!(validate_model(&model(), &warehouse()).is_empty());
}

#[test]
fn dangling_query_is_named() {
    let mut m = model();
    m.goals[0].query_ids.push("q9".into());
    assert_eq!(defect_text(&m), ["goal g1: references unknown query `q9`"]);
}

#[test]
fn automated_agent_on_declared_only_parameter() {
    let mut m = model();
    m.metrics[1].agent = AgentBinding::Automated(AgentKind::Completeness);
    m.metrics[1].unit = Unit::Percent;
    assert_eq!(
        defect_text(&m),
        ["metric m2: parameter Maintainability requires declared agent"]
    );
}

#[test]
fn malformed_interval() {
    let mut m = model();
    m.metrics[0].expected = Interval::new(Quantity::from_integer(5), Quantity::from_integer(1));
    assert_eq!(
        defect_text(&m),
        ["metric m1: expected interval [5, 1] has lo > hi"]
    );
}

#[test]
fn unresolved_object() {
    let mut m = model();
    m.goals[0].object_ref = ObjectRef::column("t", "nope");
    assert_eq!(
        defect_text(&m),
        ["goal g1: object t.nope not found in warehouse"]
    );
    assert!(validate_structure(&m).is_empty());
}

#[test]
fn resolve_goal_dedups_in_order() {
    let m = model();
    let ids: Vec<&str> = resolve_goal(&m, "g1")
        .unwrap()
        .iter()
        .map(|s| s.id.as_str())
        .collect();
    assert_eq!(ids, ["m1", "m2"]);
    assert_eq!(
        resolve_goal(&m, "nope"),
        Err(ModelError::UnknownGoal("nope".into()))
    );

    let mut single = m.clone();
    single.goals[0].query_ids = vec!["q1".into()];
    assert_eq!(resolve_goal(&single, "g1").unwrap().len(), 1);
}

#[test]
fn automated_declared_partition_over_all_parameters() {
    let computable: Vec<usize> = QualityParameter::ALL
        .iter()
        .filter(|p| p.is_data_computable())
        .map(|p| p.number())
        .collect();
    assert_eq!(computable, [7, 8, 9, 19, 20, 21, 22, 23]);
    for p in QualityParameter::ALL {
        for agent in AgentKind::ALL {
            let mut m = model();
            m.metrics[0].parameter = p;
            m.metrics[0].agent = AgentBinding::Automated(agent);
            m.metrics[0].unit = agent.unit();
            if matches!(agent, AgentKind::Accuracy | AgentKind::Credibility) {
                m.metrics[0].params.baseline_table = Some("t".into());
            }
            let ok = validate_structure(&m).is_empty();
            let allowed = p.native_agent() == Some(agent)
                || (p.is_data_computable() && agent == AgentKind::DefectRatio);
            assert_eq!(ok, allowed, "{p:?} with {agent:?}");
        }
        let mut m = model();
        m.metrics[0].parameter = p;
        m.metrics[0].agent = AgentBinding::Declared("survey".into());
        assert!(validate_structure(&m).is_empty(), "declared {p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_models_validate_and_resolve(seed in any::<u64>()) {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        let m = random_model(&mut g, &w);
        let first = validate_model(&m, &w);
        prop_assert!(first.is_empty(), "{:?}", first);
        prop_assert_eq!(&first, &validate_model(&m, &w));
        for goal in &m.goals {
            let specs = resolve_goal(&m, &goal.id).unwrap();
            let mut seen = std::collections::BTreeSet::new();
            for s in &specs {
                prop_assert!(m.metrics.contains(s));
                prop_assert!(seen.insert(&s.id));
            }
        }
    }

    #[test]
    fn model_json_round_trip(seed in any::<u64>()) {
        let mut g = rng(seed);
        let w = random_warehouse(&mut g, &GenConfig::default());
        let m = random_model(&mut g, &w);
        let json = serde_json::to_string_pretty(&m).unwrap();
        let back: QualityModelDoc = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, m);
    }
}
