use dwq_core::quality_model::{
    AgentBinding, AgentKind, AgentParams, DefectSource, Interval, MetricSpec, ObjectRef,
    QualityDimension, QualityGoal, QualityModelDoc, QualityParameter, QualityQuery, QueryRule,
    Stakeholder, StakeholderRole, Unit,
};
use dwq_core::tabular::Warehouse;
use dwq_core::Quantity;
use rand::seq::SliceRandom;
use rand::Rng;

const UNITS: [Unit; 5] = [
    Unit::Count,
    Unit::Percent,
    Unit::Ratio,
    Unit::ManHours,
    Unit::BooleanCount,
];

fn random_quantity(rng: &mut impl Rng) -> Quantity {
    match rng.gen_range(0..3) {
        0 => Quantity::from_integer(rng.gen_range(0..200)),
        1 => Quantity::ratio(rng.gen_range(0..1000), 10),
        _ => Quantity::ratio(rng.gen_range(0..100), rng.gen_range(1..13)),
    }
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    let (a, b) = (random_quantity(rng), random_quantity(rng));
    match rng.gen_range(0..4) {
        0 => Interval::at_least(a),
        _ if a <= b => Interval::new(a, b),
        _ => Interval::new(b, a),
    }
}

fn random_object(rng: &mut impl Rng, w: &Warehouse, agent: Option<AgentKind>) -> ObjectRef {
    let tables: Vec<&str> = w.table_names().collect();
    let table = tables.choose(rng).unwrap().to_string();
    let level = match agent {
        None | Some(AgentKind::Interpretability) => rng.gen_range(0..3),
        Some(AgentKind::Consistency) => rng.gen_range(0..2),
        Some(_) => 1,
    };
    match level {
        0 => ObjectRef::Warehouse,
        1 => ObjectRef::Table { table },
        _ => {
            let column = w
                .schema(&table)
                .unwrap()
                .columns
                .choose(rng)
                .unwrap()
                .name
                .clone();
            ObjectRef::Column { table, column }
        }
    }
}

fn some_constraints(rng: &mut impl Rng, w: &Warehouse) -> Vec<String> {
    w.constraint_ids()
        .into_iter()
        .filter(|_| rng.gen_bool(0.5))
        .collect()
}

fn random_metric(rng: &mut impl Rng, w: &Warehouse, id: String) -> MetricSpec {
    let parameter = *QualityParameter::ALL.choose(rng).unwrap();
    let automated = parameter.is_data_computable() && rng.gen_bool(0.8);
    let (agent, unit, kind) = if automated {
        let kind = if rng.gen_bool(0.2) {
            AgentKind::DefectRatio
        } else {
            parameter.native_agent().unwrap()
        };
        (AgentBinding::Automated(kind), kind.unit(), Some(kind))
    } else {
        let label = ["ops review", "support desk", "audit team"]
            .choose(rng)
            .unwrap()
            .to_string();
        (
            AgentBinding::Declared(label),
            *UNITS.choose(rng).unwrap(),
            None,
        )
    };
    let object_ref = random_object(rng, w, kind);
    let mut params = AgentParams::default();
    match kind {
        Some(AgentKind::Consistency) if rng.gen_bool(0.5) => {
            params.constraints = Some(some_constraints(rng, w))
        }
        Some(AgentKind::Accuracy | AgentKind::Credibility) => {
            params.baseline_table = object_ref.table_name().map(str::to_string);
        }
        Some(AgentKind::DefectRatio) if rng.gen_bool(0.5) => {
            let mut preds = vec![DefectSource::ViolationOf(some_constraints(rng, w))];
            if rng.gen_bool(0.5) {
                preds.insert(0, DefectSource::IncompleteRecord);
            }
            params.defect_predicates = Some(preds);
        }
        _ => {}
    }
    MetricSpec {
        id,
        parameter,
        object_ref,
        agent,
        unit,
        expected: random_interval(rng),
        params,
    }
}

/// A model that passes `validate_model` against `w`.
pub fn random_model(rng: &mut impl Rng, w: &Warehouse) -> QualityModelDoc {
    let stakeholders: Vec<Stakeholder> = (0..rng.gen_range(1..4))
        .map(|i| Stakeholder {
            id: format!("s{i}"),
            name: format!("stakeholder {i}"),
            role: *StakeholderRole::ALL.choose(rng).unwrap(),
            concerns: (0..rng.gen_range(0..3))
                .map(|c| format!("concern {c}"))
                .collect(),
        })
        .collect();
    let dimensions: Vec<QualityDimension> = (0..rng.gen_range(1..3))
        .map(|i| QualityDimension {
            id: format!("d{i}"),
            name: ["believability", "timeliness", "interpretability"][i % 3].into(),
            description: if rng.gen_bool(0.5) {
                String::new()
            } else {
                "an aspect".into()
            },
        })
        .collect();
    let metrics: Vec<MetricSpec> = (0..rng.gen_range(1..7))
        .map(|i| random_metric(rng, w, format!("m{i}")))
        .collect();
    let queries: Vec<QualityQuery> = (0..rng.gen_range(1..4))
        .map(|i| {
            let mut ids: Vec<String> = metrics
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|m| m.id.clone())
                .collect();
            if ids.is_empty() {
                ids.push(metrics.choose(rng).unwrap().id.clone());
            }
            ids.shuffle(rng);
            QualityQuery {
                id: format!("q{i}"),
                metric_ids: ids,
                rule: QueryRule::All,
            }
        })
        .collect();
    let goals: Vec<QualityGoal> = (0..rng.gen_range(0..4))
        .map(|i| {
            let mut ids: Vec<String> = queries
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|q| q.id.clone())
                .collect();
            if ids.is_empty() {
                ids.push(queries.choose(rng).unwrap().id.clone());
            }
            QualityGoal {
                id: format!("g{i}"),
                stakeholder_id: stakeholders.choose(rng).unwrap().id.clone(),
                purpose: format!("purpose {i}"),
                dimension_id: dimensions.choose(rng).unwrap().id.clone(),
                object_ref: random_object(rng, w, None),
                query_ids: ids,
            }
        })
        .collect();
    QualityModelDoc {
        stakeholders,
        dimensions,
        goals,
        queries,
        metrics,
    }
}
