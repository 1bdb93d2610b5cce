use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::TableSchema;
use super::value::Value;
use super::warehouse::Dataset;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueFrequency {
    pub value: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub column: String,
    pub null_count: usize,
    pub non_null_count: usize,
    pub distinct_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<String>,
    /// Most frequent values, by descending count then ascending value.
    pub top_values: Vec<ValueFrequency>,
}

pub fn profile_columns(dataset: &Dataset, schema: &TableSchema) -> Vec<ColumnProfile> {
    profile_columns_top(dataset, schema, DEFAULT_TOP_K)
}

pub fn profile_columns_top(
    dataset: &Dataset,
    schema: &TableSchema,
    top_k: usize,
) -> Vec<ColumnProfile> {
    schema
        .columns
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut counts: BTreeMap<&Value, usize> = BTreeMap::new();
            let mut null_count = 0;
            for row in &dataset.rows {
                match &row[i] {
                    Some(v) => *counts.entry(v).or_default() += 1,
                    None => null_count += 1,
                }
            }
            let (min, max) = if spec.kind.is_ordered() {
                (
                    counts.keys().next().map(|v| v.to_string()),
                    counts.keys().next_back().map(|v| v.to_string()),
                )
            } else {
                (None, None)
            };
            let mut freq: Vec<(&Value, usize)> = counts.iter().map(|(v, c)| (*v, *c)).collect();
            freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            ColumnProfile {
                column: spec.name.clone(),
                null_count,
                non_null_count: dataset.len() - null_count,
                distinct_count: counts.len(),
                min,
                max,
                top_values: freq
                    .into_iter()
                    .take(top_k)
                    .map(|(v, count)| ValueFrequency {
                        value: v.to_string(),
                        count,
                    })
                    .collect(),
            }
        })
        .collect()
}
