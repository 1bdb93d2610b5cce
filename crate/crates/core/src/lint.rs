//! Pipeline configuration linter.
//!
//! Three sources of quality compromise can be read straight off the pipeline
//! configuration (items i, j and k); the rest concern source systems and
//! requirements work and are emitted as an advisory checklist.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Contents of `pipeline.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub staging_integrity_constraints_enabled: bool,
    #[serde(default)]
    pub metadata_repository_root: Option<PathBuf>,
    pub cleaning_rules_in_repository: bool,
    #[serde(default)]
    pub source_validation_declared: bool,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub item: char,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Advisory => "advisory",
        };
        write!(f, "[{}] {sev}: {}", self.item, self.message)
    }
}

/// Checklist for the source-system and requirements items, which no
/// configuration file can prove.
pub const ADVISORY_CHECKLIST: [(char, &str); 9] = [
    (
        'a',
        "confirm each source system enforces the business rules the warehouse relies on",
    ),
    ('b', "confirm source systems validate data at entry"),
    (
        'c',
        "agree on one representation for values that sources format differently",
    ),
    (
        'd',
        "confirm sources are updated often enough for the warehouse refresh cycle",
    ),
    ('e', "check source systems for internally inconsistent data"),
    (
        'f',
        "confirm data quality tests run against the source systems",
    ),
    ('g', "identify source columns that may hold missing values"),
    (
        'h',
        "reconcile the default values sources use for missing columns",
    ),
    (
        'l',
        "review requirements analysis and schema design for gaps",
    ),
];

pub fn lint_pipeline(config: &PipelineConfig) -> Vec<LintFinding> {
    let mut out = Vec::new();
    if !config.staging_integrity_constraints_enabled {
        out.push(LintFinding {
            item: 'i',
            severity: Severity::Error,
            message: "integrity constraints are disabled in the staging area".into(),
        });
    }
    match &config.metadata_repository_root {
        None => out.push(LintFinding {
            item: 'j',
            severity: Severity::Error,
            message: "no central metadata repository is configured".into(),
        }),
        Some(root) if std::fs::read_dir(root).is_err() => out.push(LintFinding {
            item: 'j',
            severity: Severity::Error,
            message: format!(
                "metadata repository root {} is missing or unreadable",
                root.display()
            ),
        }),
        Some(_) => {}
    }
    if !config.cleaning_rules_in_repository {
        out.push(LintFinding {
            item: 'k',
            severity: Severity::Error,
            message: "data cleaning rules are not stored in the metadata repository".into(),
        });
    }
    if !config.source_validation_declared {
        out.extend(ADVISORY_CHECKLIST.iter().map(|(item, text)| LintFinding {
            item: *item,
            severity: Severity::Advisory,
            message: (*text).to_string(),
        }));
    }
    out
}
