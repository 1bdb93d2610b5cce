use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dwq_core::agents::{measure_all, summarize_tables, AgentError, Measurement};
use dwq_core::cleanse::{
    admit, audit, cells_violating, correct, filter_elements, filter_groups, filter_rows,
    render_audit_text, rows_violating, AuditOptions, CellTarget, CleansingLog, CorrectionRule,
    LogEntry, RowTarget,
};
use dwq_core::evaluator::{align, build_report, render_text, QualityReport, WarehouseIdentity};
use dwq_core::lint::{lint_pipeline, PipelineConfig, Severity};
use dwq_core::quality_model::Unit;
use dwq_core::repository::{MeasurementRecord, Repository};
use dwq_core::tabular::{find_violations, io::read_csv, load_warehouse, save_warehouse, Warehouse};
use dwq_core::Quantity;

#[derive(Parser)]
#[command(
    name = "dwq",
    version,
    about = "Goal-driven data quality measurement and cleansing for warehouse tables"
)]
struct Cli {
    /// Metadata repository root.
    #[arg(long, global = true)]
    repo: Option<PathBuf>,
    /// Warehouse directory (schema sidecars plus CSV files).
    #[arg(long, global = true)]
    warehouse: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Run timestamp (RFC 3339); defaults to now.
    #[arg(long, global = true)]
    at: Option<DateTime<Utc>>,
    /// Run identifier for measurements and cleansing logs; derived from the timestamp by default.
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Treat indeterminate goals as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterMode {
    Element,
    Row,
    Group,
}

#[derive(Subcommand)]
enum Command {
    /// Run every metric's agent and record the measurements.
    Measure,
    /// Measure, record, and compare against the expected intervals.
    Evaluate,
    /// Report constraint violations and column profiles.
    Audit {
        /// Comma-separated constraint ids; all constraints when omitted.
        #[arg(long, value_delimiter = ',')]
        constraints: Vec<String>,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
    /// Screen a CSV batch against a table before loading it.
    Admit {
        #[arg(long)]
        table: String,
        #[arg(long)]
        batch: PathBuf,
        /// Append the accepted rows to the warehouse.
        #[arg(long)]
        apply: bool,
    },
    /// Remove bad data at element, row or logical-group level.
    Filter {
        #[arg(long, value_enum)]
        mode: FilterMode,
        /// Comma-separated constraint ids whose violations are the targets.
        #[arg(long, value_delimiter = ',')]
        violations: Vec<String>,
        /// Explicit target: `table:row` or, for element mode, `table:row:column`.
        #[arg(long)]
        target: Vec<String>,
        #[arg(long, default_value = "filtered")]
        reason: String,
        /// Write the cleansed warehouse here instead of in place.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply correction rules to violating or NULL cells.
    Correct {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a pipeline configuration for known quality hazards.
    Lint {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the recorded measurements without measuring again.
    Report,
    /// Show recorded measurements of one metric.
    History {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        from: Option<DateTime<Utc>>,
        #[arg(long)]
        to: Option<DateTime<Utc>>,
    },
}

struct Ctx {
    repo: Option<PathBuf>,
    warehouse: Option<PathBuf>,
    format: Format,
    at: DateTime<Utc>,
    run_id: String,
    strict: bool,
}

impl Ctx {
    fn repo(&self) -> Result<Repository> {
        let root = self
            .repo
            .as_ref()
            .ok_or_else(|| anyhow!("--repo is required for this command"))?;
        Ok(Repository::open(root))
    }

    fn warehouse_dir(&self) -> Result<&Path> {
        self.warehouse
            .as_deref()
            .ok_or_else(|| anyhow!("--warehouse is required for this command"))
    }

    fn warehouse(&self) -> Result<Warehouse> {
        let dir = self.warehouse_dir()?;
        load_warehouse(dir).with_context(|| format!("loading warehouse {}", dir.display()))
    }

    fn identity(&self, w: &Warehouse) -> Result<WarehouseIdentity> {
        let dir = self.warehouse_dir()?;
        let name = dir.file_name().map_or_else(
            || dir.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        Ok(WarehouseIdentity {
            name,
            fingerprint: w.fingerprint(),
        })
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> Result<()> {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
            Format::Text => print!("{}", text()),
        }
        Ok(())
    }

    fn save(&self, w: &Warehouse, output: Option<&Path>) -> Result<()> {
        let dir = match output {
            Some(d) => d,
            None => self.warehouse_dir()?,
        };
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        save_warehouse(w, dir).with_context(|| format!("saving warehouse to {}", dir.display()))
    }

    fn record_log(&self, log: &CleansingLog) -> Result<()> {
        if let Some(root) = &self.repo {
            Repository::create(root)?
                .writer()?
                .append_cleansing_log(log)?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let at = cli.at.unwrap_or_else(Utc::now);
    let ctx = Ctx {
        repo: cli.repo,
        warehouse: cli.warehouse,
        format: cli.format,
        run_id: cli
            .run_id
            .unwrap_or_else(|| format!("run-{}", at.format("%Y%m%dT%H%M%SZ"))),
        at,
        strict: cli.strict,
    };
    match run(&ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(ctx: &Ctx, command: Command) -> Result<ExitCode> {
    match command {
        Command::Measure => {
            let measurements = measure(ctx)?;
            ctx.emit(&measurements, || render_measurements(&measurements))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate => {
            let measurements = measure(ctx)?;
            let report = report(ctx, &measurements)?;
            finish_report(ctx, &report)
        }
        Command::Report => {
            let measurements = ctx.repo()?.measurements()?;
            let report = report(ctx, &measurements)?;
            finish_report(ctx, &report)
        }
        Command::Audit { constraints, top_k } => {
            let w = ctx.warehouse()?;
            let opts = AuditOptions {
                constraints: (!constraints.is_empty()).then_some(constraints),
                top_k,
            };
            let r = audit(&w, &opts, ctx.at)?;
            ctx.emit(&r, || render_audit_text(&r))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Admit {
            table,
            batch,
            apply,
        } => {
            let w = ctx.warehouse()?;
            let schema = w
                .schema(&table)
                .ok_or_else(|| anyhow!("unknown table `{table}`"))?;
            let rows = read_csv(&batch, schema)
                .with_context(|| format!("reading batch {}", batch.display()))?
                .rows;
            let r = admit(&w, &table, rows)?;
            if apply && !r.accepted.is_empty() {
                let mut rows = w.table(&table)?.1.rows.clone();
                rows.extend(r.accepted_rows());
                ctx.save(&w.with_rows(&table, rows)?, None)?;
            }
            ctx.emit(&r, || {
                let mut out = format!(
                    "{}: {} accepted, {} rejected\n",
                    r.table,
                    r.accepted.len(),
                    r.rejected.len()
                );
                for x in &r.rejected {
                    out.push_str(&format!(
                        "  batch row {}: {}\n",
                        x.batch_index,
                        x.reasons.join(", ")
                    ));
                }
                out
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Filter {
            mode,
            violations,
            target,
            reason,
            output,
        } => {
            let w = ctx.warehouse()?;
            if violations.is_empty() == target.is_empty() {
                bail!("give exactly one of --violations or --target");
            }
            let mut log = CleansingLog::new(ctx.run_id.clone(), ctx.at);
            let out = if mode == FilterMode::Element {
                let cells = if violations.is_empty() {
                    target
                        .iter()
                        .map(|t| parse_cell(t))
                        .collect::<Result<BTreeSet<_>>>()?
                } else {
                    cells_violating(&w, &violations)?
                };
                filter_elements(&w, &cells, &mut log, &reason)?
            } else {
                let rows = if violations.is_empty() {
                    target
                        .iter()
                        .map(|t| parse_row(t))
                        .collect::<Result<BTreeSet<_>>>()?
                } else {
                    rows_violating(&w, &violations)?
                };
                match mode {
                    FilterMode::Row => filter_rows(&w, &rows, &mut log, &reason)?,
                    _ => filter_groups(&w, &rows, &mut log)?,
                }
            };
            ctx.save(&out, output.as_deref())?;
            ctx.record_log(&log)?;
            ctx.emit(&log.entries(), || render_log(log.entries()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Correct { rules, output } => {
            let w = ctx.warehouse()?;
            let text = std::fs::read_to_string(&rules)
                .with_context(|| format!("reading {}", rules.display()))?;
            let rules: Vec<CorrectionRule> = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", rules.display()))?;
            let violations = find_violations(&w, None)?;
            let mut log = CleansingLog::new(ctx.run_id.clone(), ctx.at);
            let (out, summary) = correct(&w, &rules, &violations, &mut log)?;
            ctx.save(&out, output.as_deref())?;
            ctx.record_log(&log)?;
            #[derive(Serialize)]
            struct Outcome<'a> {
                corrected: usize,
                uncorrectable: usize,
                entries: &'a [LogEntry],
            }
            let o = Outcome {
                corrected: summary.corrected,
                uncorrectable: summary.uncorrectable,
                entries: log.entries(),
            };
            ctx.emit(&o, || {
                format!(
                    "{} corrected, {} uncorrectable\n{}",
                    o.corrected,
                    o.uncorrectable,
                    render_log(o.entries)
                )
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Lint { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: PipelineConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let findings = lint_pipeline(&cfg);
            ctx.emit(&findings, || {
                findings.iter().map(|f| format!("{f}\n")).collect()
            })?;
            let errors = findings.iter().any(|f| f.severity == Severity::Error);
            Ok(if errors {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::History { metric, from, to } => {
            let records = ctx.repo()?.query_history(&metric, from, to)?;
            ctx.emit(&records, || render_history(&records))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Measures every metric and appends the results to the repository.
/// A declared metric with nothing on file is skipped with a warning; any
/// other agent failure aborts the run.
fn measure(ctx: &Ctx) -> Result<Vec<Measurement>> {
    let repo = ctx.repo()?;
    let model = repo.load_model()?;
    let w = ctx.warehouse()?;
    let declared = repo.declared_pool(&model, ctx.at)?;
    let mut out = Vec::new();
    for (id, result) in measure_all(&model, &w, &declared, ctx.at) {
        match result {
            Ok(m) => out.push(m),
            Err(AgentError::MeasurementMissing(_)) => {
                eprintln!("warning: metric {id}: no declared measurement on file")
            }
            Err(e) => bail!("metric {id}: {e}"),
        }
    }
    repo.writer()?.append_measurements(&ctx.run_id, &out)?;
    Ok(out)
}

fn report(ctx: &Ctx, measurements: &[Measurement]) -> Result<QualityReport> {
    let model = ctx.repo()?.load_model()?;
    let w = ctx.warehouse()?;
    Ok(build_report(
        &model,
        measurements,
        ctx.identity(&w)?,
        ctx.at,
        summarize_tables(&w)?,
        vec![],
    )?)
}

fn finish_report(ctx: &Ctx, report: &QualityReport) -> Result<ExitCode> {
    ctx.emit(report, || render_text(report))?;
    if report.tally.indeterminate > 0 {
        eprintln!(
            "warning: {} goal(s) indeterminate: measurements are missing",
            report.tally.indeterminate
        );
    }
    let failed = report.tally.not_achieved > 0 || (ctx.strict && report.tally.indeterminate > 0);
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn parse_row(t: &str) -> Result<RowTarget> {
    match t.split(':').collect::<Vec<_>>()[..] {
        [table, row] => Ok(RowTarget::new(
            table,
            row.parse().with_context(|| format!("bad row in `{t}`"))?,
        )),
        _ => bail!("row target `{t}` must look like table:row"),
    }
}

fn parse_cell(t: &str) -> Result<CellTarget> {
    match t.split(':').collect::<Vec<_>>()[..] {
        [table, row, column] => Ok(CellTarget::new(
            table,
            row.parse().with_context(|| format!("bad row in `{t}`"))?,
            column,
        )),
        _ => bail!("element target `{t}` must look like table:row:column"),
    }
}

fn fmt_value(v: &Quantity, unit: Unit) -> String {
    match unit {
        Unit::Count | Unit::BooleanCount => v.to_string(),
        _ => v.to_fixed(2),
    }
}

fn render_measurements(ms: &[Measurement]) -> String {
    let mut rows = vec![vec![
        "METRIC".to_string(),
        "OBJECT".into(),
        "VALUE".into(),
        "UNIT".into(),
        "AGENT".into(),
    ]];
    for m in ms {
        rows.push(vec![
            m.metric_id.clone(),
            m.object_ref.to_string(),
            fmt_value(&m.actual_value, m.unit),
            m.unit.to_string(),
            m.agent_id.clone(),
        ]);
    }
    align(&rows)
}

fn render_log(entries: &[LogEntry]) -> String {
    let mut rows = vec![vec![
        "SEQ".to_string(),
        "ACTION".into(),
        "TABLE".into(),
        "ROW".into(),
        "CHANGE".into(),
        "REASON".into(),
    ]];
    for e in entries {
        let change = match (&e.column, &e.row_values) {
            (Some(c), _) => format!(
                "{c}: {} -> {}",
                e.old_value.as_deref().unwrap_or("NULL"),
                e.new_value.as_deref().unwrap_or("NULL")
            ),
            (None, Some(values)) => {
                let cells: Vec<&str> = values
                    .iter()
                    .map(|v| v.as_deref().unwrap_or("NULL"))
                    .collect();
                format!("removed ({})", cells.join(", "))
            }
            (None, None) => String::new(),
        };
        let action = serde_json::to_value(e.action)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        rows.push(vec![
            e.seq.to_string(),
            action,
            e.table.clone(),
            e.row.to_string(),
            change,
            e.reason.clone(),
        ]);
    }
    let mut out = format!("{} change(s)\n", entries.len());
    if !entries.is_empty() {
        out.push_str(&align(&rows));
    }
    out
}

fn render_history(records: &[MeasurementRecord]) -> String {
    let mut rows = vec![vec![
        "TIMESTAMP".to_string(),
        "RUN".into(),
        "SEQ".into(),
        "VALUE".into(),
        "UNIT".into(),
    ]];
    for r in records {
        let m = &r.measurement;
        rows.push(vec![
            m.timestamp.to_rfc3339(),
            r.run_id.clone(),
            r.sequence.to_string(),
            fmt_value(&m.actual_value, m.unit),
            m.unit.to_string(),
        ]);
    }
    align(&rows)
}
