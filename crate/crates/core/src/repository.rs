//! File-based metadata repository.
//!
//! Layout under the root directory:
//!
//! | path                      | contents                                      |
//! |---------------------------|-----------------------------------------------|
//! | `quality_model.json`      | the quality model                             |
//! | `measurements.jsonl`      | one [`MeasurementRecord`] per line            |
//! | `cleansing/<run_id>.jsonl`| cleansing log entries of one run              |
//! | `declared/*.json`         | declared-measurement manifests (JSON arrays)  |
//! | `.lock`                   | present while a writer is active              |
//!
//! History is append-only. Writers commit by writing a temp file and renaming
//! it over the target, so readers only ever see whole runs.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{ingest_declared, AgentError, DeclaredEntry, Measurement};
use crate::cleanse::{parse_jsonl, CleanseError, CleansingLog, LogEntry};
use crate::quality_model::{validate_structure, ModelDefect, QualityModelDoc};

pub const MODEL_FILE: &str = "quality_model.json";
pub const MEASUREMENTS_FILE: &str = "measurements.jsonl";
pub const CLEANSING_DIR: &str = "cleansing";
pub const DECLARED_DIR: &str = "declared";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("quality model is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<ModelDefect>),
    #[error(
        "repository is locked by another writer ({0}); remove the file if no writer is running"
    )]
    Locked(PathBuf),
    #[error("run `{run_id}`: timestamps must not decrease within a run")]
    NonMonotonic { run_id: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Cleanse(#[from] CleanseError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RepoError + '_ {
    move |source| RepoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line_offset: usize, e: serde_json::Error) -> RepoError {
    RepoError::Parse {
        path: path.to_path_buf(),
        line: e.line() + line_offset,
        column: e.column(),
        message: e.to_string(),
    }
}

/// A measurement as stored in the history log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub run_id: String,
    pub sequence: u64,
    #[serde(flatten)]
    pub measurement: Measurement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepositoryLayout {
    pub root: PathBuf,
    pub model_file: PathBuf,
    pub measurements_log: PathBuf,
    pub cleansing_dir: PathBuf,
    pub declared_dir: PathBuf,
    pub lock_file: PathBuf,
}

impl RepositoryLayout {
    pub fn new(root: &Path) -> Self {
        RepositoryLayout {
            root: root.to_path_buf(),
            model_file: root.join(MODEL_FILE),
            measurements_log: root.join(MEASUREMENTS_FILE),
            cleansing_dir: root.join(CLEANSING_DIR),
            declared_dir: root.join(DECLARED_DIR),
            lock_file: root.join(LOCK_FILE),
        }
    }
}

/// Read access to a repository. Writes go through [`Repository::writer`].
#[derive(Debug, Clone)]
pub struct Repository {
    layout: RepositoryLayout,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RepoError> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl Repository {
    pub fn open(root: impl AsRef<Path>) -> Self {
        Repository {
            layout: RepositoryLayout::new(root.as_ref()),
        }
    }

    /// Opens `root`, creating the directory skeleton if needed.
    pub fn create(root: impl AsRef<Path>) -> Result<Self, RepoError> {
        let repo = Self::open(root);
        for dir in [
            &repo.layout.root,
            &repo.layout.cleansing_dir,
            &repo.layout.declared_dir,
        ] {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        Ok(repo)
    }

    pub fn layout(&self) -> &RepositoryLayout {
        &self.layout
    }

    /// Takes the single-writer lock.
    pub fn writer(&self) -> Result<RepositoryWriter<'_>, RepoError> {
        fs::create_dir_all(&self.layout.root).map_err(io_err(&self.layout.root))?;
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&self.layout.lock_file)
        {
            Ok(_) => Ok(RepositoryWriter { repo: self }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(RepoError::Locked(self.layout.lock_file.clone()))
            }
            Err(e) => Err(RepoError::Io {
                path: self.layout.lock_file.clone(),
                source: e,
            }),
        }
    }

    /// Loads and structurally validates the quality model.
    pub fn load_model(&self) -> Result<QualityModelDoc, RepoError> {
        let path = &self.layout.model_file;
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let model: QualityModelDoc =
            serde_json::from_str(&text).map_err(|e| parse_err(path, 0, e))?;
        let defects = validate_structure(&model);
        if !defects.is_empty() {
            return Err(RepoError::InvalidModel(defects));
        }
        Ok(model)
    }

    /// Full measurement history in file order.
    pub fn history(&self) -> Result<Vec<MeasurementRecord>, RepoError> {
        let path = &self.layout.measurements_log;
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => {
                return Err(RepoError::Io {
                    path: path.clone(),
                    source: e,
                })
            }
        };
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| parse_err(path, n, e))?);
        }
        Ok(out)
    }

    /// Records of one metric with `from <= timestamp <= to`, oldest first.
    pub fn query_history(
        &self,
        metric_id: &str,
        from: Option<DateTime<Utc>>,
        to: Option<DateTime<Utc>>,
    ) -> Result<Vec<MeasurementRecord>, RepoError> {
        let mut out: Vec<MeasurementRecord> = self
            .history()?
            .into_iter()
            .filter(|r| r.measurement.metric_id == metric_id)
            .filter(|r| from.is_none_or(|f| r.measurement.timestamp >= f))
            .filter(|r| to.is_none_or(|t| r.measurement.timestamp <= t))
            .collect();
        out.sort_by_key(|r| r.measurement.timestamp);
        Ok(out)
    }

    /// Every measurement in the history, for evaluation without re-measuring.
    pub fn measurements(&self) -> Result<Vec<Measurement>, RepoError> {
        Ok(self.history()?.into_iter().map(|r| r.measurement).collect())
    }

    /// Reads every manifest under `declared/` (sorted by file name) and
    /// ingests it against `model`.
    pub fn declared_pool(
        &self,
        model: &QualityModelDoc,
        now: DateTime<Utc>,
    ) -> Result<Vec<Measurement>, RepoError> {
        let dir = &self.layout.declared_dir;
        let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => {
                return Err(RepoError::Io {
                    path: dir.clone(),
                    source: e,
                })
            }
        };
        files.sort();
        let mut pool = Vec::new();
        for path in files {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let entries: Vec<DeclaredEntry> =
                serde_json::from_str(&text).map_err(|e| parse_err(&path, 0, e))?;
            pool.extend(ingest_declared(&entries, model, now)?);
        }
        Ok(pool)
    }

    pub fn cleansing_log_path(&self, run_id: &str) -> PathBuf {
        self.layout.cleansing_dir.join(format!("{run_id}.jsonl"))
    }

    pub fn load_cleansing_log(&self, run_id: &str) -> Result<Vec<LogEntry>, RepoError> {
        let path = self.cleansing_log_path(run_id);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        Ok(parse_jsonl(BufReader::new(file))?)
    }
}

/// Holds the repository's write lock until dropped.
#[derive(Debug)]
pub struct RepositoryWriter<'r> {
    repo: &'r Repository,
}

impl Drop for RepositoryWriter<'_> {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.repo.layout.lock_file);
    }
}

impl RepositoryWriter<'_> {
    /// Writes the model after structural validation.
    pub fn save_model(&self, model: &QualityModelDoc) -> Result<(), RepoError> {
        let defects = validate_structure(model);
        if !defects.is_empty() {
            return Err(RepoError::InvalidModel(defects));
        }
        let path = &self.repo.layout.model_file;
        let json = serde_json::to_string_pretty(model).map_err(|e| parse_err(path, 0, e))?;
        write_atomic(path, format!("{json}\n").as_bytes())
    }

    /// Appends one run's measurements. Records are ordered by timestamp and
    /// numbered after any the run already has. Existing lines are untouched.
    pub fn append_measurements(
        &self,
        run_id: &str,
        measurements: &[Measurement],
    ) -> Result<Vec<MeasurementRecord>, RepoError> {
        if measurements.is_empty() {
            return Ok(Vec::new());
        }
        let existing = self.repo.history()?;
        let same_run: Vec<&MeasurementRecord> =
            existing.iter().filter(|r| r.run_id == run_id).collect();
        let mut next = same_run.iter().map(|r| r.sequence + 1).max().unwrap_or(0);
        let last_ts = same_run.iter().map(|r| r.measurement.timestamp).max();

        let mut sorted: Vec<&Measurement> = measurements.iter().collect();
        sorted.sort_by_key(|m| m.timestamp);
        if let (Some(last), Some(first)) = (last_ts, sorted.first()) {
            if first.timestamp < last {
                return Err(RepoError::NonMonotonic {
                    run_id: run_id.to_string(),
                });
            }
        }
        let records: Vec<MeasurementRecord> = sorted
            .into_iter()
            .map(|m| {
                let r = MeasurementRecord {
                    run_id: run_id.to_string(),
                    sequence: next,
                    measurement: m.clone(),
                };
                next += 1;
                r
            })
            .collect();

        let path = &self.repo.layout.measurements_log;
        let mut bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => {
                return Err(RepoError::Io {
                    path: path.clone(),
                    source: e,
                })
            }
        };
        if bytes.last().is_some_and(|b| *b != b'\n') {
            bytes.push(b'\n');
        }
        for r in &records {
            bytes.extend(serde_json::to_vec(r).map_err(|e| parse_err(path, 0, e))?);
            bytes.push(b'\n');
        }
        write_atomic(path, &bytes)?;
        Ok(records)
    }

    /// Appends a cleansing log to `cleansing/<run_id>.jsonl`.
    pub fn append_cleansing_log(&self, log: &CleansingLog) -> Result<PathBuf, RepoError> {
        let dir = &self.repo.layout.cleansing_dir;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = self.repo.cleansing_log_path(log.run_id());
        let mut bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => {
                return Err(RepoError::Io {
                    path: path.clone(),
                    source: e,
                })
            }
        };
        bytes.extend(log.to_jsonl().into_bytes());
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

pub use crate::tabular::save_warehouse;
