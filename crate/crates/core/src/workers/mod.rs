//! Background execution of cleaning and compression jobs.
//!
//! Jobs are queued FIFO and picked up by a fixed set of worker threads. The
//! number of workers follows the host size: one less than the core count,
//! but never below one.

mod pool;
mod runners;

pub use pool::{JobHook, PoolOptions, PoolStats, WorkerPool};
pub use runners::{CatalogRunner, FsRunner};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{now_ms, FileId};
use crate::filters::{ChainReport, ChainWarning, FilterConfig};

pub type JobId = u64;

/// Number of workers for a host with `core_count` cores.
pub fn pool_size(core_count: usize) -> Result<usize, WorkerError> {
    match core_count {
        0 => Err(WorkerError::NoCores),
        1 => Ok(1),
        n => Ok(n - 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub core_count: usize,
    /// Overrides the derived worker count.
    pub max_workers: Option<usize>,
}

impl PoolConfig {
    /// Sized for the current host.
    pub fn detect() -> PoolConfig {
        let core_count = std::thread::available_parallelism().map_or(1, |n| n.get());
        PoolConfig {
            core_count,
            max_workers: None,
        }
    }

    pub fn with_cores(core_count: usize) -> PoolConfig {
        PoolConfig {
            core_count,
            max_workers: None,
        }
    }

    pub fn workers(&self) -> Result<usize, WorkerError> {
        match self.max_workers {
            Some(0) => Err(WorkerError::NoCores),
            Some(n) => Ok(n),
            None => pool_size(self.core_count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRef {
    /// A file registered in the catalog.
    Asset(FileId),
    /// A file on the local filesystem.
    Path(PathBuf),
}

impl std::fmt::Display for FileRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FileRef::Asset(id) => write!(f, "file {id}"),
            FileRef::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JobKind {
    /// Run a filter chain and store the cleaned series.
    Clean { chain: Vec<FilterConfig> },
    /// Convert raw input into the compressed series format.
    Compress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Succeeded | JobState::Failed)
    }
}

/// What a caller asks the pool to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub kind: JobKind,
    pub input: FileRef,
    /// Where to write the result; the runner picks a location when absent.
    pub output: Option<FileRef>,
}

impl JobSpec {
    pub fn clean(input: FileRef, chain: Vec<FilterConfig>) -> JobSpec {
        JobSpec {
            kind: JobKind::Clean { chain },
            input,
            output: None,
        }
    }

    pub fn compress(input: FileRef) -> JobSpec {
        JobSpec {
            kind: JobKind::Compress,
            input,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub kind: JobKind,
    pub input: FileRef,
    /// Requested target while pending; the produced file once succeeded.
    pub output: Option<FileRef>,
    pub state: JobState,
    pub submitted_at_ms: u64,
    pub started_at_ms: Option<u64>,
    pub finished_at_ms: Option<u64>,
    pub failure: Option<String>,
    pub report: Option<ChainReport>,
}

impl Job {
    pub fn new(id: JobId, spec: JobSpec) -> Job {
        Job {
            id,
            kind: spec.kind,
            input: spec.input,
            output: spec.output,
            state: JobState::Queued,
            submitted_at_ms: now_ms(),
            started_at_ms: None,
            finished_at_ms: None,
            failure: None,
            report: None,
        }
    }

    fn after_previous(&self) -> u64 {
        let latest = self.started_at_ms.unwrap_or(self.submitted_at_ms);
        now_ms().max(latest)
    }

    pub(crate) fn mark_running(&mut self) {
        self.started_at_ms = Some(self.after_previous());
        self.state = JobState::Running;
    }

    pub(crate) fn mark_succeeded(&mut self, outcome: JobOutcome) {
        self.finished_at_ms = Some(self.after_previous());
        self.state = JobState::Succeeded;
        self.output = outcome.output;
        self.report = outcome.report;
    }

    pub(crate) fn mark_failed(&mut self, message: String) {
        self.finished_at_ms = Some(self.after_previous());
        self.state = JobState::Failed;
        self.failure = Some(message);
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JobOutcome {
    pub output: Option<FileRef>,
    pub report: Option<ChainReport>,
}

/// Executes jobs on behalf of the pool.
pub trait JobRunner: Send + Sync + 'static {
    /// Rejects inputs that cannot be resolved, at submission time.
    fn check_input(&self, _input: &FileRef) -> Result<(), String> {
        Ok(())
    }

    /// Runs one job. A failed run must leave no partial output behind.
    fn run(&self, job: &Job) -> Result<JobOutcome, String>;
}

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error("a pool needs at least one core")]
    NoCores,
    #[error("invalid filter chain: {}", summarize(.0))]
    InvalidChain(Vec<ChainWarning>),
    #[error("unknown input: {0}")]
    UnknownInput(String),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("job {0} is no longer queued")]
    NotQueued(JobId),
    #[error("worker pool is shutting down")]
    ShuttingDown,
}

fn summarize(warnings: &[ChainWarning]) -> String {
    warnings
        .iter()
        .map(|w| w.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
