//! Durable registry of studies, subjects, files and job records.
//!
//! Metadata lives in an append-only JSON-lines journal that is replayed on
//! open; file content lives in a content-addressed blob store next to it.
//! Every mutation is serialized through the journal writer and becomes
//! visible to readers only after it has been synced to disk.

mod blobs;
mod journal;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{self, parse_filename, ColumnMapping, IngestError};
use crate::workers::{Job, JobId, JobState};
use blobs::BlobStore;
use journal::{Journal, Op};

pub type StudyId = u64;
pub type SubjectId = u64;
pub type FileId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub id: StudyId,
    pub name: String,
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: SubjectId,
    pub study_id: StudyId,
    pub external_id: String,
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Raw,
    Compressed,
    Cleaned,
    Video,
    Other,
}

impl FileKind {
    pub fn from_filename(name: &str) -> FileKind {
        let ext = name.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("tsv") => FileKind::Raw,
            Some("cepw") => FileKind::Compressed,
            Some("mp4" | "avi" | "mov" | "mkv" | "webm" | "wmv") => FileKind::Video,
            _ => FileKind::Other,
        }
    }

    /// Whether the content is stored in the compressed series format.
    pub fn is_series(self) -> bool {
        matches!(self, FileKind::Compressed | FileKind::Cleaned)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileAsset {
    pub id: FileId,
    pub subject_id: SubjectId,
    pub filename: String,
    pub kind: FileKind,
    pub size_bytes: u64,
    /// SHA-256 of the content; doubles as the blob location.
    pub content_hash: String,
    pub sample_rate_hz: Option<f64>,
    /// How to parse raw TSV content.
    pub mapping: Option<ColumnMapping>,
    /// The file this one was derived from.
    pub source_file_id: Option<FileId>,
    /// The job that produced this file.
    pub source_job_id: Option<JobId>,
    pub created_at_ms: u64,
}

/// Optional metadata supplied with [`Catalog::register_file`].
#[derive(Debug, Clone, Default)]
pub struct FileMeta {
    /// Inferred from the extension when absent.
    pub kind: Option<FileKind>,
    pub sample_rate_hz: Option<f64>,
    pub mapping: Option<ColumnMapping>,
    pub source_file_id: Option<FileId>,
    pub source_job_id: Option<JobId>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog storage error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt catalog journal at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("study name must not be empty")]
    EmptyStudyName,
    #[error("a study named {0:?} already exists")]
    DuplicateStudy(String),
    #[error("unknown study {0}")]
    UnknownStudy(String),
    #[error("subject identifier must not be empty")]
    EmptySubjectId,
    #[error("subject {0:?} already exists in this study")]
    DuplicateSubject(String),
    #[error("unknown subject {0}")]
    UnknownSubject(String),
    #[error("file name {0:?} does not follow subject_id@study.extension; assign a subject explicitly")]
    UnmappedFilename(String),
    #[error("unknown file {0}")]
    UnknownFile(FileId),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("cannot delete {0}: dependents exist")]
    HasDependents(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Default)]
struct State {
    studies: BTreeMap<StudyId, Study>,
    subjects: BTreeMap<SubjectId, Subject>,
    files: BTreeMap<FileId, FileAsset>,
    jobs: BTreeMap<JobId, Job>,
    next_id: u64,
}

impl State {
    fn apply(&mut self, op: &Op) {
        match op {
            Op::CreateStudy(s) => {
                self.bump(s.id);
                self.studies.insert(s.id, s.clone());
            }
            Op::CreateSubjects(list) => {
                for s in list {
                    self.bump(s.id);
                    self.subjects.insert(s.id, s.clone());
                }
            }
            Op::RegisterFile(f) => {
                self.bump(f.id);
                self.files.insert(f.id, f.clone());
            }
            Op::PutJob(j) => {
                self.jobs.insert(j.id, j.clone());
            }
            Op::DeleteStudy(id) => {
                self.studies.remove(id);
            }
            Op::DeleteSubject(id) => {
                self.subjects.remove(id);
            }
            Op::DeleteFile(id) => {
                self.files.remove(id);
            }
        }
    }

    fn bump(&mut self, id: u64) {
        self.next_id = self.next_id.max(id + 1);
    }

    fn alloc(&mut self) -> u64 {
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        id
    }

    fn study_by_name(&self, name: &str) -> Option<&Study> {
        self.studies.values().find(|s| s.name == name)
    }

    fn subject_in(&self, study_id: StudyId, external_id: &str) -> Option<&Subject> {
        self.subjects
            .values()
            .find(|s| s.study_id == study_id && s.external_id == external_id)
    }
}

/// File-backed catalog rooted at a directory.
pub struct Catalog {
    root: PathBuf,
    journal: Mutex<Journal>,
    state: RwLock<State>,
    blobs: BlobStore,
}

impl Catalog {
    /// Opens (or creates) the catalog under `root`, replaying the journal.
    ///
    /// Jobs the journal still shows as queued or running were interrupted by
    /// a restart; they are marked failed and must be resubmitted.
    pub fn open(root: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root)?;
        let blobs = BlobStore::open(root.join("blobs"))?;
        let (journal, ops) = Journal::open(root.join("catalog.jsonl"))?;
        let mut state = State::default();
        for op in &ops {
            state.apply(op);
        }
        let catalog = Catalog {
            root,
            journal: Mutex::new(journal),
            state: RwLock::new(state),
            blobs,
        };
        let interrupted: Vec<Job> = catalog
            .state
            .read()
            .unwrap()
            .jobs
            .values()
            .filter(|j| !j.state.is_terminal())
            .cloned()
            .collect();
        for mut job in interrupted {
            job.mark_failed("interrupted by service restart; resubmit the job".into());
            catalog.put_job(&job)?;
        }
        Ok(catalog)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn commit(&self, journal: &mut Journal, op: Op) -> Result<(), CatalogError> {
        journal.append(&op)?;
        self.state.write().unwrap().apply(&op);
        Ok(())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap()
    }

    pub fn create_study(&self, name: &str) -> Result<Study, CatalogError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(CatalogError::EmptyStudyName);
        }
        let mut journal = self.journal.lock().unwrap();
        if self.read().study_by_name(name).is_some() {
            return Err(CatalogError::DuplicateStudy(name.to_string()));
        }
        let study = Study {
            id: self.state.write().unwrap().alloc(),
            name: name.to_string(),
            created_at_ms: now_ms(),
        };
        self.commit(&mut journal, Op::CreateStudy(study.clone()))?;
        Ok(study)
    }

    pub fn list_studies(&self) -> Vec<Study> {
        self.read().studies.values().cloned().collect()
    }

    pub fn get_study(&self, id: StudyId) -> Result<Study, CatalogError> {
        self.read()
            .studies
            .get(&id)
            .cloned()
            .ok_or_else(|| CatalogError::UnknownStudy(id.to_string()))
    }

    pub fn find_study(&self, name: &str) -> Option<Study> {
        self.read().study_by_name(name).cloned()
    }

    pub fn create_subject(
        &self,
        study_id: StudyId,
        external_id: &str,
        display_name: Option<&str>,
    ) -> Result<Subject, CatalogError> {
        let descriptor = ingest::SubjectDescriptor {
            external_id: external_id.trim().to_string(),
            display_name: display_name.map(str::trim).filter(|n| !n.is_empty()).map(str::to_string),
        };
        Ok(self.add_subjects(study_id, vec![descriptor])?.remove(0))
    }

    /// Creates every subject of a CSV list, or none of them.
    pub fn import_subjects(&self, study_id: StudyId, csv: &[u8]) -> Result<Vec<Subject>, CatalogError> {
        let descriptors = ingest::import_subjects_csv(csv)?;
        self.add_subjects(study_id, descriptors)
    }

    fn add_subjects(
        &self,
        study_id: StudyId,
        descriptors: Vec<ingest::SubjectDescriptor>,
    ) -> Result<Vec<Subject>, CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        {
            let state = self.read();
            if !state.studies.contains_key(&study_id) {
                return Err(CatalogError::UnknownStudy(study_id.to_string()));
            }
            let mut seen = std::collections::HashSet::new();
            for d in &descriptors {
                if d.external_id.is_empty() {
                    return Err(CatalogError::EmptySubjectId);
                }
                if state.subject_in(study_id, &d.external_id).is_some() || !seen.insert(&d.external_id) {
                    return Err(CatalogError::DuplicateSubject(d.external_id.clone()));
                }
            }
        }
        let subjects: Vec<Subject> = {
            let mut state = self.state.write().unwrap();
            descriptors
                .into_iter()
                .map(|d| Subject {
                    id: state.alloc(),
                    study_id,
                    external_id: d.external_id,
                    display_name: d.display_name,
                })
                .collect()
        };
        self.commit(&mut journal, Op::CreateSubjects(subjects.clone()))?;
        Ok(subjects)
    }

    pub fn list_subjects(&self, study_id: StudyId) -> Result<Vec<Subject>, CatalogError> {
        let state = self.read();
        if !state.studies.contains_key(&study_id) {
            return Err(CatalogError::UnknownStudy(study_id.to_string()));
        }
        Ok(state.subjects.values().filter(|s| s.study_id == study_id).cloned().collect())
    }

    pub fn get_subject(&self, id: SubjectId) -> Result<Subject, CatalogError> {
        self.read()
            .subjects
            .get(&id)
            .cloned()
            .ok_or_else(|| CatalogError::UnknownSubject(id.to_string()))
    }

    /// Resolves the subject a file belongs to: the explicit id, or else the
    /// `subject_id@study.extension` convention.
    pub fn resolve_subject(&self, filename: &str, subject_id: Option<SubjectId>) -> Result<Subject, CatalogError> {
        if let Some(id) = subject_id {
            return self.get_subject(id);
        }
        let parts = parse_filename(filename)
            .ok_or_else(|| CatalogError::UnmappedFilename(filename.to_string()))?;
        let state = self.read();
        let study = state
            .study_by_name(&parts.study)
            .ok_or_else(|| CatalogError::UnknownStudy(parts.study.clone()))?;
        state
            .subject_in(study.id, &parts.subject_id)
            .cloned()
            .ok_or_else(|| CatalogError::UnknownSubject(format!("{}@{}", parts.subject_id, parts.study)))
    }

    /// Stores `bytes` and records a new file asset bound to its subject.
    pub fn register_file(
        &self,
        bytes: &[u8],
        filename: &str,
        subject_id: Option<SubjectId>,
        meta: FileMeta,
    ) -> Result<FileAsset, CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        let subject = self.resolve_subject(filename, subject_id)?;
        {
            let state = self.read();
            if let Some(src) = meta.source_file_id {
                if !state.files.contains_key(&src) {
                    return Err(CatalogError::UnknownFile(src));
                }
            }
            if let Some(job) = meta.source_job_id {
                if !state.jobs.contains_key(&job) {
                    return Err(CatalogError::UnknownJob(job));
                }
            }
        }
        let stored = self.blobs.put(bytes)?;
        let asset = FileAsset {
            id: self.state.write().unwrap().alloc(),
            subject_id: subject.id,
            filename: filename.to_string(),
            kind: meta.kind.unwrap_or_else(|| FileKind::from_filename(filename)),
            size_bytes: bytes.len() as u64,
            content_hash: stored.hash.clone(),
            sample_rate_hz: meta.sample_rate_hz,
            mapping: meta.mapping,
            source_file_id: meta.source_file_id,
            source_job_id: meta.source_job_id,
            created_at_ms: now_ms(),
        };
        if let Err(e) = self.commit(&mut journal, Op::RegisterFile(asset.clone())) {
            if stored.created {
                self.blobs.remove(&stored.hash);
            }
            return Err(e);
        }
        Ok(asset)
    }

    pub fn get_file(&self, id: FileId) -> Result<FileAsset, CatalogError> {
        self.read().files.get(&id).cloned().ok_or(CatalogError::UnknownFile(id))
    }

    pub fn list_files(&self, subject_id: SubjectId) -> Result<Vec<FileAsset>, CatalogError> {
        let state = self.read();
        if !state.subjects.contains_key(&subject_id) {
            return Err(CatalogError::UnknownSubject(subject_id.to_string()));
        }
        Ok(state.files.values().filter(|f| f.subject_id == subject_id).cloned().collect())
    }

    pub fn read_content(&self, id: FileId) -> Result<Vec<u8>, CatalogError> {
        let asset = self.get_file(id)?;
        Ok(self.blobs.get(&asset.content_hash)?)
    }

    pub fn content_path(&self, id: FileId) -> Result<PathBuf, CatalogError> {
        Ok(self.blobs.path_of(&self.get_file(id)?.content_hash))
    }

    /// Most recent file of `kind` derived from `source`.
    pub fn derived_file(&self, source: FileId, kind: FileKind) -> Option<FileAsset> {
        self.read()
            .files
            .values()
            .rev()
            .find(|f| f.source_file_id == Some(source) && f.kind == kind)
            .cloned()
    }

    pub fn put_job(&self, job: &Job) -> Result<(), CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        self.commit(&mut journal, Op::PutJob(job.clone()))
    }

    pub fn get_job(&self, id: JobId) -> Result<Job, CatalogError> {
        self.read().jobs.get(&id).cloned().ok_or(CatalogError::UnknownJob(id))
    }

    pub fn list_jobs(&self) -> Vec<Job> {
        self.read().jobs.values().cloned().collect()
    }

    /// First id not used by any persisted job.
    pub fn next_job_id(&self) -> JobId {
        self.read().jobs.keys().next_back().map_or(1, |id| id + 1)
    }

    pub fn delete_study(&self, id: StudyId) -> Result<(), CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        {
            let state = self.read();
            if !state.studies.contains_key(&id) {
                return Err(CatalogError::UnknownStudy(id.to_string()));
            }
            if state.subjects.values().any(|s| s.study_id == id) {
                return Err(CatalogError::HasDependents(format!("study {id}")));
            }
        }
        self.commit(&mut journal, Op::DeleteStudy(id))
    }

    pub fn delete_subject(&self, id: SubjectId) -> Result<(), CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        {
            let state = self.read();
            if !state.subjects.contains_key(&id) {
                return Err(CatalogError::UnknownSubject(id.to_string()));
            }
            if state.files.values().any(|f| f.subject_id == id) {
                return Err(CatalogError::HasDependents(format!("subject {id}")));
            }
        }
        self.commit(&mut journal, Op::DeleteSubject(id))
    }

    pub fn delete_file(&self, id: FileId) -> Result<(), CatalogError> {
        let mut journal = self.journal.lock().unwrap();
        let hash = {
            let state = self.read();
            let asset = state.files.get(&id).ok_or(CatalogError::UnknownFile(id))?;
            if state.files.values().any(|f| f.source_file_id == Some(id)) {
                return Err(CatalogError::HasDependents(format!("file {id}")));
            }
            let active = state
                .jobs
                .values()
                .any(|j| !j.state.is_terminal() && j.input == crate::workers::FileRef::Asset(id));
            if active {
                return Err(CatalogError::HasDependents(format!("file {id}")));
            }
            asset.content_hash.clone()
        };
        self.commit(&mut journal, Op::DeleteFile(id))?;
        if !self.read().files.values().any(|f| f.content_hash == hash) {
            self.blobs.remove(&hash);
        }
        Ok(())
    }

    /// Jobs in a non-terminal state, oldest first.
    pub fn active_jobs(&self) -> Vec<Job> {
        self.read()
            .jobs
            .values()
            .filter(|j| matches!(j.state, JobState::Queued | JobState::Running))
            .cloned()
            .collect()
    }
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}
