use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{FileRef, Job, JobKind, JobOutcome, JobRunner};
use crate::catalog::{Catalog, FileAsset, FileKind, FileMeta};
use crate::filters::{apply_chain, ChainReport};
use crate::ingest::{load_recording, write_compressed, ColumnMapping};
use crate::model::Recording;

fn execute(kind: &JobKind, recording: &Recording) -> Result<(Recording, Option<ChainReport>), String> {
    match kind {
        JobKind::Compress => Ok((recording.clone(), None)),
        JobKind::Clean { chain } => {
            let (out, report) = apply_chain(recording, chain).map_err(|e| e.to_string())?;
            Ok((out, Some(report)))
        }
    }
}

fn stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

/// Runs jobs on local files, writing compressed output into a directory.
pub struct FsRunner {
    pub output_dir: PathBuf,
    pub mapping: ColumnMapping,
    /// Rate for TSV input; inferred from timestamps when absent.
    pub sample_rate_hz: Option<f64>,
}

impl FsRunner {
    fn target(&self, job: &Job, input: &Path) -> PathBuf {
        if let Some(FileRef::Path(p)) = &job.output {
            return p.clone();
        }
        let name = input.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
        self.output_dir.join(format!("{}.cepw", stem(&name)))
    }
}

impl JobRunner for FsRunner {
    fn check_input(&self, input: &FileRef) -> Result<(), String> {
        match input {
            FileRef::Path(p) if p.is_file() => Ok(()),
            FileRef::Path(p) => Err(format!("{} is not a readable file", p.display())),
            FileRef::Asset(id) => Err(format!("catalog file {id} is not available to a local run")),
        }
    }

    fn run(&self, job: &Job) -> Result<JobOutcome, String> {
        let FileRef::Path(input) = &job.input else {
            return Err("local runs need a path input".into());
        };
        let bytes = fs::read(input).map_err(|e| format!("{}: {e}", input.display()))?;
        let recording = load_recording(&bytes, &self.mapping, self.sample_rate_hz)
            .map_err(|e| format!("{}: {e}", input.display()))?;
        let (out, report) = execute(&job.kind, &recording)?;
        let target = self.target(job, input);
        write_atomically(&target, &write_compressed(&out), job.id)
            .map_err(|e| format!("{}: {e}", target.display()))?;
        Ok(JobOutcome {
            output: Some(FileRef::Path(target)),
            report,
        })
    }
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomically(target: &Path, bytes: &[u8], job_id: u64) -> std::io::Result<()> {
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = target.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{job_id}.partial"));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, target)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Runs jobs on catalog files and registers the output as a new file.
///
/// Job records must already be persisted in the catalog (see
/// [`super::PoolOptions::on_update`]) so outputs can reference them.
pub struct CatalogRunner {
    catalog: Arc<Catalog>,
}

impl CatalogRunner {
    pub fn new(catalog: Arc<Catalog>) -> CatalogRunner {
        CatalogRunner { catalog }
    }

    fn asset(&self, input: &FileRef) -> Result<FileAsset, String> {
        let FileRef::Asset(id) = input else {
            return Err(format!("{input} is not a catalog file"));
        };
        let asset = self.catalog.get_file(*id).map_err(|e| e.to_string())?;
        match asset.kind {
            FileKind::Raw | FileKind::Compressed | FileKind::Cleaned => Ok(asset),
            kind => Err(format!("file {id} holds {kind:?} content, not a recording")),
        }
    }

    /// Decodes the best available form of `asset`: its compressed derivative
    /// if one exists, otherwise the asset itself.
    fn load(&self, asset: &FileAsset) -> Result<Recording, String> {
        let source = match asset.kind {
            FileKind::Raw => self
                .catalog
                .derived_file(asset.id, FileKind::Compressed)
                .unwrap_or_else(|| asset.clone()),
            _ => asset.clone(),
        };
        let bytes = self.catalog.read_content(source.id).map_err(|e| e.to_string())?;
        let mapping = source.mapping.clone().unwrap_or_default();
        load_recording(&bytes, &mapping, source.sample_rate_hz)
            .map_err(|e| format!("{}: {e}", source.filename))
    }
}

impl JobRunner for CatalogRunner {
    fn check_input(&self, input: &FileRef) -> Result<(), String> {
        self.asset(input).map(|_| ())
    }

    fn run(&self, job: &Job) -> Result<JobOutcome, String> {
        let asset = self.asset(&job.input)?;
        let recording = self.load(&asset)?;
        let (out, report) = execute(&job.kind, &recording)?;
        let (kind, name) = match job.kind {
            JobKind::Compress => (FileKind::Compressed, format!("{}.cepw", stem(&asset.filename))),
            JobKind::Clean { .. } => (
                FileKind::Cleaned,
                format!("{}.cleaned-{}.cepw", stem(&asset.filename), job.id),
            ),
        };
        let meta = FileMeta {
            kind: Some(kind),
            sample_rate_hz: Some(out.sample_rate_hz()),
            mapping: None,
            source_file_id: Some(asset.id),
            source_job_id: Some(job.id),
        };
        let registered = self
            .catalog
            .register_file(&write_compressed(&out), &name, Some(asset.subject_id), meta)
            .map_err(|e| e.to_string())?;
        Ok(JobOutcome {
            output: Some(FileRef::Asset(registered.id)),
            report,
        })
    }
}
