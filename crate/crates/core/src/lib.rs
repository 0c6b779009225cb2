//! Pupillometry cleaning: ingest of eye-tracker exports, the six cleaning
//! filters and their chains, a bounded worker pool, a durable catalog of
//! studies/subjects/files/jobs, and downsampled series for inspection.

pub mod catalog;
pub mod filters;
pub mod ingest;
pub mod model;
pub mod series;
pub mod workers;

pub use catalog::{Catalog, CatalogError, FileAsset, FileKind, FileMeta, Study, Subject};
pub use filters::{apply_chain, validate_chain, ChainDocument, ChainReport, FilterConfig, FilterKind};
pub use ingest::{
    load_recording, parse_filename, parse_tsv, read_compressed, write_compressed, ColumnMapping,
};
pub use model::{is_missing, validate_recording, Channel, ChannelSet, Eye, GazePoint, Recording, Sample};
pub use series::{average_pupil, envelope, AverageMode, SeriesCache, SeriesChannel, SeriesService};
pub use workers::{pool_size, FileRef, Job, JobKind, JobSpec, JobState, PoolConfig, WorkerPool};
