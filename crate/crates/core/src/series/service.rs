use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{average_pupil, envelope, AverageMode, CacheStats, Envelope, SeriesCache, SeriesChannel, SeriesError};
use crate::catalog::{Catalog, CatalogError, FileAsset, FileId, FileKind};
use crate::ingest::read_compressed;
use crate::model::Recording;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResponse {
    pub file_id: FileId,
    /// The compressed file the data was read from.
    pub source_file_id: FileId,
    #[serde(flatten)]
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageResponse {
    pub file_id: FileId,
    pub source_file_id: FileId,
    pub mode: AverageMode,
    pub average_mm: f64,
}

/// Inspection of catalog files through a shared [`SeriesCache`].
pub struct SeriesService {
    catalog: Arc<Catalog>,
    cache: SeriesCache,
}

impl SeriesService {
    pub fn new(catalog: Arc<Catalog>, cache: SeriesCache) -> SeriesService {
        SeriesService { catalog, cache }
    }

    /// Picks the compressed file backing `file_id`. Raw files are served
    /// through their compressed derivative and refused until it exists.
    pub fn resolve(&self, file_id: FileId) -> Result<FileAsset, SeriesError> {
        let asset = self.catalog.get_file(file_id).map_err(|e| match e {
            CatalogError::UnknownFile(id) => SeriesError::UnknownFile(id),
            other => SeriesError::Decode {
                file_id,
                message: other.to_string(),
            },
        })?;
        match asset.kind {
            FileKind::Compressed | FileKind::Cleaned => Ok(asset),
            FileKind::Raw => self
                .catalog
                .derived_file(file_id, FileKind::Compressed)
                .ok_or(SeriesError::InspectionUnavailable(file_id)),
            FileKind::Video | FileKind::Other => Err(SeriesError::NotASeries(file_id)),
        }
    }

    pub fn recording(&self, file_id: FileId) -> Result<(FileAsset, Arc<Recording>), SeriesError> {
        let source = self.resolve(file_id)?;
        let recording = self.cache.get_or_load(source.id, || {
            let decode_err = |message: String| SeriesError::Decode {
                file_id: source.id,
                message,
            };
            let bytes = self.catalog.read_content(source.id).map_err(|e| decode_err(e.to_string()))?;
            read_compressed(&bytes, source.sample_rate_hz).map_err(|e| decode_err(e.to_string()))
        })?;
        Ok((source, recording))
    }

    pub fn series(
        &self,
        file_id: FileId,
        channel: SeriesChannel,
        from_ms: Option<f64>,
        to_ms: Option<f64>,
        max_points: usize,
    ) -> Result<SeriesResponse, SeriesError> {
        let (source, recording) = self.recording(file_id)?;
        Ok(SeriesResponse {
            file_id,
            source_file_id: source.id,
            envelope: envelope(&recording, channel, from_ms, to_ms, max_points)?,
        })
    }

    pub fn average(&self, file_id: FileId, mode: AverageMode) -> Result<AverageResponse, SeriesError> {
        let (source, recording) = self.recording(file_id)?;
        Ok(AverageResponse {
            file_id,
            source_file_id: source.id,
            mode,
            average_mm: average_pupil(&recording, mode)?,
        })
    }

    pub fn invalidate(&self, file_id: FileId) {
        self.cache.invalidate(file_id);
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }
}
