//! Turning bytes into recordings and back.
//!
//! * [`parse_tsv`] reads eye-tracker TSV exports through a [`ColumnMapping`].
//! * [`parse_filename`] recognises the `subject_id@study.extension` convention.
//! * [`import_subjects_csv`] reads subject lists.
//! * [`write_compressed`] / [`read_compressed`] implement the compact columnar
//!   `CEPW` series format used for inspection and as job output.

mod codec;
mod filename;
mod subjects;
mod tsv;

pub use codec::{read_compressed, write_compressed, CHANNEL_BITS, FORMAT_VERSION, MAGIC};
pub use filename::{parse_filename, FileNameParts};
pub use subjects::{import_subjects_csv, SubjectDescriptor};
pub use tsv::{parse_tsv, ColumnMapping, TimestampUnit};

use thiserror::Error;

use crate::model::{ModelError, Recording};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),
    #[error("mapped column {0:?} not found in header")]
    MissingColumn(String),
    #[error("no data rows")]
    NoDataRows,
    #[error("unparsable timestamp {value:?} on line {line}")]
    BadTimestamp { line: usize, value: String },
    #[error("subject list is empty")]
    EmptySubjectList,
    #[error("duplicate subject identifier {0:?}")]
    DuplicateSubject(String),
    #[error("empty subject identifier on line {0}")]
    EmptySubjectId(usize),
    #[error("malformed subject csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("not a compressed series file")]
    NotCompressedSeries,
    #[error("unsupported compressed series version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown channel bits {0:#x}")]
    UnknownChannelBits(u32),
    #[error("truncated stream: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("sample count mismatch: header declares {declared}, payload holds {actual}")]
    CountMismatch { declared: u64, actual: u64 },
    #[error("cannot infer a sample rate from fewer than two samples")]
    UnknownSampleRate,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Decodes either format: `CEPW` content is recognised by its magic bytes,
/// anything else is parsed as TSV through `mapping`.
///
/// Without a known rate, the rate is inferred from the mean sampling interval.
pub fn load_recording(
    bytes: &[u8],
    mapping: &ColumnMapping,
    sample_rate_hz: Option<f64>,
) -> Result<Recording, IngestError> {
    if bytes.starts_with(&MAGIC) {
        return read_compressed(bytes, sample_rate_hz);
    }
    match sample_rate_hz {
        Some(rate) => parse_tsv(bytes, mapping, rate),
        None => {
            let parsed = parse_tsv(bytes, mapping, 1.0)?;
            let rate = codec::infer_rate(parsed.samples())?;
            Ok(parsed.with_sample_rate(rate)?)
        }
    }
}
