//! Inspection of stored recordings: min/max envelopes for plotting, average
//! pupil size, and a memory-bounded cache of decoded recordings.

mod cache;
mod envelope;
mod service;

pub use cache::{CacheStats, SeriesCache, DEFAULT_CACHE_BYTES};
pub use envelope::{average_pupil, envelope, AverageMode, Bucket, Envelope, MAX_POINTS_LIMIT};
pub use service::{AverageResponse, SeriesResponse, SeriesService};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::FileId;
use crate::model::{Channel, Sample};

/// One scalar series of a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesChannel {
    PupilLeft,
    PupilRight,
    GazeLeftX,
    GazeLeftY,
    GazeRightX,
    GazeRightY,
}

impl SeriesChannel {
    pub const ALL: [SeriesChannel; 6] = [
        SeriesChannel::PupilLeft,
        SeriesChannel::PupilRight,
        SeriesChannel::GazeLeftX,
        SeriesChannel::GazeLeftY,
        SeriesChannel::GazeRightX,
        SeriesChannel::GazeRightY,
    ];

    pub fn value(self, s: &Sample) -> Option<f64> {
        match self {
            SeriesChannel::PupilLeft => s.pupil_left,
            SeriesChannel::PupilRight => s.pupil_right,
            SeriesChannel::GazeLeftX => s.gaze_left.x,
            SeriesChannel::GazeLeftY => s.gaze_left.y,
            SeriesChannel::GazeRightX => s.gaze_right.x,
            SeriesChannel::GazeRightY => s.gaze_right.y,
        }
    }

    pub fn channel(self) -> Channel {
        match self {
            SeriesChannel::PupilLeft => Channel::PupilLeft,
            SeriesChannel::PupilRight => Channel::PupilRight,
            SeriesChannel::GazeLeftX | SeriesChannel::GazeLeftY => Channel::GazeLeft,
            SeriesChannel::GazeRightX | SeriesChannel::GazeRightY => Channel::GazeRight,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeriesChannel::PupilLeft => "pupil_left",
            SeriesChannel::PupilRight => "pupil_right",
            SeriesChannel::GazeLeftX => "gaze_left_x",
            SeriesChannel::GazeLeftY => "gaze_left_y",
            SeriesChannel::GazeRightX => "gaze_right_x",
            SeriesChannel::GazeRightY => "gaze_right_y",
        }
    }
}

impl fmt::Display for SeriesChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeriesChannel {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeriesChannel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| SeriesError::UnknownChannel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {0} is not carried by this recording")]
    ChannelNotCarried(SeriesChannel),
    #[error("max_points must be between 2 and {MAX_POINTS_LIMIT}, got {0}")]
    InvalidMaxPoints(usize),
    #[error("invalid window: from {from_ms} ms is after to {to_ms} ms")]
    InvalidWindow { from_ms: f64, to_ms: f64 },
    #[error("no samples in the requested window")]
    EmptyWindow,
    #[error("no qualifying pupil samples")]
    NoPupilData,
    #[error("unknown file {0}")]
    UnknownFile(FileId),
    #[error("inspection unavailable: file {0} has not been compressed yet")]
    InspectionUnavailable(FileId),
    #[error("file {0} is not a recording")]
    NotASeries(FileId),
    #[error("could not decode file {file_id}: {message}")]
    Decode { file_id: FileId, message: String },
}
