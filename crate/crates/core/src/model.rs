//! Domain types shared by every stage: samples, recordings and channels.
//!
//! Missingness is an explicit `Option` per channel. NaN never appears inside
//! a [`Recording`]; it exists only in the on-disk compressed format.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the four measured series an eye tracker delivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PupilLeft,
    PupilRight,
    GazeLeft,
    GazeRight,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::PupilLeft,
        Channel::PupilRight,
        Channel::GazeLeft,
        Channel::GazeRight,
    ];

    pub fn eye(self) -> Eye {
        match self {
            Channel::PupilLeft | Channel::GazeLeft => Eye::Left,
            Channel::PupilRight | Channel::GazeRight => Eye::Right,
        }
    }

    pub fn is_pupil(self) -> bool {
        matches!(self, Channel::PupilLeft | Channel::PupilRight)
    }

    fn bit(self) -> u8 {
        match self {
            Channel::PupilLeft => 1,
            Channel::PupilRight => 2,
            Channel::GazeLeft => 4,
            Channel::GazeRight => 8,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Channel::PupilLeft => "pupil_left",
            Channel::PupilRight => "pupil_right",
            Channel::GazeLeft => "gaze_left",
            Channel::GazeRight => "gaze_right",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub const BOTH: [Eye; 2] = [Eye::Left, Eye::Right];

    pub fn pupil_channel(self) -> Channel {
        match self {
            Eye::Left => Channel::PupilLeft,
            Eye::Right => Channel::PupilRight,
        }
    }

    pub fn gaze_channel(self) -> Channel {
        match self {
            Eye::Left => Channel::GazeLeft,
            Eye::Right => Channel::GazeRight,
        }
    }
}

/// Set of carried channels, stored as a four-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChannelSet(u8);

impl ChannelSet {
    pub const fn empty() -> Self {
        ChannelSet(0)
    }

    pub fn all() -> Self {
        Channel::ALL.into_iter().collect()
    }

    pub fn contains(self, channel: Channel) -> bool {
        self.0 & channel.bit() != 0
    }

    pub fn insert(&mut self, channel: Channel) {
        self.0 |= channel.bit();
    }

    pub fn remove(&mut self, channel: Channel) {
        self.0 &= !channel.bit();
    }

    pub fn with(mut self, channel: Channel) -> Self {
        self.insert(channel);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Channel> {
        Channel::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    pub fn is_binocular_pupil(self) -> bool {
        self.contains(Channel::PupilLeft) && self.contains(Channel::PupilRight)
    }

    pub fn is_binocular_gaze(self) -> bool {
        self.contains(Channel::GazeLeft) && self.contains(Channel::GazeRight)
    }
}

impl FromIterator<Channel> for ChannelSet {
    fn from_iter<I: IntoIterator<Item = Channel>>(iter: I) -> Self {
        let mut set = ChannelSet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl Serialize for ChannelSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let channels = Vec::<Channel>::deserialize(deserializer)?;
        Ok(channels.into_iter().collect())
    }
}

/// A gaze point in screen pixels. Either coordinate may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazePoint {
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl GazePoint {
    pub const MISSING: GazePoint = GazePoint { x: None, y: None };

    pub fn new(x: f64, y: f64) -> Self {
        GazePoint {
            x: Some(x),
            y: Some(y),
        }
    }

    /// A gaze point counts as missing when either coordinate is missing.
    pub fn is_missing(&self) -> bool {
        self.x.is_none() || self.y.is_none()
    }
}

/// One eye-tracker measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Milliseconds since recording start.
    pub timestamp_ms: f64,
    /// Pupil diameters in mm.
    pub pupil_left: Option<f64>,
    pub pupil_right: Option<f64>,
    pub gaze_left: GazePoint,
    pub gaze_right: GazePoint,
}

impl Sample {
    pub fn at(timestamp_ms: f64) -> Self {
        Sample {
            timestamp_ms,
            pupil_left: None,
            pupil_right: None,
            gaze_left: GazePoint::MISSING,
            gaze_right: GazePoint::MISSING,
        }
    }

    pub fn with_pupils(timestamp_ms: f64, left: Option<f64>, right: Option<f64>) -> Self {
        Sample {
            pupil_left: left,
            pupil_right: right,
            ..Sample::at(timestamp_ms)
        }
    }

    pub fn pupil(&self, eye: Eye) -> Option<f64> {
        match eye {
            Eye::Left => self.pupil_left,
            Eye::Right => self.pupil_right,
        }
    }

    pub fn pupil_mut(&mut self, eye: Eye) -> &mut Option<f64> {
        match eye {
            Eye::Left => &mut self.pupil_left,
            Eye::Right => &mut self.pupil_right,
        }
    }

    pub fn gaze(&self, eye: Eye) -> GazePoint {
        match eye {
            Eye::Left => self.gaze_left,
            Eye::Right => self.gaze_right,
        }
    }

    pub fn gaze_mut(&mut self, eye: Eye) -> &mut GazePoint {
        match eye {
            Eye::Left => &mut self.gaze_left,
            Eye::Right => &mut self.gaze_right,
        }
    }

    /// Clears pupil and gaze of one eye.
    pub fn clear_eye(&mut self, eye: Eye) {
        *self.pupil_mut(eye) = None;
        *self.gaze_mut(eye) = GazePoint::MISSING;
    }

    pub fn has_value(&self, channel: Channel) -> bool {
        match channel {
            Channel::PupilLeft => self.pupil_left.is_some(),
            Channel::PupilRight => self.pupil_right.is_some(),
            Channel::GazeLeft => self.gaze_left.x.is_some() || self.gaze_left.y.is_some(),
            Channel::GazeRight => self.gaze_right.x.is_some() || self.gaze_right.y.is_some(),
        }
    }
}

/// True iff the channel's value is absent; a gaze point is absent when
/// either coordinate is.
pub fn is_missing(sample: &Sample, channel: Channel) -> bool {
    match channel {
        Channel::PupilLeft => sample.pupil_left.is_none(),
        Channel::PupilRight => sample.pupil_right.is_none(),
        Channel::GazeLeft => sample.gaze_left.is_missing(),
        Channel::GazeRight => sample.gaze_right.is_missing(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("recording contains no samples")]
    Empty,
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("negative or non-finite timestamp at index {index}")]
    InvalidTimestamp { index: usize },
    #[error("non-increasing timestamp at index {index}")]
    NonIncreasingTimestamp { index: usize },
    #[error("non-finite {channel} value at index {index}")]
    NonFiniteValue { index: usize, channel: Channel },
    #[error("non-positive {channel} diameter at index {index}")]
    NonPositivePupil { index: usize, channel: Channel },
    #[error("{channel} value at index {index} but channel is not carried")]
    ChannelNotCarried { index: usize, channel: Channel },
}

/// An ordered, validated series of samples.
///
/// Immutable once built; filters produce new recordings.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: Vec<Sample>,
    sample_rate_hz: f64,
    channels: ChannelSet,
}

impl Recording {
    /// Validates `samples`, inferring the carried channels from the values present.
    pub fn new(samples: Vec<Sample>, sample_rate_hz: f64) -> Result<Self, ModelError> {
        let channels = samples
            .iter()
            .flat_map(|s| Channel::ALL.into_iter().filter(|c| s.has_value(*c)))
            .collect();
        Self::with_channels(samples, sample_rate_hz, channels)
    }

    /// Validates `samples` against an explicit set of carried channels.
    pub fn with_channels(
        samples: Vec<Sample>,
        sample_rate_hz: f64,
        channels: ChannelSet,
    ) -> Result<Self, ModelError> {
        validate_rate(sample_rate_hz)?;
        if samples.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut prev = f64::NEG_INFINITY;
        for (index, s) in samples.iter().enumerate() {
            if !s.timestamp_ms.is_finite() || s.timestamp_ms < 0.0 {
                return Err(ModelError::InvalidTimestamp { index });
            }
            if s.timestamp_ms <= prev {
                return Err(ModelError::NonIncreasingTimestamp { index });
            }
            prev = s.timestamp_ms;
            for eye in Eye::BOTH {
                let channel = eye.pupil_channel();
                if let Some(v) = s.pupil(eye) {
                    check_carried(channels, channel, index)?;
                    if !v.is_finite() {
                        return Err(ModelError::NonFiniteValue { index, channel });
                    }
                    if v <= 0.0 {
                        return Err(ModelError::NonPositivePupil { index, channel });
                    }
                }
                let channel = eye.gaze_channel();
                let g = s.gaze(eye);
                for v in [g.x, g.y].into_iter().flatten() {
                    check_carried(channels, channel, index)?;
                    if !v.is_finite() {
                        return Err(ModelError::NonFiniteValue { index, channel });
                    }
                }
            }
        }
        Ok(Recording {
            samples,
            sample_rate_hz,
            channels,
        })
    }

    /// Builds a recording whose invariants the caller already guarantees.
    pub(crate) fn from_parts_unchecked(
        samples: Vec<Sample>,
        sample_rate_hz: f64,
        channels: ChannelSet,
    ) -> Self {
        debug_assert!(samples.windows(2).all(|w| w[0].timestamp_ms < w[1].timestamp_ms));
        debug_assert!(samples.iter().all(|s| {
            [s.pupil_left, s.pupil_right, s.gaze_left.x, s.gaze_left.y, s.gaze_right.x, s.gaze_right.y]
                .into_iter()
                .flatten()
                .all(f64::is_finite)
        }));
        Recording {
            samples,
            sample_rate_hz,
            channels,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channels(&self) -> ChannelSet {
        self.channels
    }

    pub fn duration_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.timestamp_ms - a.timestamp_ms,
            _ => 0.0,
        }
    }

    /// Nominal sampling period in milliseconds.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz
    }

    /// Returns a copy with a different nominal sample rate.
    pub fn with_sample_rate(mut self, sample_rate_hz: f64) -> Result<Self, ModelError> {
        validate_rate(sample_rate_hz)?;
        self.sample_rate_hz = sample_rate_hz;
        Ok(self)
    }

    /// Applies `f` to a copy of the samples, keeping rate and channels.
    pub(crate) fn map_samples(&self, f: impl FnOnce(&mut [Sample])) -> Recording {
        let mut samples = self.samples.clone();
        f(&mut samples);
        Recording::from_parts_unchecked(samples, self.sample_rate_hz, self.channels)
    }

    /// Counts samples where `channel` is missing.
    pub fn missing_count(&self, channel: Channel) -> usize {
        self.samples.iter().filter(|s| is_missing(s, channel)).count()
    }
}

fn validate_rate(rate: f64) -> Result<(), ModelError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidSampleRate(rate))
    }
}

fn check_carried(channels: ChannelSet, channel: Channel, index: usize) -> Result<(), ModelError> {
    if channels.contains(channel) {
        Ok(())
    } else {
        Err(ModelError::ChannelNotCarried { index, channel })
    }
}

/// Validates raw samples into a [`Recording`].
pub fn validate_recording(samples: Vec<Sample>, sample_rate_hz: f64) -> Result<Recording, ModelError> {
    Recording::new(samples, sample_rate_hz)
}
