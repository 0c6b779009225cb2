use serde::{Deserialize, Serialize};

use super::{SeriesChannel, SeriesError};
use crate::model::{Eye, Recording, Sample};

pub const MAX_POINTS_LIMIT: usize = 100_000;

/// Range of one channel over an equal-time slice of the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start_ms: f64,
    pub end_ms: f64,
    /// Present values in the slice.
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// No present values; plot as a gap.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub channel: SeriesChannel,
    pub from_ms: f64,
    pub to_ms: f64,
    pub bucket_ms: f64,
    /// Samples in the whole recording.
    pub total_samples: usize,
    /// Samples whose timestamp lies in the window.
    pub window_samples: usize,
    pub buckets: Vec<Bucket>,
}

impl Envelope {
    /// Number of plotted points: a min and a max per bucket.
    pub fn points(&self) -> usize {
        2 * self.buckets.len()
    }
}

/// Min/max envelope of `channel` over `[from_ms, to_ms]`, split into
/// `⌈max_points / 2⌉` buckets of equal duration.
///
/// Bounds default to the recording's first and last timestamps.
pub fn envelope(
    recording: &Recording,
    channel: SeriesChannel,
    from_ms: Option<f64>,
    to_ms: Option<f64>,
    max_points: usize,
) -> Result<Envelope, SeriesError> {
    if !(2..=MAX_POINTS_LIMIT).contains(&max_points) {
        return Err(SeriesError::InvalidMaxPoints(max_points));
    }
    if !recording.channels().contains(channel.channel()) {
        return Err(SeriesError::ChannelNotCarried(channel));
    }
    let samples = recording.samples();
    let from = from_ms.unwrap_or(samples[0].timestamp_ms);
    let to = to_ms.unwrap_or(samples[samples.len() - 1].timestamp_ms);
    if from.is_nan() || to.is_nan() || from > to {
        return Err(SeriesError::InvalidWindow { from_ms: from, to_ms: to });
    }
    let lo = samples.partition_point(|s| s.timestamp_ms < from);
    let hi = samples.partition_point(|s| s.timestamp_ms <= to);
    if lo >= hi {
        return Err(SeriesError::EmptyWindow);
    }

    let n = max_points.div_ceil(2);
    let width = (to - from) / n as f64;
    let mut buckets: Vec<Bucket> = (0..n)
        .map(|i| Bucket {
            start_ms: from + i as f64 * width,
            end_ms: if i + 1 == n { to } else { from + (i + 1) as f64 * width },
            count: 0,
            min: None,
            max: None,
            empty: true,
        })
        .collect();
    for s in &samples[lo..hi] {
        let Some(v) = channel.value(s) else { continue };
        let i = if width > 0.0 {
            (((s.timestamp_ms - from) / width) as usize).min(n - 1)
        } else {
            0
        };
        let b = &mut buckets[i];
        b.count += 1;
        b.empty = false;
        b.min = Some(b.min.map_or(v, |m| m.min(v)));
        b.max = Some(b.max.map_or(v, |m| m.max(v)));
    }
    Ok(Envelope {
        channel,
        from_ms: from,
        to_ms: to,
        bucket_ms: width,
        total_samples: samples.len(),
        window_samples: hi - lo,
        buckets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    /// Per-sample mean of both pupils, over samples where both are present.
    #[default]
    Both,
    Left,
    Right,
}

/// Mean pupil size for `mode`, over the qualifying samples only.
pub fn average_pupil(recording: &Recording, mode: AverageMode) -> Result<f64, SeriesError> {
    let required: &[SeriesChannel] = match mode {
        AverageMode::Both => &[SeriesChannel::PupilLeft, SeriesChannel::PupilRight],
        AverageMode::Left => &[SeriesChannel::PupilLeft],
        AverageMode::Right => &[SeriesChannel::PupilRight],
    };
    if let Some(&c) = required.iter().find(|c| !recording.channels().contains(c.channel())) {
        return Err(SeriesError::ChannelNotCarried(c));
    }
    let value = |s: &Sample| match mode {
        AverageMode::Both => Some((s.pupil(Eye::Left)? + s.pupil(Eye::Right)?) / 2.0),
        AverageMode::Left => s.pupil(Eye::Left),
        AverageMode::Right => s.pupil(Eye::Right),
    };
    let (mut sum, mut n) = (0.0, 0usize);
    for v in recording.samples().iter().filter_map(value) {
        sum += v;
        n += 1;
    }
    if n == 0 {
        return Err(SeriesError::NoPupilData);
    }
    Ok(sum / n as f64)
}
