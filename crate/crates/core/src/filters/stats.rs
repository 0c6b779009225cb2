use serde::{Deserialize, Serialize};

use super::FilterError;
use crate::model::{Channel, Recording};

/// Mean and population standard deviation over the present samples of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Single pass over the recording, with sums shifted by the first present value.
pub fn channel_stats(recording: &Recording, channel: Channel) -> Result<ChannelStats, FilterError> {
    if !channel.is_pupil() {
        return Err(FilterError::NotAPupilChannel(channel));
    }
    stats_of(recording.samples().iter().filter_map(|s| s.pupil(channel.eye())))
        .ok_or(FilterError::NoPresentSamples(channel))
}

pub(crate) fn stats_of(values: impl Iterator<Item = f64>) -> Option<ChannelStats> {
    let mut shift = None;
    let (mut n, mut sum, mut sum_sq) = (0usize, 0.0f64, 0.0f64);
    for v in values {
        let k = *shift.get_or_insert(v);
        let d = v - k;
        n += 1;
        sum += d;
        sum_sq += d * d;
    }
    let shift = shift?;
    let nf = n as f64;
    let mean = shift + sum / nf;
    let variance = ((sum_sq - sum * (sum / nf)) / nf).max(0.0);
    Some(ChannelStats {
        mean,
        sigma: variance.sqrt(),
        n,
    })
}
