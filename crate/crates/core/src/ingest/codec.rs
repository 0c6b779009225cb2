//! The `CEPW` compressed columnar series format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "CEPW" | version: u32 = 1 | channel bits: u32 | sample count: u64
//! timestamps: [f64; count]            (milliseconds)
//! one [f64; count] array per set bit  (NaN = missing)
//! ```
//!
//! Bit order: 0 pupil left, 1 pupil right, 2 gaze left x, 3 gaze left y,
//! 4 gaze right x, 5 gaze right y.

use super::IngestError;
use crate::model::{Channel, ChannelSet, Recording, Sample};

pub const MAGIC: [u8; 4] = *b"CEPW";
pub const FORMAT_VERSION: u32 = 1;
pub const CHANNEL_BITS: u32 = 0b11_1111;

const HEADER_LEN: usize = 4 + 4 + 4 + 8;

const PUPIL_LEFT: u32 = 1 << 0;
const PUPIL_RIGHT: u32 = 1 << 1;
const GAZE_LEFT_X: u32 = 1 << 2;
const GAZE_LEFT_Y: u32 = 1 << 3;
const GAZE_RIGHT_X: u32 = 1 << 4;
const GAZE_RIGHT_Y: u32 = 1 << 5;

fn bits_for(channels: ChannelSet) -> u32 {
    let mut bits = 0;
    if channels.contains(Channel::PupilLeft) {
        bits |= PUPIL_LEFT;
    }
    if channels.contains(Channel::PupilRight) {
        bits |= PUPIL_RIGHT;
    }
    if channels.contains(Channel::GazeLeft) {
        bits |= GAZE_LEFT_X | GAZE_LEFT_Y;
    }
    if channels.contains(Channel::GazeRight) {
        bits |= GAZE_RIGHT_X | GAZE_RIGHT_Y;
    }
    bits
}

fn field(sample: &Sample, bit: u32) -> Option<f64> {
    match bit {
        PUPIL_LEFT => sample.pupil_left,
        PUPIL_RIGHT => sample.pupil_right,
        GAZE_LEFT_X => sample.gaze_left.x,
        GAZE_LEFT_Y => sample.gaze_left.y,
        GAZE_RIGHT_X => sample.gaze_right.x,
        GAZE_RIGHT_Y => sample.gaze_right.y,
        _ => unreachable!("not a single channel bit"),
    }
}

fn field_mut(sample: &mut Sample, bit: u32) -> &mut Option<f64> {
    match bit {
        PUPIL_LEFT => &mut sample.pupil_left,
        PUPIL_RIGHT => &mut sample.pupil_right,
        GAZE_LEFT_X => &mut sample.gaze_left.x,
        GAZE_LEFT_Y => &mut sample.gaze_left.y,
        GAZE_RIGHT_X => &mut sample.gaze_right.x,
        GAZE_RIGHT_Y => &mut sample.gaze_right.y,
        _ => unreachable!("not a single channel bit"),
    }
}

fn set_bits(bits: u32) -> impl Iterator<Item = u32> {
    (0..6).map(|i| 1u32 << i).filter(move |b| bits & b != 0)
}

/// Encodes the carried channels of a recording.
pub fn write_compressed(recording: &Recording) -> Vec<u8> {
    let bits = bits_for(recording.channels());
    let n = recording.len();
    let series = 1 + bits.count_ones() as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + series * n * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for s in recording.samples() {
        out.extend_from_slice(&s.timestamp_ms.to_le_bytes());
    }
    for bit in set_bits(bits) {
        for s in recording.samples() {
            let v = field(s, bit).unwrap_or(f64::NAN);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes a `CEPW` stream.
///
/// The format carries no sample rate; pass the known rate or `None` to infer
/// it from the mean sampling interval.
pub fn read_compressed(bytes: &[u8], sample_rate_hz: Option<f64>) -> Result<Recording, IngestError> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(IngestError::NotCompressedSeries);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(IngestError::UnsupportedVersion(version));
    }
    let bits = u32_at(8);
    if bits & !CHANNEL_BITS != 0 {
        return Err(IngestError::UnknownChannelBits(bits));
    }
    let declared = u64::from_le_bytes(bytes[12..20].try_into().unwrap());

    let series = 1 + u64::from(bits.count_ones());
    let payload = (bytes.len() - HEADER_LEN) as u64;
    let row_bytes = series * 8;
    let expected = declared
        .checked_mul(row_bytes)
        .filter(|&e| e <= usize::MAX as u64);
    if expected != Some(payload) {
        if payload.is_multiple_of(row_bytes) {
            return Err(IngestError::CountMismatch {
                declared,
                actual: payload / row_bytes,
            });
        }
        return Err(IngestError::Truncated {
            expected: expected.map_or(u64::MAX, |e| e + HEADER_LEN as u64),
            actual: bytes.len() as u64,
        });
    }

    let n = declared as usize;
    let mut arrays = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));

    let mut samples: Vec<Sample> = arrays.by_ref().take(n).map(Sample::at).collect();
    for bit in set_bits(bits) {
        for (s, v) in samples.iter_mut().zip(arrays.by_ref().take(n)) {
            *field_mut(s, bit) = if v.is_nan() { None } else { Some(v) };
        }
    }

    let mut channels = ChannelSet::empty();
    if bits & PUPIL_LEFT != 0 {
        channels.insert(Channel::PupilLeft);
    }
    if bits & PUPIL_RIGHT != 0 {
        channels.insert(Channel::PupilRight);
    }
    if bits & (GAZE_LEFT_X | GAZE_LEFT_Y) != 0 {
        channels.insert(Channel::GazeLeft);
    }
    if bits & (GAZE_RIGHT_X | GAZE_RIGHT_Y) != 0 {
        channels.insert(Channel::GazeRight);
    }

    let rate = match sample_rate_hz {
        Some(rate) => rate,
        None => infer_rate(&samples)?,
    };
    Ok(Recording::with_channels(samples, rate, channels)?)
}

pub(crate) fn infer_rate(samples: &[Sample]) -> Result<f64, IngestError> {
    match (samples.first(), samples.last()) {
        (Some(a), Some(b)) if samples.len() >= 2 && b.timestamp_ms > a.timestamp_ms => {
            Ok(1000.0 * (samples.len() - 1) as f64 / (b.timestamp_ms - a.timestamp_ms))
        }
        _ => Err(IngestError::UnknownSampleRate),
    }
}
