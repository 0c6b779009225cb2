use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{Channel, ChannelSet, Eye, GazePoint, Recording, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampUnit {
    Microseconds,
    Milliseconds,
    Seconds,
}

impl TimestampUnit {
    fn to_ms(self, elapsed: f64) -> f64 {
        match self {
            TimestampUnit::Microseconds => elapsed / 1000.0,
            TimestampUnit::Milliseconds => elapsed,
            TimestampUnit::Seconds => elapsed * 1000.0,
        }
    }
}

/// Which source columns feed which channel.
///
/// Defaults follow Tobii Studio export headers. Unmapped optional channels are
/// simply not carried by the resulting recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub timestamp_column: String,
    pub timestamp_unit: TimestampUnit,
    pub pupil_left_column: Option<String>,
    pub pupil_right_column: Option<String>,
    pub gaze_left_x_column: Option<String>,
    pub gaze_left_y_column: Option<String>,
    pub gaze_right_x_column: Option<String>,
    pub gaze_right_y_column: Option<String>,
    pub validity_left_column: Option<String>,
    pub validity_right_column: Option<String>,
    pub validity_max_valid: u32,
    pub missing_tokens: Vec<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        let s = |v: &str| Some(v.to_string());
        ColumnMapping {
            timestamp_column: "EyeTrackerTimestamp".into(),
            timestamp_unit: TimestampUnit::Microseconds,
            pupil_left_column: s("PupilLeft"),
            pupil_right_column: s("PupilRight"),
            gaze_left_x_column: s("GazePointLeftX (ADCSpx)"),
            gaze_left_y_column: s("GazePointLeftY (ADCSpx)"),
            gaze_right_x_column: s("GazePointRightX (ADCSpx)"),
            gaze_right_y_column: s("GazePointRightY (ADCSpx)"),
            validity_left_column: s("ValidityLeft"),
            validity_right_column: s("ValidityRight"),
            validity_max_valid: 1,
            missing_tokens: vec![String::new(), "-1".into()],
        }
    }
}

impl ColumnMapping {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.timestamp_column.is_empty() {
            return Err(IngestError::InvalidMapping("timestamp_column is empty".into()));
        }
        if self.pupil_left_column.is_none() && self.pupil_right_column.is_none() {
            return Err(IngestError::InvalidMapping(
                "at least one pupil column must be mapped".into(),
            ));
        }
        if self.gaze_left_x_column.is_some() != self.gaze_left_y_column.is_some()
            || self.gaze_right_x_column.is_some() != self.gaze_right_y_column.is_some()
        {
            return Err(IngestError::InvalidMapping(
                "gaze columns must be mapped as x/y pairs".into(),
            ));
        }
        Ok(())
    }

    fn channels(&self) -> ChannelSet {
        let mut set = ChannelSet::empty();
        if self.pupil_left_column.is_some() {
            set.insert(Channel::PupilLeft);
        }
        if self.pupil_right_column.is_some() {
            set.insert(Channel::PupilRight);
        }
        if self.gaze_left_x_column.is_some() {
            set.insert(Channel::GazeLeft);
        }
        if self.gaze_right_x_column.is_some() {
            set.insert(Channel::GazeRight);
        }
        set
    }
}

/// Resolved header positions.
struct Columns {
    timestamp: usize,
    pupil: [Option<usize>; 2],
    gaze: [Option<(usize, usize)>; 2],
    validity: [Option<usize>; 2],
}

impl Columns {
    fn resolve(header: &[&str], mapping: &ColumnMapping) -> Result<Self, IngestError> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
        };
        let opt = |name: &Option<String>| name.as_deref().map(find).transpose();
        let pair = |x: &Option<String>, y: &Option<String>| -> Result<_, IngestError> {
            Ok(match (opt(x)?, opt(y)?) {
                (Some(x), Some(y)) => Some((x, y)),
                _ => None,
            })
        };
        Ok(Columns {
            timestamp: find(&mapping.timestamp_column)?,
            pupil: [opt(&mapping.pupil_left_column)?, opt(&mapping.pupil_right_column)?],
            gaze: [
                pair(&mapping.gaze_left_x_column, &mapping.gaze_left_y_column)?,
                pair(&mapping.gaze_right_x_column, &mapping.gaze_right_y_column)?,
            ],
            validity: [
                opt(&mapping.validity_left_column)?,
                opt(&mapping.validity_right_column)?,
            ],
        })
    }
}

fn eye_index(eye: Eye) -> usize {
    match eye {
        Eye::Left => 0,
        Eye::Right => 1,
    }
}

/// Parses a tab-separated export into a recording.
///
/// Missing tokens, unparsable or non-finite cells, non-positive pupil sizes,
/// and eyes whose validity code exceeds `validity_max_valid` all become
/// missing. Timestamps are converted to milliseconds and re-based so the first
/// row is at zero. Rows with every channel missing are kept.
pub fn parse_tsv(
    bytes: &[u8],
    mapping: &ColumnMapping,
    sample_rate_hz: f64,
) -> Result<Recording, IngestError> {
    mapping.validate()?;
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::NotUtf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or(IngestError::NoDataRows)?;
    let header: Vec<&str> = header.split('\t').collect();
    let cols = Columns::resolve(&header, mapping)?;

    let is_missing_token = |cell: &str| mapping.missing_tokens.iter().any(|t| t == cell);
    let number = |cell: Option<&str>| -> Option<f64> {
        let cell = cell?.trim();
        if is_missing_token(cell) {
            return None;
        }
        cell.parse::<f64>().ok().filter(|v| v.is_finite())
    };

    let mut samples = Vec::new();
    let mut origin: Option<f64> = None;
    let mut cells: Vec<&str> = Vec::with_capacity(header.len());
    for (line_index, line) in lines {
        cells.clear();
        cells.extend(line.split('\t'));
        let line_no = line_index + 1;
        let raw_ts = cells.get(cols.timestamp).map(|c| c.trim()).unwrap_or("");
        let ts: f64 = raw_ts
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::BadTimestamp {
                line: line_no,
                value: raw_ts.to_string(),
            })?;
        let origin = *origin.get_or_insert(ts);
        let mut sample = Sample::at(mapping.timestamp_unit.to_ms(ts - origin));

        for eye in Eye::BOTH {
            let i = eye_index(eye);
            if let Some(c) = cols.pupil[i] {
                *sample.pupil_mut(eye) = number(cells.get(c).copied()).filter(|v| *v > 0.0);
            }
            if let Some((cx, cy)) = cols.gaze[i] {
                *sample.gaze_mut(eye) = GazePoint {
                    x: number(cells.get(cx).copied()),
                    y: number(cells.get(cy).copied()),
                };
            }
            let invalid = cols.validity[i]
                .and_then(|c| cells.get(c))
                .and_then(|v| v.trim().parse::<i64>().ok())
                .is_some_and(|code| code > i64::from(mapping.validity_max_valid));
            if invalid {
                sample.clear_eye(eye);
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(IngestError::NoDataRows);
    }
    Ok(Recording::with_channels(samples, sample_rate_hz, mapping.channels())?)
}
