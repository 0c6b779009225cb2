//! Chain validation and sequential application.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    blink_detection, butterworth_filter, compensation_shift, gaze_substitution,
    linear_interpolation, pupil_substitution, stddev_filter, FilterConfig, FilterError, FilterKind,
};
use crate::model::{is_missing, Channel, ChannelSet, Recording};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// Stable machine-readable identifiers for chain findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningCode {
    InvalidParameters,
    MissingChannels,
    ButterworthWithoutInterpolation,
    BlinkAfterInterpolation,
    LoneSubstitution,
    InterpolationWithoutBlink,
    OrderDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainWarning {
    pub severity: Severity,
    pub code: WarningCode,
    pub message: String,
    /// Indices into the chain the finding refers to.
    pub positions: Vec<usize>,
}

impl ChainWarning {
    fn new(severity: Severity, code: WarningCode, message: String, positions: Vec<usize>) -> Self {
        ChainWarning {
            severity,
            code,
            message,
            positions,
        }
    }
}

fn channel_requirement(kind: FilterKind, channels: ChannelSet) -> Option<&'static str> {
    match kind {
        FilterKind::PupilSubstitution if !channels.is_binocular_pupil() => {
            Some("both pupil channels")
        }
        FilterKind::GazeSubstitution if !channels.is_binocular_gaze() => Some("both gaze channels"),
        FilterKind::BlinkDetection | FilterKind::Butterworth
            if !channels.contains(Channel::PupilLeft) && !channels.contains(Channel::PupilRight) =>
        {
            Some("a pupil channel")
        }
        _ => None,
    }
}

/// Checks a chain against the recommended ordering and the known bad
/// combinations. Never modifies the chain.
///
/// Errors: invalid parameters, channels the filter needs but the data lacks,
/// and a Butterworth step with no linear interpolation before it. Warnings:
/// blink detection after interpolation, a single substitution filter before
/// blink detection, interpolation without blink detection, and any other
/// departure from the recommended order.
pub fn validate_chain(chain: &[FilterConfig], channels: ChannelSet) -> Vec<ChainWarning> {
    use FilterKind::*;
    let kinds: Vec<FilterKind> = chain.iter().map(FilterConfig::kind).collect();
    let first = |kind: FilterKind| kinds.iter().position(|k| *k == kind);
    let before = |kind: FilterKind, pos: usize| kinds[..pos].contains(&kind);
    let mut out = Vec::new();

    for (i, filter) in chain.iter().enumerate() {
        if let Err(message) = filter.check_parameters() {
            out.push(ChainWarning::new(
                Severity::Error,
                WarningCode::InvalidParameters,
                format!("{}: {message}", filter.kind()),
                vec![i],
            ));
        }
        if let Some(required) = channel_requirement(filter.kind(), channels) {
            out.push(ChainWarning::new(
                Severity::Error,
                WarningCode::MissingChannels,
                format!("{} requires {required}", filter.kind()),
                vec![i],
            ));
        }
    }

    for (i, kind) in kinds.iter().enumerate() {
        match kind {
            Butterworth if !before(LinearInterpolation, i) => out.push(ChainWarning::new(
                Severity::Error,
                WarningCode::ButterworthWithoutInterpolation,
                "Butterworth filtering data that may include missing values leads to filtering artifacts; apply LinearInterpolation first".into(),
                vec![i],
            )),
            BlinkDetection => {
                if let Some(j) = first(LinearInterpolation).filter(|&j| j < i) {
                    out.push(ChainWarning::new(
                        Severity::Warning,
                        WarningCode::BlinkAfterInterpolation,
                        "BlinkDetection relies on missing values that an earlier LinearInterpolation has already filled".into(),
                        vec![i, j],
                    ));
                }
                let pupil = first(PupilSubstitution).filter(|&j| j < i);
                let gaze = first(GazeSubstitution).filter(|&j| j < i);
                if let Some(j) = pupil.xor(gaze) {
                    out.push(ChainWarning::new(
                        Severity::Warning,
                        WarningCode::LoneSubstitution,
                        format!(
                            "{} before BlinkDetection should be combined with {}",
                            kinds[j],
                            if pupil.is_some() { GazeSubstitution } else { PupilSubstitution }
                        ),
                        vec![j, i],
                    ));
                }
            }
            // a later BlinkDetection is already reported as BlinkAfterInterpolation
            LinearInterpolation
                if i == first(LinearInterpolation).unwrap() && !kinds.contains(&BlinkDetection) =>
            {
                out.push(ChainWarning::new(
                    Severity::Warning,
                    WarningCode::InterpolationWithoutBlink,
                    "LinearInterpolation without a preceding BlinkDetection may interpolate from blink artifacts".into(),
                    vec![i],
                ));
            }
            _ => {}
        }
    }

    // Remaining order deviations, excluding pairs covered above.
    let covered = |early: FilterKind, late: FilterKind| {
        matches!(
            (early, late),
            (LinearInterpolation, BlinkDetection) | (Butterworth, LinearInterpolation)
        )
    };
    for i in 0..kinds.len() {
        for j in i + 1..kinds.len() {
            let (a, b) = (kinds[i], kinds[j]);
            if a.recommended_rank() > b.recommended_rank() && !covered(a, b) {
                out.push(ChainWarning::new(
                    Severity::Warning,
                    WarningCode::OrderDeviation,
                    format!("{b} is recommended before {a}"),
                    vec![i, j],
                ));
            }
        }
    }
    out
}

/// Per-filter bookkeeping from [`apply_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub filter: FilterKind,
    /// Channel values turned missing.
    pub removed: usize,
    /// Missing channel values filled from the other eye.
    pub substituted: usize,
    /// Missing channel values filled by interpolation.
    pub interpolated: usize,
    /// Channel values still missing after the filter.
    pub still_missing: usize,
    /// Trailing samples per channel holding the repeated last value after a phase shift.
    pub tail_filled: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainReport {
    /// Samples in the recording; filters never change the count.
    pub samples: usize,
    pub warnings: Vec<ChainWarning>,
    pub filters: Vec<FilterReport>,
}

impl ChainReport {
    pub fn removed(&self) -> usize {
        self.filters.iter().map(|f| f.removed).sum()
    }

    pub fn filled(&self) -> usize {
        self.filters.iter().map(|f| f.substituted + f.interpolated).sum()
    }
}

fn run_filter(recording: &Recording, filter: &FilterConfig) -> Result<Recording, FilterError> {
    match filter {
        FilterConfig::PupilSubstitution => pupil_substitution(recording),
        FilterConfig::GazeSubstitution => gaze_substitution(recording),
        FilterConfig::BlinkDetection(p) => blink_detection(recording, p),
        FilterConfig::StandardDeviation(p) => stddev_filter(recording, p),
        FilterConfig::LinearInterpolation => Ok(linear_interpolation(recording)),
        FilterConfig::Butterworth(p) => butterworth_filter(recording, p),
    }
}

/// Applies the filters strictly in order, feeding each output into the next.
///
/// The chain is validated against the recording's channels first; errors
/// abort before any filter runs and warnings are logged and reported.
pub fn apply_chain(
    recording: &Recording,
    chain: &[FilterConfig],
) -> Result<(Recording, ChainReport), FilterError> {
    let warnings = validate_chain(chain, recording.channels());
    if warnings.iter().any(|w| w.severity == Severity::Error) {
        return Err(FilterError::InvalidChain(warnings));
    }
    for w in &warnings {
        log::warn!("filter chain: {}", w.message);
    }

    let mut current = recording.clone();
    let mut reports = Vec::with_capacity(chain.len());
    for filter in chain {
        let started = Instant::now();
        let next = run_filter(&current, filter)?;
        let wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
        reports.push(report(filter, &current, &next, wall_time_ms));
        current = next;
    }
    let samples = current.len();
    Ok((
        current,
        ChainReport {
            samples,
            warnings,
            filters: reports,
        },
    ))
}

fn report(filter: &FilterConfig, before: &Recording, after: &Recording, wall_time_ms: f64) -> FilterReport {
    let (mut removed, mut filled, mut still_missing) = (0, 0, 0);
    for channel in before.channels().iter() {
        for (a, b) in before.samples().iter().zip(after.samples()) {
            match (is_missing(a, channel), is_missing(b, channel)) {
                (false, true) => removed += 1,
                (true, false) => filled += 1,
                _ => {}
            }
            if is_missing(b, channel) {
                still_missing += 1;
            }
        }
    }
    let kind = filter.kind();
    let substitution = matches!(kind, FilterKind::PupilSubstitution | FilterKind::GazeSubstitution);
    let tail_filled = match filter {
        FilterConfig::Butterworth(p) if p.compensate_phase => {
            compensation_shift(p.cutoff_hz, before.sample_rate_hz()).min(before.len())
        }
        _ => 0,
    };
    FilterReport {
        filter: kind,
        removed,
        substituted: if substitution { filled } else { 0 },
        interpolated: if substitution { 0 } else { filled },
        still_missing,
        tail_filled,
        wall_time_ms,
    }
}
