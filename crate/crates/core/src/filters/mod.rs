//! The six cleaning filters and their composition into chains.
//!
//! Every filter is a pure function `&Recording -> Recording` that preserves
//! sample count and timestamps and only changes values or missingness.

mod blink;
mod butterworth;
mod chain;
mod interpolation;
mod stats;
mod stddev;
mod substitution;

pub use blink::blink_detection;
pub use butterworth::{
    butterworth_filter, compensation_shift, design_butterworth, phase_response,
    ButterworthCoefficients, BUTTERWORTH_ORDER,
};
pub use chain::{
    apply_chain, validate_chain, ChainReport, ChainWarning, FilterReport, Severity, WarningCode,
};
pub use interpolation::linear_interpolation;
pub use stats::{channel_stats, ChannelStats};
pub use stddev::stddev_filter;
pub use substitution::{gaze_substitution, pupil_substitution};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Channel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StdDevParams {
    /// Multiplier of σ.
    pub k: f64,
}

impl Default for StdDevParams {
    fn default() -> Self {
        StdDevParams { k: 3.0 }
    }
}

/// Run-length limits and clipping margins for blink detection, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlinkParams {
    pub min_blink_ms: f64,
    pub max_blink_ms: f64,
    pub margin_before_ms: f64,
    pub margin_after_ms: f64,
    /// Also clip runs longer than `max_blink_ms`.
    pub clip_long_gaps: bool,
}

impl Default for BlinkParams {
    fn default() -> Self {
        BlinkParams {
            min_blink_ms: 50.0,
            max_blink_ms: 500.0,
            margin_before_ms: 100.0,
            margin_after_ms: 100.0,
            clip_long_gaps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ButterworthParams {
    pub cutoff_hz: f64,
    /// Fixed at 3.
    pub order: u32,
    pub compensate_phase: bool,
}

impl Default for ButterworthParams {
    fn default() -> Self {
        ButterworthParams {
            cutoff_hz: 4.0,
            order: BUTTERWORTH_ORDER,
            compensate_phase: true,
        }
    }
}

/// One step of a filter chain, serialized as `{"kind": "...", <params>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FilterConfig {
    PupilSubstitution,
    GazeSubstitution,
    BlinkDetection(BlinkParams),
    StandardDeviation(StdDevParams),
    LinearInterpolation,
    Butterworth(ButterworthParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterKind {
    PupilSubstitution,
    GazeSubstitution,
    BlinkDetection,
    StandardDeviation,
    LinearInterpolation,
    Butterworth,
}

impl FilterKind {
    /// Position in the recommended chain order.
    pub fn recommended_rank(self) -> u8 {
        match self {
            FilterKind::PupilSubstitution => 0,
            FilterKind::GazeSubstitution => 1,
            FilterKind::BlinkDetection => 2,
            FilterKind::StandardDeviation => 3,
            FilterKind::LinearInterpolation => 4,
            FilterKind::Butterworth => 5,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FilterConfig {
    pub fn kind(&self) -> FilterKind {
        match self {
            FilterConfig::PupilSubstitution => FilterKind::PupilSubstitution,
            FilterConfig::GazeSubstitution => FilterKind::GazeSubstitution,
            FilterConfig::BlinkDetection(_) => FilterKind::BlinkDetection,
            FilterConfig::StandardDeviation(_) => FilterKind::StandardDeviation,
            FilterConfig::LinearInterpolation => FilterKind::LinearInterpolation,
            FilterConfig::Butterworth(_) => FilterKind::Butterworth,
        }
    }

    /// Checks parameter ranges that do not depend on the recording.
    pub fn check_parameters(&self) -> Result<(), String> {
        match self {
            FilterConfig::StandardDeviation(p) => {
                if !(p.k.is_finite() && p.k > 0.0) {
                    return Err(format!("k must be positive, got {}", p.k));
                }
            }
            FilterConfig::BlinkDetection(p) => {
                let finite = [p.min_blink_ms, p.max_blink_ms, p.margin_before_ms, p.margin_after_ms]
                    .iter()
                    .all(|v| v.is_finite());
                if !finite || p.min_blink_ms <= 0.0 || p.min_blink_ms > p.max_blink_ms {
                    return Err(format!(
                        "blink limits must satisfy 0 < min_blink_ms <= max_blink_ms, got {} and {}",
                        p.min_blink_ms, p.max_blink_ms
                    ));
                }
                if p.margin_before_ms < 0.0 || p.margin_after_ms < 0.0 {
                    return Err("blink margins must be non-negative".into());
                }
            }
            FilterConfig::Butterworth(p) => {
                if p.order != BUTTERWORTH_ORDER {
                    return Err(format!("only order {BUTTERWORTH_ORDER} is supported, got {}", p.order));
                }
                if !(p.cutoff_hz.is_finite() && p.cutoff_hz > 0.0) {
                    return Err(format!("cutoff_hz must be positive, got {}", p.cutoff_hz));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The six filters in recommended order with default parameters.
    pub fn recommended_chain() -> Vec<FilterConfig> {
        vec![
            FilterConfig::PupilSubstitution,
            FilterConfig::GazeSubstitution,
            FilterConfig::BlinkDetection(BlinkParams::default()),
            FilterConfig::StandardDeviation(StdDevParams::default()),
            FilterConfig::LinearInterpolation,
            FilterConfig::Butterworth(ButterworthParams::default()),
        ]
    }
}

/// An ordered filter chain as it appears in configuration documents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainDocument {
    pub filters: Vec<FilterConfig>,
}

impl ChainDocument {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("{filter} requires both {required} channels")]
    Monocular { filter: FilterKind, required: &'static str },
    #[error("{filter} requires a pupil channel")]
    NoPupilChannel { filter: FilterKind },
    #[error("{0} is not a pupil channel")]
    NotAPupilChannel(Channel),
    #[error("{0} has no present samples")]
    NoPresentSamples(Channel),
    #[error("invalid {filter} parameters: {message}")]
    InvalidParameters { filter: FilterKind, message: String },
    #[error("cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({nyquist_hz} Hz)")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("{channel} contains {missing} missing values; interpolate before low-pass filtering")]
    GapsPresent { channel: Channel, missing: usize },
    #[error("sampling interval at index {index} deviates {deviation_pct:.1}% from the nominal period")]
    NonUniformSampling { index: usize, deviation_pct: f64 },
    #[error("chain has validation errors: {}", summarize(.0))]
    InvalidChain(Vec<ChainWarning>),
}

fn summarize(warnings: &[ChainWarning]) -> String {
    warnings
        .iter()
        .filter(|w| w.severity == Severity::Error)
        .map(|w| w.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
