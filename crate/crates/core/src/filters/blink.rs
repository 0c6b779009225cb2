use super::{BlinkParams, FilterConfig, FilterError, FilterKind};
use crate::model::{Eye, Recording, Sample};

/// Slack on margin comparisons; a margin that is a whole number of periods
/// includes the boundary sample.
const TIME_EPS_MS: f64 = 1e-6;

/// Detects blinks as runs of missing samples and clips them with margins.
///
/// Per eye, a sample counts as missing when its pupil is missing or, if gaze
/// is carried, its same-eye gaze point is missing. A run whose duration
/// (sample count times the nominal period) lies in
/// `[min_blink_ms, max_blink_ms]` is a blink: the run plus every sample within
/// the margins before and after it loses pupil and gaze. Longer runs are only
/// clipped with `clip_long_gaps`; shorter runs are left alone.
pub fn blink_detection(recording: &Recording, params: &BlinkParams) -> Result<Recording, FilterError> {
    FilterConfig::BlinkDetection(params.clone())
        .check_parameters()
        .map_err(|message| FilterError::InvalidParameters {
            filter: FilterKind::BlinkDetection,
            message,
        })?;
    let channels = recording.channels();
    let eyes: Vec<Eye> = Eye::BOTH
        .into_iter()
        .filter(|e| channels.contains(e.pupil_channel()))
        .collect();
    if eyes.is_empty() {
        return Err(FilterError::NoPupilChannel {
            filter: FilterKind::BlinkDetection,
        });
    }

    let samples = recording.samples();
    let period = recording.period_ms();
    let clear: Vec<(Eye, Vec<bool>)> = eyes
        .into_iter()
        .map(|eye| {
            let use_gaze = channels.contains(eye.gaze_channel());
            let missing =
                |s: &Sample| s.pupil(eye).is_none() || (use_gaze && s.gaze(eye).is_missing());
            (eye, clip_marks(samples, period, params, missing))
        })
        .collect();

    Ok(recording.map_samples(|out| {
        for (eye, marks) in &clear {
            for (s, &marked) in out.iter_mut().zip(marks) {
                if marked {
                    s.clear_eye(*eye);
                }
            }
        }
    }))
}

fn clip_marks(
    samples: &[Sample],
    period_ms: f64,
    params: &BlinkParams,
    missing: impl Fn(&Sample) -> bool,
) -> Vec<bool> {
    let n = samples.len();
    let t = |i: usize| samples[i].timestamp_ms;
    let mut marks = vec![false; n];
    let mut i = 0;
    while i < n {
        if !missing(&samples[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && missing(&samples[i]) {
            i += 1;
        }
        let end = i - 1;
        let duration = t(end) - t(start) + period_ms;
        let clip = if duration < params.min_blink_ms {
            false
        } else if duration <= params.max_blink_ms {
            true
        } else {
            params.clip_long_gaps
        };
        if !clip {
            continue;
        }
        let from = t(start) - params.margin_before_ms - TIME_EPS_MS;
        let to = t(end) + params.margin_after_ms + TIME_EPS_MS;
        let mut j = start;
        while j > 0 && t(j - 1) >= from {
            j -= 1;
        }
        let mut k = end;
        while k + 1 < n && t(k + 1) <= to {
            k += 1;
        }
        marks[j..=k].iter_mut().for_each(|m| *m = true);
    }
    marks
}
