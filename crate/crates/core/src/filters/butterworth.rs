//! Third-order low-pass Butterworth filter with group-delay compensation.
//!
//! The analog prototype `1 / (s³ + 2s² + 2s + 1)` is mapped to the z-plane with
//! the bilinear transform, prewarped at the requested cutoff.

use std::f64::consts::PI;

use super::{ButterworthParams, FilterConfig, FilterError, FilterKind};
use crate::model::{Eye, Recording};

pub const BUTTERWORTH_ORDER: u32 = 3;

/// Allowed deviation of any sampling interval from the nominal period.
const UNIFORMITY_TOLERANCE: f64 = 0.10;

/// Transfer function `B(z⁻¹) / A(z⁻¹)` with `a[0] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButterworthCoefficients {
    pub b: [f64; 4],
    pub a: [f64; 4],
}

impl ButterworthCoefficients {
    /// Magnitude of the frequency response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let omega = 2.0 * PI * freq_hz / sample_rate_hz;
        let eval = |c: &[f64; 4]| {
            c.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &ck)| {
                let phase = -(k as f64) * omega;
                (re + ck * phase.cos(), im + ck * phase.sin())
            })
        };
        let (nr, ni) = eval(&self.b);
        let (dr, di) = eval(&self.a);
        (nr.hypot(ni)) / (dr.hypot(di))
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Runs the filter over `input` in transposed direct form II, with the
    /// state primed to the steady state of a constant input equal to `input[0]`.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let Some(&first) = input.first() else {
            return Vec::new();
        };
        let [b0, b1, b2, b3] = self.b;
        let [_, a1, a2, a3] = self.a;
        let mut s3 = (b3 - a3) * first;
        let mut s2 = (b2 - a2) * first + s3;
        let mut s1 = (b1 - a1) * first + s2;
        input
            .iter()
            .map(|&x| {
                let y = b0 * x + s1;
                s1 = b1 * x - a1 * y + s2;
                s2 = b2 * x - a2 * y + s3;
                s3 = b3 * x - a3 * y;
                y
            })
            .collect()
    }
}

/// Designs the discrete third-order low-pass filter for `cutoff_hz` at `sample_rate_hz`.
pub fn design_butterworth(
    cutoff_hz: f64,
    sample_rate_hz: f64,
) -> Result<ButterworthCoefficients, FilterError> {
    let nyquist_hz = sample_rate_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz && cutoff_hz.is_finite()) {
        return Err(FilterError::CutoffAboveNyquist {
            cutoff_hz,
            nyquist_hz,
        });
    }
    // s / ωc = c · (1 − z⁻¹) / (1 + z⁻¹) with the prewarped cutoff.
    let c = 1.0 / (PI * cutoff_hz / sample_rate_hz).tan();
    let (c2, c3) = (c * c, c * c * c);
    // (1−z⁻¹)³, (1−z⁻¹)²(1+z⁻¹), (1−z⁻¹)(1+z⁻¹)², (1+z⁻¹)³
    const P3: [f64; 4] = [1.0, -3.0, 3.0, -1.0];
    const P2: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
    const P1: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
    const P0: [f64; 4] = [1.0, 3.0, 3.0, 1.0];
    let mut a = [0.0; 4];
    for k in 0..4 {
        a[k] = c3 * P3[k] + 2.0 * c2 * P2[k] + 2.0 * c * P1[k] + P0[k];
    }
    let a0 = a[0];
    Ok(ButterworthCoefficients {
        b: P0.map(|v| v / a0),
        a: a.map(|v| v / a0),
    })
}

/// Phase of the normalized prototype (cutoff at `w = 1`), unwrapped.
///
/// The denominator factors as `(s + 1)(s² + s + 1)`; summing the factor
/// arguments gives a continuous phase falling from 0 towards `−3π/2`.
pub fn phase_response(w: f64) -> f64 {
    -(w.atan() + w.atan2(1.0 - w * w))
}

/// Samples to shift the output earlier: the prototype's DC group delay
/// `2 / ωc` seconds, rounded to whole samples.
pub fn compensation_shift(cutoff_hz: f64, sample_rate_hz: f64) -> usize {
    (2.0 / (2.0 * PI * cutoff_hz) * sample_rate_hz).round() as usize
}

/// Low-pass filters every carried pupil channel; gaze is untouched.
///
/// Pupil channels must be gap-free and sampling must be near-uniform.
pub fn butterworth_filter(
    recording: &Recording,
    params: &ButterworthParams,
) -> Result<Recording, FilterError> {
    FilterConfig::Butterworth(params.clone())
        .check_parameters()
        .map_err(|message| FilterError::InvalidParameters {
            filter: FilterKind::Butterworth,
            message,
        })?;
    let rate = recording.sample_rate_hz();
    let coefficients = design_butterworth(params.cutoff_hz, rate)?;

    let eyes: Vec<Eye> = Eye::BOTH
        .into_iter()
        .filter(|e| recording.channels().contains(e.pupil_channel()))
        .collect();
    if eyes.is_empty() {
        return Err(FilterError::NoPupilChannel {
            filter: FilterKind::Butterworth,
        });
    }
    for &eye in &eyes {
        let missing = recording.samples().iter().filter(|s| s.pupil(eye).is_none()).count();
        if missing > 0 {
            return Err(FilterError::GapsPresent {
                channel: eye.pupil_channel(),
                missing,
            });
        }
    }
    check_uniform(recording)?;

    let shift = if params.compensate_phase {
        compensation_shift(params.cutoff_hz, rate)
    } else {
        0
    };
    let filtered: Vec<(Eye, Vec<f64>)> = eyes
        .into_iter()
        .map(|eye| {
            let input: Vec<f64> = recording
                .samples()
                .iter()
                .map(|s| s.pupil(eye).expect("checked gap-free"))
                .collect();
            (eye, coefficients.filter(&input))
        })
        .collect();

    Ok(recording.map_samples(|samples| {
        let last = samples.len() - 1;
        for (eye, y) in &filtered {
            for (i, s) in samples.iter_mut().enumerate() {
                *s.pupil_mut(*eye) = Some(y[(i + shift).min(last)]);
            }
        }
    }))
}

fn check_uniform(recording: &Recording) -> Result<(), FilterError> {
    let period = recording.period_ms();
    for (i, w) in recording.samples().windows(2).enumerate() {
        let deviation = ((w[1].timestamp_ms - w[0].timestamp_ms) - period).abs() / period;
        if deviation >= UNIFORMITY_TOLERANCE {
            return Err(FilterError::NonUniformSampling {
                index: i + 1,
                deviation_pct: deviation * 100.0,
            });
        }
    }
    Ok(())
}
