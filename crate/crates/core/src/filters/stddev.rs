use super::{stats::stats_of, FilterError, FilterKind, StdDevParams};
use crate::model::{Eye, Recording};

/// Removes pupil values strictly outside `mean ± k·σ`.
///
/// Statistics are taken once per pupil channel over the input. Values exactly
/// on the boundary are kept. A channel with no present values passes through.
pub fn stddev_filter(recording: &Recording, params: &StdDevParams) -> Result<Recording, FilterError> {
    if !(params.k.is_finite() && params.k > 0.0) {
        return Err(FilterError::InvalidParameters {
            filter: FilterKind::StandardDeviation,
            message: format!("k must be positive, got {}", params.k),
        });
    }
    let bounds: Vec<(Eye, f64, f64)> = Eye::BOTH
        .into_iter()
        .filter(|eye| recording.channels().contains(eye.pupil_channel()))
        .filter_map(|eye| {
            let stats = stats_of(recording.samples().iter().filter_map(|s| s.pupil(eye)))?;
            let spread = params.k * stats.sigma;
            Some((eye, stats.mean - spread, stats.mean + spread))
        })
        .collect();

    Ok(recording.map_samples(|samples| {
        for &(eye, low, high) in &bounds {
            for s in samples.iter_mut() {
                let value = s.pupil_mut(eye);
                if value.is_some_and(|v| v > high || v < low) {
                    *value = None;
                }
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, ChannelSet, Sample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn left(values: &[f64]) -> Recording {
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample::with_pupils(i as f64, Some(v), None))
            .collect();
        Recording::with_channels(samples, 1000.0, ChannelSet::empty().with(Channel::PupilLeft))
            .unwrap()
    }

    #[test]
    fn removes_a_planted_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut values: Vec<f64> = (0..100).map(|_| rng.random_range(2.9..=3.1)).collect();
        values.push(9.0);
        let out = stddev_filter(&left(&values), &StdDevParams::default()).unwrap();

        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sigma = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
        for (s, &v) in out.samples().iter().zip(&values) {
            let expect_removed = v > mean + 3.0 * sigma || v < mean - 3.0 * sigma;
            assert_eq!(s.pupil_left.is_none(), expect_removed, "value {v}");
        }
        assert_eq!(out.samples()[100].pupil_left, None);
        assert_eq!(out.missing_count(Channel::PupilLeft), 1);
    }

    #[test]
    fn constant_series_is_untouched() {
        let rec = left(&[3.0; 50]);
        assert_eq!(stddev_filter(&rec, &StdDevParams::default()).unwrap(), rec);
    }

    #[test]
    fn gaze_and_missing_channels_pass_through() {
        let mut s = Sample::with_pupils(0.0, None, None);
        s.gaze_left = crate::model::GazePoint::new(1e6, 1e6);
        let rec = Recording::with_channels(vec![s, Sample::at(1.0)], 1000.0, ChannelSet::all()).unwrap();
        assert_eq!(stddev_filter(&rec, &StdDevParams::default()).unwrap(), rec);
    }

    #[test]
    fn non_positive_k_is_rejected() {
        let rec = left(&[3.0]);
        assert!(stddev_filter(&rec, &StdDevParams { k: -1.0 }).is_err());
    }
}
