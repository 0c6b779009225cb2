use super::{FilterError, FilterKind};
use crate::model::Recording;

/// Fills a missing pupil from the other eye when the other eye is present.
pub fn pupil_substitution(recording: &Recording) -> Result<Recording, FilterError> {
    if !recording.channels().is_binocular_pupil() {
        return Err(FilterError::Monocular {
            filter: FilterKind::PupilSubstitution,
            required: "pupil",
        });
    }
    Ok(recording.map_samples(|samples| {
        for s in samples {
            match (s.pupil_left, s.pupil_right) {
                (None, Some(r)) => s.pupil_left = Some(r),
                (Some(l), None) => s.pupil_right = Some(l),
                _ => {}
            }
        }
    }))
}

/// Replaces a missing gaze point with the other eye's whole point.
///
/// A point is missing when either coordinate is; the pair is copied as a unit.
pub fn gaze_substitution(recording: &Recording) -> Result<Recording, FilterError> {
    if !recording.channels().is_binocular_gaze() {
        return Err(FilterError::Monocular {
            filter: FilterKind::GazeSubstitution,
            required: "gaze",
        });
    }
    Ok(recording.map_samples(|samples| {
        for s in samples {
            let (left_missing, right_missing) = (s.gaze_left.is_missing(), s.gaze_right.is_missing());
            if left_missing && !right_missing {
                s.gaze_left = s.gaze_right;
            } else if right_missing && !left_missing {
                s.gaze_right = s.gaze_left;
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelSet, GazePoint, Sample};

    fn pupils(pairs: &[(Option<f64>, Option<f64>)]) -> Recording {
        let samples = pairs
            .iter()
            .enumerate()
            .map(|(i, &(l, r))| Sample::with_pupils(i as f64, l, r))
            .collect();
        let channels = ChannelSet::empty()
            .with(crate::model::Channel::PupilLeft)
            .with(crate::model::Channel::PupilRight);
        Recording::with_channels(samples, 1000.0, channels).unwrap()
    }

    #[test]
    fn substitutes_across_eyes() {
        let rec = pupils(&[(None, Some(3.4)), (Some(3.1), Some(3.3)), (None, None), (Some(2.9), None)]);
        let out = pupil_substitution(&rec).unwrap();
        let got: Vec<_> = out.samples().iter().map(|s| (s.pupil_left, s.pupil_right)).collect();
        assert_eq!(
            got,
            vec![(Some(3.4), Some(3.4)), (Some(3.1), Some(3.3)), (None, None), (Some(2.9), Some(2.9))]
        );
    }

    #[test]
    fn monocular_is_rejected() {
        let samples = vec![Sample::with_pupils(0.0, Some(3.0), None)];
        let rec = Recording::new(samples, 60.0).unwrap();
        assert!(matches!(pupil_substitution(&rec), Err(FilterError::Monocular { .. })));
        assert!(matches!(gaze_substitution(&rec), Err(FilterError::Monocular { .. })));
    }

    #[test]
    fn gaze_is_copied_as_a_pair() {
        let mut a = Sample::at(0.0);
        a.gaze_left = GazePoint { x: Some(512.0), y: None };
        a.gaze_right = GazePoint::new(520.0, 390.0);
        let mut b = Sample::at(1.0);
        b.gaze_left = GazePoint::new(1.0, 2.0);
        b.gaze_right = GazePoint::new(3.0, 4.0);
        let c = Sample::at(2.0);
        let channels = ChannelSet::empty()
            .with(crate::model::Channel::GazeLeft)
            .with(crate::model::Channel::GazeRight);
        let rec = Recording::with_channels(vec![a, b, c], 1000.0, channels).unwrap();
        let out = gaze_substitution(&rec).unwrap();
        assert_eq!(out.samples()[0].gaze_left, GazePoint::new(520.0, 390.0));
        assert_eq!(out.samples()[1], rec.samples()[1]);
        assert_eq!(out.samples()[2], rec.samples()[2]);
    }
}
