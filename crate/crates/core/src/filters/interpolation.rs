use crate::model::{Recording, Sample};

type Slot = fn(&mut Sample) -> &mut Option<f64>;

/// Every scalar series a recording can carry.
const SLOTS: [Slot; 6] = [
    |s| &mut s.pupil_left,
    |s| &mut s.pupil_right,
    |s| &mut s.gaze_left.x,
    |s| &mut s.gaze_left.y,
    |s| &mut s.gaze_right.x,
    |s| &mut s.gaze_right.y,
];

/// Fills interior runs of missing values linearly between the surrounding
/// present anchors, using the true timestamps:
///
/// `value(t) = value_s + (value_e - value_s) * (t - time_s) / (time_e - time_s)`
///
/// Leading and trailing runs have only one anchor and stay missing.
pub fn linear_interpolation(recording: &Recording) -> Recording {
    recording.map_samples(|samples| {
        for slot in SLOTS {
            fill_slot(samples, slot);
        }
    })
}

fn fill_slot(samples: &mut [Sample], slot: Slot) {
    let mut anchor: Option<usize> = None;
    for e in 0..samples.len() {
        let Some(value_e) = *slot(&mut samples[e]) else {
            continue;
        };
        if let Some(s) = anchor {
            if e > s + 1 {
                let value_s = slot(&mut samples[s]).expect("anchor is present");
                let (time_s, time_e) = (samples[s].timestamp_ms, samples[e].timestamp_ms);
                for sample in &mut samples[s + 1..e] {
                    let time = sample.timestamp_ms;
                    *slot(sample) =
                        Some(value_s + (value_e - value_s) * (time - time_s) / (time_e - time_s));
                }
            }
        }
        anchor = Some(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, ChannelSet, GazePoint};

    fn left(points: &[(f64, Option<f64>)]) -> Recording {
        let samples = points
            .iter()
            .map(|&(t, v)| Sample::with_pupils(t, v, None))
            .collect();
        Recording::with_channels(samples, 200.0, ChannelSet::empty().with(Channel::PupilLeft))
            .unwrap()
    }

    #[test]
    fn midpoint() {
        let out = linear_interpolation(&left(&[(0.0, Some(2.0)), (5.0, None), (10.0, Some(3.0))]));
        assert_eq!(out.samples()[1].pupil_left, Some(2.5));
    }

    #[test]
    fn uses_true_timestamps() {
        let out = linear_interpolation(&left(&[
            (0.0, Some(1.0)),
            (1.0, None),
            (9.0, None),
            (10.0, Some(2.0)),
        ]));
        assert!((out.samples()[1].pupil_left.unwrap() - 1.1).abs() < 1e-15);
        assert!((out.samples()[2].pupil_left.unwrap() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn edges_stay_missing() {
        let rec = left(&[(0.0, None), (1.0, None), (2.0, Some(3.0)), (3.0, None)]);
        let out = linear_interpolation(&rec);
        assert_eq!(out, rec);
    }

    #[test]
    fn gaze_coordinates_are_filled_independently() {
        let mut a = Sample::at(0.0);
        a.gaze_left = GazePoint::new(0.0, 10.0);
        let mut b = Sample::at(1.0);
        b.gaze_left = GazePoint { x: None, y: Some(20.0) };
        let mut c = Sample::at(2.0);
        c.gaze_left = GazePoint::new(4.0, 30.0);
        let rec = Recording::new(vec![a, b, c], 1000.0).unwrap();
        let out = linear_interpolation(&rec);
        assert_eq!(out.samples()[1].gaze_left, GazePoint::new(2.0, 20.0));
    }
}
