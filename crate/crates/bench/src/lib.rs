//! Deterministic synthetic recordings for benchmarks.

use pupilclean_core::{GazePoint, Recording, Sample};

/// `samples` binocular samples at `rate_hz` with a slow pupil oscillation,
/// a blink in the middle of every 5 s and a sparse scattering of dropouts.
pub fn synthetic_recording(samples: usize, rate_hz: f64) -> Recording {
    let period = 1000.0 / rate_hz;
    let blink_every = (5.0 * rate_hz) as usize;
    let blink_len = (0.12 * rate_hz) as usize;
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let rows = (0..samples)
        .map(|i| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let t = i as f64 * period;
            let noise = (state % 1000) as f64 / 1000.0 - 0.5;
            let phase = i % blink_every.max(1);
            let in_blink = (blink_every / 2..blink_every / 2 + blink_len).contains(&phase);
            let dropout = state.is_multiple_of(97) && i != 0 && i + 1 != samples;
            let mut s = Sample::at(t);
            if !in_blink && !dropout {
                let p = 3.5 + 0.4 * (t / 700.0).sin() + 0.02 * noise;
                s.pupil_left = Some(p);
                s.pupil_right = Some(p + 0.1);
                s.gaze_left = GazePoint::new(960.0 + 50.0 * noise, 540.0);
                s.gaze_right = GazePoint::new(970.0 + 50.0 * noise, 545.0);
            }
            s
        })
        .collect();
    Recording::new(rows, rate_hz).expect("synthetic recording is valid")
}
