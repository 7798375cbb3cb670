//! Predict, steer, estimate, update.

use serde::{Deserialize, Serialize};

use crate::array::HybridConfig;
use crate::error::Result;
use crate::orbit::Direction;
use crate::signal::SignalFrame;

use super::kalman::{kf_predict, kf_update, KalmanConfig, KalmanState};
use super::music::{music_estimate, MusicConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BaselineConfig {
    pub music: MusicConfig,
    pub kalman: KalmanConfig,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.music.validate()?;
        self.kalman.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRecord {
    pub t: f64,
    /// Filtered direction after the update at `t`.
    pub estimate: Direction,
    /// Direction the beam was steered to while recording at `t`.
    pub predicted: Direction,
    pub measured: Direction,
}

/// Runs the two-step tracker over `times`, starting from `initial` with
/// angular uncertainty `initial_sigma` (rad). `frame_at(t, pointing)`
/// records the frame at `t` with the beam steered to `pointing`.
pub fn two_step_run<F>(
    initial: &Direction,
    initial_sigma: f64,
    times: &[f64],
    hybrid: &HybridConfig,
    cfg: &BaselineConfig,
    mut frame_at: F,
) -> Result<Vec<BaselineRecord>>
where
    F: FnMut(f64, &Direction) -> Result<SignalFrame>,
{
    cfg.validate()?;
    let mut state = KalmanState::new(initial, initial_sigma, &cfg.kalman);
    let mut out = Vec::with_capacity(times.len());
    let mut last_t: Option<f64> = None;
    for &t in times {
        if let Some(prev) = last_t {
            state = kf_predict(&state, t - prev);
        }
        let predicted = state.direction();
        let frame = frame_at(t, &predicted)?;
        let measured = music_estimate(&frame, &predicted, hybrid, &cfg.music)?;
        state = kf_update(&state, &measured)?;
        out.push(BaselineRecord { t, estimate: state.direction(), predicted, measured });
        last_t = Some(t);
    }
    Ok(out)
}

/// History as CSV with columns `t,az_est,el_est,az_true,el_true,err_deg`.
pub fn baseline_csv(records: &[BaselineRecord], truth: &[Direction]) -> String {
    let mut out = String::from("t,az_est,el_est,az_true,el_true,err_deg\n");
    for (r, d) in records.iter().zip(truth) {
        let (az, el) = r.estimate.az_el();
        let (taz, tel) = d.az_el();
        out.push_str(&format!("{},{az},{el},{taz},{tel},{}\n", r.t, r.estimate.angle_to(d).to_degrees()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{noiseless_frame, zadoff_chu};
    use num_complex::Complex64;

    #[test]
    fn noiseless_track_within_grid() {
        let hybrid = HybridConfig::default();
        let s = zadoff_chu(63, 29).unwrap();
        let truth = |t: f64| Direction::from_az_el(0.5 + 0.002 * t, 0.6 + 0.001 * t);
        let times: Vec<f64> = (0..40).map(|k| 5.0 * k as f64).collect();
        let cfg = BaselineConfig::default();
        let recs = two_step_run(&truth(0.0).rotated(&nalgebra::Vector3::x(), 0.005), 0.01, &times, &hybrid, &cfg, |t, p| {
            Ok(SignalFrame {
                t,
                y: noiseless_frame(&truth(t), p, Complex64::new(1e-3, 0.0), &hybrid, &s),
                pointing: *p,
                num_subarrays: hybrid.num_subarrays(),
                obstructed: false,
            })
        })
        .unwrap();
        let tail = &recs[10..];
        let worst = tail.iter().map(|r| r.measured.angle_to(&truth(r.t)).to_degrees()).fold(0.0, f64::max);
        assert!(worst < 2.0 * cfg.music.resolution_deg, "worst measurement error {worst} deg");
        let worst_est = tail.iter().map(|r| r.estimate.angle_to(&truth(r.t)).to_degrees()).fold(0.0, f64::max);
        assert!(worst_est < 2.0 * cfg.music.resolution_deg, "worst filtered error {worst_est} deg");
        let csv = baseline_csv(&recs, &times.iter().map(|&t| truth(t)).collect::<Vec<_>>());
        assert_eq!(csv.lines().count(), 41);
    }
}
