//! Two-step reference tracker: MUSIC angle estimates in a window around a
//! Kalman prediction, fed back into the filter.

pub mod kalman;
pub mod music;
pub mod two_step;

pub use kalman::{kf_predict, kf_update, KalmanConfig, KalmanState};
pub use music::{music_estimate, MusicConfig};
pub use two_step::{baseline_csv, two_step_run, BaselineConfig, BaselineRecord};
