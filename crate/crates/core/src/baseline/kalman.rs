//! Constant-velocity Kalman filter over (azimuth, elevation).

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{wrap_angle, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanConfig {
    /// White-acceleration intensity, rad²/s³.
    pub process_noise: f64,
    /// Elevation measurement standard deviation, rad. Azimuth uses this
    /// divided by `cos(el)`.
    pub measurement_sigma: f64,
    /// Prior standard deviation of the angle rates, rad/s.
    pub rate_sigma: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig { process_noise: 1e-8, measurement_sigma: 0.05f64.to_radians(), rate_sigma: 0.5f64.to_radians() }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.process_noise >= 0.0 && self.measurement_sigma >= 0.0 && self.rate_sigma >= 0.0) {
            return Err(Error::Config("Kalman noise settings must be non-negative".into()));
        }
        Ok(())
    }
}

/// State `(az, el, az_rate, el_rate)` with covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub process_noise: f64,
    pub measurement_sigma: f64,
}

impl KalmanState {
    /// Starts at `direction` with zero rates.
    pub fn new(direction: &Direction, position_sigma: f64, cfg: &KalmanConfig) -> Self {
        let (az, el) = direction.az_el();
        let p = position_sigma * position_sigma;
        let r = cfg.rate_sigma * cfg.rate_sigma;
        KalmanState {
            mean: Vector4::new(az, el, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(p / el.cos().max(0.05).powi(2), p, r, r)),
            process_noise: cfg.process_noise,
            measurement_sigma: cfg.measurement_sigma,
        }
    }

    pub fn direction(&self) -> Direction {
        Direction::from_az_el(self.mean[0], self.mean[1])
    }
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

pub fn kf_predict(state: &KalmanState, dt: f64) -> KalmanState {
    let f = Matrix4::new(
        1.0, 0.0, dt, 0.0, //
        0.0, 1.0, 0.0, dt, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    );
    let q = state.process_noise;
    let (a, b, c) = (q * dt.powi(3) / 3.0, q * dt * dt / 2.0, q * dt);
    let noise = Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    );
    let mut mean = f * state.mean;
    mean[0] = wrap_angle(mean[0]);
    KalmanState { mean, covariance: f * state.covariance * f.transpose() + noise, ..*state }
}

/// Joseph-form update with a direction measurement; the azimuth innovation
/// is wrapped to (−π, π].
pub fn kf_update(state: &KalmanState, measured: &Direction) -> Result<KalmanState> {
    let (az, el) = measured.az_el();
    let h = observation();
    let s2 = state.measurement_sigma * state.measurement_sigma;
    let r = Matrix2::new(s2 / state.mean[1].cos().max(0.05).powi(2), 0.0, 0.0, s2);
    let innovation = Vector2::new(wrap_angle(az - state.mean[0]), el - state.mean[1]);
    let s = h * state.covariance * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let gain = state.covariance * h.transpose() * s_inv;
    let mut mean = state.mean + gain * innovation;
    mean[0] = wrap_angle(mean[0]);
    let i_kh = Matrix4::identity() - gain * h;
    let cov = i_kh * state.covariance * i_kh.transpose() + gain * r * gain.transpose();
    Ok(KalmanState { mean, covariance: (cov + cov.transpose()) * 0.5, ..*state })
}
