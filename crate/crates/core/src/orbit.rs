//! Circular-orbit geometry in the ground-station frame.
//!
//! The frame is right-handed with `z` pointing to zenith. An orbit is a circle
//! of radius `R` whose centre sits a distance `h_e` below the ground station
//! along the local zenith, traversed at a fixed angular rate `omega`. Three
//! angles select the circle and the satellite's phase on it:
//!
//! ```text
//! u = R [-sin b,  cos b, 0]
//! v = R [-cos a cos b, -cos a sin b, sin a]
//! position(t) = u cos(omega t - eta0) + v sin(omega t - eta0) - [0, 0, h_e]
//! ```

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravitational parameter of the Earth, m^3/s^2.
pub const EARTH_MU: f64 = 3.986004418e14;
/// Mean Earth radius, m.
pub const EARTH_RADIUS: f64 = 6.371e6;
/// Starlink-like shell altitude, m.
pub const DEFAULT_ALTITUDE: f64 = 550e3;
/// Support of the inclination-like angle under the orbit prior.
pub const ALPHA_RANGE: (f64, f64) = (1.25, 1.87);
/// Default finite-difference step for the polar-angle rate, s.
pub const DEFAULT_RATE_DT: f64 = 1.0;

/// Satellite position in the ground-station frame, metres.
pub type Position = Vector3<f64>;

/// Unit direction from the ground station towards the satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    /// Normalises `v`. Fails for vectors shorter than `min_norm`.
    pub fn try_new(v: Vector3<f64>, min_norm: f64) -> Result<Self> {
        let n = v.norm();
        if !(n >= min_norm) || !n.is_finite() {
            return Err(Error::DegeneratePosition);
        }
        Ok(Direction(v / n))
    }

    /// Normalises a nonzero vector.
    ///
    /// # Panics
    /// If `v` is zero or not finite.
    pub fn new(v: Vector3<f64>) -> Self {
        Self::try_new(v, f64::MIN_POSITIVE).expect("direction from a zero vector")
    }

    pub fn zenith() -> Self {
        Direction(Vector3::z())
    }

    /// Azimuth measured from +x towards +y, elevation above the x-y plane.
    pub fn from_az_el(azimuth: f64, elevation: f64) -> Self {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Direction(Vector3::new(ce * ca, ce * sa, se))
    }

    pub fn az_el(&self) -> (f64, f64) {
        let v = &self.0;
        (v.y.atan2(v.x), v.z.clamp(-1.0, 1.0).asin())
    }

    /// Polar angle from zenith.
    pub fn polar_angle(&self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).acos()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.az_el().1.to_degrees()
    }

    /// Great-circle angle to `other`, radians.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        self.0.dot(&other.0).clamp(-1.0, 1.0).acos()
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    /// Orthonormal tangent basis `(e1, e2)` at this direction. `e1` points
    /// along increasing azimuth and `e2` along increasing elevation; at the
    /// poles `e1` falls back to +y.
    pub fn tangent_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let horizontal = Vector3::z().cross(&self.0);
        let e1 = if horizontal.norm() > 1e-12 {
            horizontal.normalize()
        } else {
            Vector3::y()
        };
        let e2 = self.0.cross(&e1);
        (e1, e2)
    }

    /// Rotates this direction by `angle` about the unit axis `axis` (Rodrigues).
    pub fn rotated(&self, axis: &Vector3<f64>, angle: f64) -> Direction {
        let k = axis.normalize();
        let v = self.0;
        let (s, c) = angle.sin_cos();
        Direction::new(v * c + k.cross(&v) * s + k * k.dot(&v) * (1.0 - c))
    }
}

/// Orbit parameters `(alpha, beta, eta0)`, radians, always in this order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta0: f64,
}

impl OrbitParams {
    pub fn new(alpha: f64, beta: f64, eta0: f64) -> Self {
        OrbitParams { alpha, beta, eta0 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.eta0]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        OrbitParams::new(a[0], a[1], a[2])
    }

    pub fn from_slice(a: &[f64]) -> Self {
        OrbitParams::new(a[0], a[1], a[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.eta0)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        OrbitParams::new(v.x, v.y, v.z)
    }

    /// `beta` and `eta0` reduced to `[0, 2π)`.
    pub fn wrapped(self) -> Self {
        OrbitParams::new(
            self.alpha,
            self.beta.rem_euclid(TAU),
            self.eta0.rem_euclid(TAU),
        )
    }
}

/// Fixed constants of the circular orbit model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbit {
    /// Orbit radius `R`, m.
    pub radius: f64,
    /// Angular rate, rad/s.
    pub omega: f64,
    /// Distance `h_e` from the orbit centre to the ground station, m.
    pub ground_offset: f64,
}

impl Default for CircularOrbit {
    fn default() -> Self {
        CircularOrbit::from_altitude(DEFAULT_ALTITUDE)
    }
}

impl CircularOrbit {
    pub fn new(radius: f64, omega: f64, ground_offset: f64) -> Result<Self> {
        if !(ground_offset > 0.0 && radius > ground_offset) {
            return Err(Error::Config(format!(
                "orbit radius {radius} m must exceed the ground offset {ground_offset} m > 0"
            )));
        }
        if !(omega > 0.0) {
            return Err(Error::Config(format!("orbit rate {omega} rad/s must be positive")));
        }
        Ok(CircularOrbit { radius, omega, ground_offset })
    }

    /// Circular Keplerian orbit at `altitude` above a spherical Earth, with
    /// the ground station on the surface.
    pub fn from_altitude(altitude: f64) -> Self {
        CircularOrbit {
            radius: EARTH_RADIUS + altitude,
            omega: kepler_omega(altitude),
            ground_offset: EARTH_RADIUS,
        }
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn altitude(&self) -> f64 {
        self.radius - self.ground_offset
    }

    pub fn basis_vectors(&self, g: &OrbitParams) -> (Vector3<f64>, Vector3<f64>) {
        let (sa, ca) = g.alpha.sin_cos();
        let (sb, cb) = g.beta.sin_cos();
        let r = self.radius;
        (
            Vector3::new(-sb * r, cb * r, 0.0),
            Vector3::new(-ca * cb * r, -ca * sb * r, sa * r),
        )
    }

    pub fn position(&self, t: f64, g: &OrbitParams) -> Position {
        let (u, v) = self.basis_vectors(g);
        let (s, c) = (self.omega * t - g.eta0).sin_cos();
        u * c + v * s - Vector3::new(0.0, 0.0, self.ground_offset)
    }

    pub fn direction(&self, t: f64, g: &OrbitParams) -> Result<Direction> {
        Direction::try_new(self.position(t, g), 1.0)
    }

    /// Forward-difference rate of the polar angle, rad/s. Negative while the
    /// satellite is rising.
    pub fn polar_rate(&self, t: f64, g: &OrbitParams, dt: f64) -> Result<f64> {
        let theta0 = self.direction(t, g)?.polar_angle();
        let theta1 = self.direction(t + dt, g)?.polar_angle();
        Ok((theta1 - theta0) / dt)
    }

    /// Orbit with azimuthal rotation `beta` whose t = 0 position lies along
    /// `direction`, with `alpha` in `(0, pi)`. The inclination-like angle is
    /// not restricted to the prior range; check it if that matters.
    pub fn through(&self, direction: &Direction, beta: f64) -> Result<OrbitParams> {
        let d = direction.as_vector();
        // range along d to the orbit sphere centred h_e below the station
        let b = self.ground_offset * d.z;
        let c = self.ground_offset.powi(2) - self.radius.powi(2);
        let range = -b + (b * b - c).sqrt();
        let p = (d * range + Vector3::new(0.0, 0.0, self.ground_offset)) / self.radius;
        let (sb, cb) = beta.sin_cos();
        let cos_eta = p.y * cb - p.x * sb;
        let sin_eta = -(1.0 - cos_eta * cos_eta).max(0.0).sqrt();
        if sin_eta.abs() < 1e-12 {
            return Err(Error::Config(format!("no orbit through this direction has beta = {beta}")));
        }
        let sa = -p.z / sin_eta;
        let ca = (p.x * cb + p.y * sb) / sin_eta;
        Ok(OrbitParams::new(sa.atan2(ca), beta.rem_euclid(TAU), sin_eta.atan2(cos_eta).rem_euclid(TAU)))
    }

    /// Strictly above the local horizon.
    pub fn is_visible(&self, t: f64, g: &OrbitParams) -> bool {
        self.position(t, g).z > 0.0
    }
}

/// One draw from the uniform orbit prior.
pub fn sample_prior<R: Rng + ?Sized>(rng: &mut R) -> OrbitParams {
    OrbitParams {
        alpha: rng.random_range(ALPHA_RANGE.0..ALPHA_RANGE.1),
        beta: rng.random_range(0.0..TAU),
        eta0: rng.random_range(0.0..TAU),
    }
}

/// Circular-orbit angular rate at `altitude` metres (Kepler's third law).
pub fn kepler_omega(altitude: f64) -> f64 {
    let r = EARTH_RADIUS + altitude;
    (EARTH_MU / (r * r * r)).sqrt()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}
