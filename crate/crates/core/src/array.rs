//! Uniform planar arrays and the partially-connected hybrid receiver.
//!
//! Elements sit on an integer grid `(p, q)` in units of the element spacing,
//! `p` along x and `q` along y. Subarray `m` is row-major in the subarray
//! grid, and each subarray's elements are row-major within it. Stacked
//! vectors are subarray-major: entry `m * len + k` belongs to subarray `m`.
//!
//! Every subarray has the same shape and the same analog weights, so the
//! beamformed template factorises as `x = c ⊗ s` where `c[m]` is the complex
//! response of subarray `m` (see [`subarray_responses`]). The estimator works
//! with `c` directly.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{CircularOrbit, Direction, OrbitParams};

/// Finite-difference step for template gradients, rad.
pub const TEMPLATE_GRADIENT_STEP: f64 = 1e-5;

/// Uniform planar array with isotropic elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub element_gain_db: f64,
}

impl UpaConfig {
    pub fn new(rows: usize, cols: usize) -> Self {
        UpaConfig { rows, cols, spacing: 0.5, element_gain_db: 5.46 }
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("array needs at least one row and column".into()));
        }
        if self.spacing != 0.5 {
            return Err(Error::Config(format!(
                "element spacing must be half a wavelength, got {}",
                self.spacing
            )));
        }
        Ok(())
    }
}

/// Partially-connected hybrid array: a grid of identical subarrays, each
/// feeding one RF chain through unit-modulus phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub subarray_rows: usize,
    pub subarray_cols: usize,
    pub subarray: UpaConfig,
    pub carrier_freq: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            subarray_rows: 8,
            subarray_cols: 8,
            subarray: UpaConfig::new(4, 4),
            carrier_freq: 28e9,
        }
    }
}

impl HybridConfig {
    pub fn num_subarrays(&self) -> usize {
        self.subarray_rows * self.subarray_cols
    }

    pub fn elements_per_subarray(&self) -> usize {
        self.subarray.element_count()
    }

    pub fn total_elements(&self) -> usize {
        self.num_subarrays() * self.elements_per_subarray()
    }

    /// The full aperture seen as a single UPA.
    pub fn full_aperture(&self) -> UpaConfig {
        UpaConfig {
            rows: self.subarray_rows * self.subarray.rows,
            cols: self.subarray_cols * self.subarray.cols,
            ..self.subarray
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.subarray.validate()?;
        if self.num_subarrays() == 0 {
            return Err(Error::Config("hybrid array needs at least one subarray".into()));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        Ok(())
    }

    /// Element-grid offset of subarray `m` relative to subarray 0.
    fn subarray_offset(&self, m: usize) -> (f64, f64) {
        let (i, k) = (m / self.subarray_cols, m % self.subarray_cols);
        ((i * self.subarray.rows) as f64, (k * self.subarray.cols) as f64)
    }
}

fn phase(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// Receive steering vector: entry `(p, q)` is `exp(j 2π d (p ux + q uy))`.
pub fn steering_vector(direction: &Direction, upa: &UpaConfig) -> Vec<Complex64> {
    let k = TAU * upa.spacing;
    let mut out = Vec::with_capacity(upa.element_count());
    for p in 0..upa.rows {
        for q in 0..upa.cols {
            out.push(phase(k * (p as f64 * direction.x() + q as f64 * direction.y())));
        }
    }
    out
}

/// Phase of subarray `m`'s phase centre relative to subarray 0.
pub fn subarray_phase_factor(
    direction: &Direction,
    m: usize,
    hybrid: &HybridConfig,
) -> Result<Complex64> {
    let len = hybrid.num_subarrays();
    if m >= len {
        return Err(Error::IndexOutOfRange { index: m, len });
    }
    let (dp, dq) = hybrid.subarray_offset(m);
    let k = TAU * hybrid.subarray.spacing;
    Ok(phase(k * (dp * direction.x() + dq * direction.y())))
}

/// Analog weights of every subarray, steered towards `pointing`.
pub fn combining_weights(pointing: &Direction, hybrid: &HybridConfig) -> Vec<Vec<Complex64>> {
    let b = steering_vector(pointing, &hybrid.subarray);
    vec![b; hybrid.num_subarrays()]
}

/// `b^H a(direction)` for one subarray with weights steered to `pointing`,
/// evaluated as a product of two geometric series.
pub fn subarray_gain(direction: &Direction, pointing: &Direction, upa: &UpaConfig) -> Complex64 {
    let k = TAU * upa.spacing;
    let series = |n: usize, delta: f64| -> Complex64 {
        let step = phase(k * delta);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            acc += term;
            term *= step;
        }
        acc
    };
    series(upa.rows, direction.x() - pointing.x()) * series(upa.cols, direction.y() - pointing.y())
}

/// Per-subarray responses `c[m] = (b^(m))^H a^(m)(direction) f^(m)(direction)`.
pub fn subarray_responses(
    direction: &Direction,
    pointing: &Direction,
    hybrid: &HybridConfig,
) -> Vec<Complex64> {
    let gain = subarray_gain(direction, pointing, &hybrid.subarray);
    let k = TAU * hybrid.subarray.spacing;
    let row_step = phase(k * hybrid.subarray.rows as f64 * direction.x());
    let col_step = phase(k * hybrid.subarray.cols as f64 * direction.y());
    let mut out = Vec::with_capacity(hybrid.num_subarrays());
    let mut row = gain;
    for _ in 0..hybrid.subarray_rows {
        let mut v = row;
        for _ in 0..hybrid.subarray_cols {
            out.push(v);
            v *= col_step;
        }
        row *= row_step;
    }
    out
}

/// Stacked noiseless received signal for a satellite in `direction` while
/// the analog weights point at `pointing`. Length `M * s.len()`.
///
/// Computed element by element from the steering vectors; see
/// [`subarray_responses`] for the factorised form.
pub fn beamformed_template(
    direction: &Direction,
    pointing: &Direction,
    hybrid: &HybridConfig,
    s: &[Complex64],
) -> Vec<Complex64> {
    let weights = combining_weights(pointing, hybrid);
    let a = steering_vector(direction, &hybrid.subarray);
    let mut x = Vec::with_capacity(hybrid.num_subarrays() * s.len());
    for (m, b) in weights.iter().enumerate() {
        let combined: Complex64 = b.iter().zip(&a).map(|(bi, ai)| bi.conj() * ai).sum();
        let f = subarray_phase_factor(direction, m, hybrid).expect("m within grid");
        let gain = combined * f;
        x.extend(s.iter().map(|sk| gain * sk));
    }
    x
}

/// Template as a function of the orbit parameters at time `t`.
pub fn template_of_gamma(
    t: f64,
    gamma: &OrbitParams,
    orbit: &CircularOrbit,
    pointing: &Direction,
    hybrid: &HybridConfig,
    s: &[Complex64],
) -> Result<Vec<Complex64>> {
    let d = orbit.direction(t, gamma)?;
    Ok(beamformed_template(&d, pointing, hybrid, s))
}

/// Subarray responses as a function of the orbit parameters.
pub fn responses_of_gamma(
    t: f64,
    gamma: &OrbitParams,
    orbit: &CircularOrbit,
    pointing: &Direction,
    hybrid: &HybridConfig,
) -> Result<Vec<Complex64>> {
    let d = orbit.direction(t, gamma)?;
    Ok(subarray_responses(&d, pointing, hybrid))
}

/// Central-difference Jacobian columns of `f` with respect to
/// `(alpha, beta, eta0)`.
pub fn central_difference_jacobian<F>(gamma: &OrbitParams, step: f64, f: F) -> Result<[Vec<Complex64>; 3]>
where
    F: Fn(&OrbitParams) -> Result<Vec<Complex64>>,
{
    let base = gamma.to_array();
    let column = |i: usize| -> Result<Vec<Complex64>> {
        let mut plus = base;
        let mut minus = base;
        plus[i] += step;
        minus[i] -= step;
        let fp = f(&OrbitParams::from_array(plus))?;
        let fm = f(&OrbitParams::from_array(minus))?;
        let scale = 1.0 / (2.0 * step);
        Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) * scale).collect())
    };
    Ok([column(0)?, column(1)?, column(2)?])
}

/// `∂x/∂alpha, ∂x/∂beta, ∂x/∂eta0` by central differences.
pub fn template_gradient(
    t: f64,
    gamma: &OrbitParams,
    orbit: &CircularOrbit,
    pointing: &Direction,
    hybrid: &HybridConfig,
    s: &[Complex64],
) -> Result<[Vec<Complex64>; 3]> {
    central_difference_jacobian(gamma, TEMPLATE_GRADIENT_STEP, |g| {
        template_of_gamma(t, g, orbit, pointing, hybrid, s)
    })
}

/// Gradient of the subarray responses; the template gradient is this
/// Kronecker the pilot.
pub fn responses_gradient(
    t: f64,
    gamma: &OrbitParams,
    orbit: &CircularOrbit,
    pointing: &Direction,
    hybrid: &HybridConfig,
) -> Result<[Vec<Complex64>; 3]> {
    central_difference_jacobian(gamma, TEMPLATE_GRADIENT_STEP, |g| {
        responses_of_gamma(t, g, orbit, pointing, hybrid)
    })
}

/// Scans a grid of in-plane direction cosines for pairs whose
/// inter-subarray phase factors coincide on every subarray. Returns the
/// pair closest to broadside as `(d1, d2)` with `d1.x() < d2.x()`.
pub fn find_grating_pair(hybrid: &HybridConfig, resolution: f64) -> Option<(Direction, Direction)> {
    let n = (1.0 / resolution).round() as i64;
    let cosines: Vec<f64> = (-n..=n).map(|i| i as f64 * resolution).collect();
    let factors = |d: &Direction| -> Vec<Complex64> {
        (0..hybrid.num_subarrays())
            .map(|m| subarray_phase_factor(d, m, hybrid).expect("m within grid"))
            .collect()
    };
    let make = |ux: f64, uy: f64| -> Option<Direction> {
        let r2 = ux * ux + uy * uy;
        (r2 < 1.0).then(|| Direction::new(nalgebra::Vector3::new(ux, uy, (1.0 - r2).sqrt())))
    };
    let mut best: Option<(f64, (Direction, Direction))> = None;
    for &ux in &cosines {
        for &ux2 in cosines.iter().filter(|&&c| c > ux) {
            let (Some(a), Some(b)) = (make(ux, 0.0), make(ux2, 0.0)) else {
                continue;
            };
            let fa = factors(&a);
            let fb = factors(&b);
            if fa.iter().zip(&fb).all(|(x, y)| (x - y).norm() < 1e-9) {
                let spread = ux.abs().max(ux2.abs());
                if best.as_ref().is_none_or(|(s, _)| spread < *s) {
                    best = Some((spread, (a, b)));
                }
            }
        }
    }
    best.map(|(_, pair)| pair)
}
