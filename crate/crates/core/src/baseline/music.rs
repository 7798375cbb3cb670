//! MUSIC on the per-subarray outputs, searched over a small window.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{subarray_responses, HybridConfig};
use crate::error::{Error, Result};
use crate::orbit::Direction;
use crate::signal::SignalFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MusicConfig {
    /// Half-width of the square search window, degrees.
    pub half_width_deg: f64,
    pub resolution_deg: f64,
    pub signal_dim: usize,
}

impl Default for MusicConfig {
    fn default() -> Self {
        MusicConfig { half_width_deg: 1.25, resolution_deg: 0.05, signal_dim: 1 }
    }
}

impl MusicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_deg > 0.0 && self.resolution_deg > 0.0 && self.resolution_deg < self.half_width_deg) {
            return Err(Error::Config("MUSIC window must be positive and wider than the grid step".into()));
        }
        if self.signal_dim == 0 {
            return Err(Error::Config("MUSIC signal subspace must be at least one-dimensional".into()));
        }
        Ok(())
    }
}

/// `(1/N) Σ_k y_k y_k^H` over the frame's pilot-sample snapshots.
pub fn sample_covariance(frame: &SignalFrame) -> Result<DMatrix<Complex64>> {
    let m = frame.num_subarrays;
    let n = frame.pilot_len();
    if n < 2 {
        return Err(Error::RankDeficient { snapshots: n });
    }
    let data = DMatrix::from_fn(m, n, |i, k| frame.y[i * n + k]);
    Ok(&data * data.adjoint() / Complex64::new(n as f64, 0.0))
}

/// Orthonormal basis of the dominant `dim` eigenvectors, one per column.
pub fn signal_subspace(cov: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<DVector<Complex64>> = order[..dim].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

/// `1 / ‖E_n^H â‖²` computed as `1 / (1 − ‖E_s^H â‖²)` with `â` normalised.
pub fn pseudospectrum(signal: &DMatrix<Complex64>, response: &[Complex64]) -> f64 {
    let norm2: f64 = response.iter().map(|c| c.norm_sqr()).sum();
    if norm2 == 0.0 {
        return 0.0;
    }
    let mut captured = 0.0;
    for col in signal.column_iter() {
        let p: Complex64 = col.iter().zip(response).map(|(e, a)| e.conj() * a).sum();
        captured += p.norm_sqr();
    }
    1.0 / (1.0 - captured / norm2).max(0.0)
}

/// Grid of candidate directions: a square of tangent-plane offsets around
/// `centre`, row-major in the second tangent axis.
pub fn window_grid(centre: &Direction, half_width_deg: f64, resolution_deg: f64) -> Vec<Direction> {
    let (e1, e2) = centre.tangent_basis();
    let steps = (half_width_deg / resolution_deg).round() as i64;
    let res = resolution_deg.to_radians();
    let mut out = Vec::with_capacity(((2 * steps + 1) * (2 * steps + 1)) as usize);
    for i in -steps..=steps {
        for j in -steps..=steps {
            let v = centre.as_vector() + e1 * (i as f64 * res).tan() + e2 * (j as f64 * res).tan();
            out.push(Direction::new(v));
        }
    }
    out
}

/// Pseudospectrum peak over the window around `predicted`.
pub fn music_estimate(
    frame: &SignalFrame,
    predicted: &Direction,
    hybrid: &HybridConfig,
    cfg: &MusicConfig,
) -> Result<Direction> {
    cfg.validate()?;
    let cov = sample_covariance(frame)?;
    let signal = signal_subspace(&cov, cfg.signal_dim.min(frame.num_subarrays));
    let grid = window_grid(predicted, cfg.half_width_deg, cfg.resolution_deg);
    let mut best = (f64::NEG_INFINITY, *predicted);
    for d in grid {
        let p = pseudospectrum(&signal, &subarray_responses(&d, &frame.pointing, hybrid));
        if p > best.0 {
            best = (p, d);
        }
    }
    Ok(best.1)
}
