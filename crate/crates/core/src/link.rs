//! Downlink budget and channel draws.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{subarray_responses, HybridConfig};
use crate::error::{Error, Result};
use crate::orbit::{Direction, Position};

pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Free-space path loss, dB.
pub fn fspl_db(distance: f64, freq: f64) -> f64 {
    20.0 * (4.0 * PI * distance * freq / SPEED_OF_LIGHT).log10()
}

/// Elevation-dependent atmospheric attenuation, piecewise linear between
/// knots and constant beyond the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct AtmosTable {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for AtmosTable {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        AtmosTable::new(knots)
    }
}

impl From<AtmosTable> for Vec<(f64, f64)> {
    fn from(t: AtmosTable) -> Self {
        t.knots
    }
}

impl Default for AtmosTable {
    /// 28 GHz, 0.01 % exceedance, mid-latitude.
    fn default() -> Self {
        AtmosTable::new(vec![
            (5.0, 10.0),
            (10.0, 6.0),
            (20.0, 3.5),
            (30.0, 2.5),
            (45.0, 1.8),
            (60.0, 1.4),
            (90.0, 1.0),
        ])
        .expect("default table is valid")
    }
}

impl AtmosTable {
    /// Knots are `(elevation_deg, attenuation_db)`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Config("attenuation table is empty".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config(format!(
                    "attenuation table elevations must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Config(format!(
                    "attenuation must not increase with elevation ({} dB at {} deg, {} dB at {} deg)",
                    w[0].1, w[0].0, w[1].1, w[1].0
                )));
            }
        }
        if knots.iter().any(|(e, a)| !e.is_finite() || !a.is_finite()) {
            return Err(Error::Config("attenuation table has non-finite entries".into()));
        }
        Ok(AtmosTable { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn attenuation_db(&self, elevation_deg: f64) -> f64 {
        let k = &self.knots;
        if elevation_deg <= k[0].0 {
            return k[0].1;
        }
        if elevation_deg >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|(e, _)| *e <= elevation_deg);
        let (e0, a0) = k[i - 1];
        let (e1, a1) = k[i];
        a0 + (a1 - a0) * (elevation_deg - e0) / (e1 - e0)
    }

    /// Two-column text: `elevation_deg, attenuation_db` per line, separated by
    /// commas or whitespace. Blank lines, `#` comments and a non-numeric
    /// header line are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 2 => knots.push((v[0], v[1])),
                Err(_) if knots.is_empty() && i == 0 => continue,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected two numbers, got `{line}`"),
                    })
                }
            }
        }
        AtmosTable::new(knots)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Downlink budget. Gains in dB, power in W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    pub tx_power_w: f64,
    pub carrier_freq: f64,
    pub tx_gain_db: f64,
    pub rx_element_gain_db: f64,
    pub atmos: AtmosTable,
    pub exceedance_p: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_w: 5.0,
            carrier_freq: 28e9,
            // 32x32 transmit array steered at the ground station, plus element gain
            tx_gain_db: 10.0 * 1024f64.log10() + 5.46,
            rx_element_gain_db: 5.46,
            atmos: AtmosTable::default(),
            exceedance_p: 1e-4,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_w > 0.0) || !(self.carrier_freq > 0.0) {
            return Err(Error::Config("transmit power and carrier frequency must be positive".into()));
        }
        if !(self.exceedance_p > 0.0 && self.exceedance_p < 1.0) {
            return Err(Error::Config(format!(
                "exceedance probability {} outside (0, 1)",
                self.exceedance_p
            )));
        }
        Ok(())
    }
}

/// Atmospheric attenuation at `elevation_deg`.
pub fn atmos_db(elevation_deg: f64, budget: &LinkBudget) -> f64 {
    budget.atmos.attenuation_db(elevation_deg)
}

/// Channel amplitude for a satellite at `position` (ground-station frame).
/// Receive array gain is not included; it arises from combining.
pub fn channel_amplitude(t: f64, position: &Position, budget: &LinkBudget) -> Result<f64> {
    if !(position.z > 0.0) {
        return Err(Error::BelowHorizon { t });
    }
    let distance = position.norm();
    let elevation = (position.z / distance).asin().to_degrees();
    let db = budget.tx_gain_db + budget.rx_element_gain_db
        - fspl_db(distance, budget.carrier_freq)
        - atmos_db(elevation, budget);
    Ok(10f64.powf(db / 20.0) * budget.tx_power_w.sqrt())
}

/// One realisation of the line-of-sight channel `h = rho e^{j chi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub amplitude: f64,
    pub phase: f64,
    pub h: Complex64,
}

pub fn draw_channel<R: Rng + ?Sized>(
    t: f64,
    position: &Position,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<ChannelDraw> {
    let amplitude = channel_amplitude(t, position, budget)?;
    let phase = rng.random_range(0.0..TAU);
    Ok(ChannelDraw { amplitude, phase, h: Complex64::from_polar(amplitude, phase) })
}

/// Noise precision `gamma_v` giving the requested average per-sample
/// post-combining SNR at `position` with the analog weights on target:
/// `SNR = |h|^2 ||x||^2 gamma_v / (M N_s)`.
pub fn noise_precision_for_snr(
    snr_db: f64,
    t: f64,
    position: &Position,
    budget: &LinkBudget,
    hybrid: &HybridConfig,
    s: &[Complex64],
) -> Result<f64> {
    let rho = channel_amplitude(t, position, budget)?;
    let d = Direction::try_new(*position, 1.0)?;
    let c = subarray_responses(&d, &d, hybrid);
    let c2: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let s2: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let signal = rho * rho * c2 * s2 / (hybrid.num_subarrays() * s.len()) as f64;
    if !(signal > 0.0) || !signal.is_finite() {
        return Err(Error::ZeroSignalPower);
    }
    Ok(10f64.powf(snr_db / 10.0) / signal)
}
