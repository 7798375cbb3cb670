//! Scenario configuration, read from TOML. Every field has a default, so an
//! empty file describes the reference scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::HybridConfig;
use crate::baseline::BaselineConfig;
use crate::error::{Error, Result};
use crate::link::LinkBudget;
use crate::orbit::{OrbitParams, DEFAULT_ALTITUDE};
use crate::vmp::VmpConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub altitude: f64,
    /// Fixed orbit for every run; drawn from the prior when absent.
    pub params: Option<OrbitParams>,
    /// Trajectory file (`t_seconds,x_m,y_m,z_m`) used as ground truth.
    pub trajectory: Option<PathBuf>,
    /// Linear drift of the true inclination-like angle over the run, rad.
    /// A non-zero value makes the truth leave the circular-orbit model.
    pub alpha_drift: f64,
    /// Prior draws allowed when searching for a long enough pass.
    pub max_draws: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig { altitude: DEFAULT_ALTITUDE, params: None, trajectory: None, alpha_drift: 0.0, max_draws: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotConfig {
    pub length: usize,
    pub root: usize,
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig { length: 63, root: 29 }
    }
}

/// Time steps, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CadenceConfig {
    /// Frames consumed by the orbit tracker; one orbit update per frame.
    pub vmp_frame: f64,
    /// Frames consumed by the two-step baseline.
    pub baseline_frame: f64,
    /// Error-metric grid.
    pub metric: f64,
    /// Grid for the pass-visibility check.
    pub visibility_check: f64,
}

impl Default for CadenceConfig {
    fn default() -> Self {
        CadenceConfig { vmp_frame: 20.0, baseline_frame: 5.0, metric: 5.0, visibility_check: 1.0 }
    }
}

/// Frames recorded inside `[start, end]` contain noise only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstructionWindow {
    pub start: f64,
    pub end: f64,
}

impl ObstructionWindow {
    /// Parses `T0:T1`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("obstruction window must look like T0:T1, got `{text}`"));
        let (a, b) = text.split_once(':').ok_or_else(bad)?;
        let w = ObstructionWindow {
            start: a.trim().parse().map_err(|_| bad())?,
            end: b.trim().parse().map_err(|_| bad())?,
        };
        if !(w.start <= w.end) {
            return Err(bad());
        }
        Ok(w)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodsConfig {
    pub vmp: bool,
    pub baseline: bool,
}

impl Default for MethodsConfig {
    fn default() -> Self {
        MethodsConfig { vmp: true, baseline: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Monte Carlo runs.
    pub runs: usize,
    /// Pass length analysed, s. Drawn orbits must stay visible throughout.
    pub duration: f64,
    /// SNR at t = 0 with the beam on the satellite, dB.
    pub snr_db: f64,
    /// Angle between the initial AoA estimate and the truth, degrees.
    pub initial_aoa_error_deg: f64,
    /// Channel prior precision relative to `1 / ρ0²`, where `ρ0` is the
    /// channel amplitude at t = 0.
    pub channel_prior_ratio: f64,
    pub orbit: OrbitConfig,
    pub array: HybridConfig,
    pub link: LinkBudget,
    pub pilot: PilotConfig,
    pub cadence: CadenceConfig,
    pub obstruction: Option<ObstructionWindow>,
    pub vmp: VmpConfig,
    pub baseline: BaselineConfig,
    pub methods: MethodsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            runs: 10,
            duration: 500.0,
            snr_db: 0.0,
            initial_aoa_error_deg: 1.0,
            channel_prior_ratio: 0.01,
            orbit: OrbitConfig::default(),
            array: HybridConfig::default(),
            link: LinkBudget::default(),
            pilot: PilotConfig::default(),
            cadence: CadenceConfig::default(),
            obstruction: None,
            vmp: VmpConfig::default(),
            baseline: BaselineConfig::default(),
            methods: MethodsConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::Config("duration must be positive".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("at least one Monte Carlo run is required".into()));
        }
        let c = &self.cadence;
        for (name, v) in [
            ("vmp_frame", c.vmp_frame),
            ("baseline_frame", c.baseline_frame),
            ("metric", c.metric),
            ("visibility_check", c.visibility_check),
        ] {
            if !(v > 0.0 && v <= self.duration) {
                return Err(Error::Config(format!("cadence {name} must lie in (0, duration], got {v}")));
            }
        }
        if self.duration < 2.0 * c.vmp_frame {
            return Err(Error::Config("duration must cover the two initialisation frames".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite".into()));
        }
        if !(self.initial_aoa_error_deg >= 0.0) || !(self.channel_prior_ratio >= 0.0) {
            return Err(Error::Config("initial AoA error and channel prior ratio must be non-negative".into()));
        }
        if !(self.orbit.altitude > 0.0) || self.orbit.max_draws == 0 {
            return Err(Error::Config("altitude and draw budget must be positive".into()));
        }
        if self.orbit.trajectory.is_some() && (self.orbit.params.is_some() || self.orbit.alpha_drift != 0.0) {
            return Err(Error::Config("a trajectory file excludes fixed parameters and drift".into()));
        }
        if let Some(w) = &self.obstruction {
            if !(w.start <= w.end) {
                return Err(Error::Config("obstruction window must have start <= end".into()));
            }
        }
        self.array.validate()?;
        self.link.validate()?;
        self.vmp.validate()?;
        self.baseline.validate()?;
        Ok(())
    }

    /// Times `0, step, 2 step, ...` up to the duration.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        let n = (self.duration / step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    }
}
