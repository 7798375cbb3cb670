//! Unnormalised log surrogate of the orbit parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::OrbitParams;

use super::channel::{ChannelSurrogate, EstimationContext, FrameStatistics, OrbitSurrogate};
use super::kde::KdePrior;

/// Exponential forgetting: frame `n` of `N` is weighted by `rho^(N-n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub rho: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { rho: 1.0 }
    }
}

impl WindowConfig {
    pub fn new(rho: f64) -> Result<Self> {
        let w = WindowConfig { rho };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!("window rho must lie in (0, 1], got {}", self.rho)));
        }
        Ok(())
    }

    /// Weights for `count` frames, oldest first.
    pub fn weights(&self, count: usize) -> Vec<f64> {
        (0..count).map(|n| self.rho.powi((count - 1 - n) as i32)).collect()
    }
}

/// How the data term `⟨y|Λ|h̄ x(Γ)⟩` enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossTerm {
    /// `2 |·|`: phase-blind, and maximal at the true template for an exact
    /// channel mean.
    #[default]
    TwiceModulus,
    /// `|·|` without the factor two. For an exact channel mean the maximum
    /// sits where the template's projection on the truth is half its norm.
    Modulus,
    /// `2 Re{·}`: the exact expectation; sensitive to the channel phase.
    TwiceReal,
}

/// Whether the channel surrogates are held fixed or re-derived at every
/// evaluated `Γ` (with zero orbit covariance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    #[default]
    Fixed,
    Profile,
}

/// Contribution of one frame at `gamma` for a given channel surrogate.
pub fn frame_term(
    gamma: &OrbitParams,
    stats: &FrameStatistics,
    surrogate: &ChannelSurrogate,
    ctx: &EstimationContext,
    cross_term: CrossTerm,
) -> Result<f64> {
    let (norm, cross) = stats.correlate(gamma, ctx)?;
    let gv = ctx.noise_precision;
    let energy = gv * ctx.pilot_energy() * norm;
    // ⟨y|Λ|h̄ x⟩ = γ h̄ Σ c_m conj(z_m)
    let data = surrogate.mean * cross * gv;
    let fit = match cross_term {
        CrossTerm::TwiceModulus => 2.0 * data.norm(),
        CrossTerm::Modulus => data.norm(),
        CrossTerm::TwiceReal => 2.0 * data.re,
    };
    Ok(-(surrogate.mean.norm_sqr() + surrogate.variance) * energy + fit)
}

/// Frame term with the channel surrogate updated at `gamma` itself.
pub fn profile_frame_term(
    gamma: &OrbitParams,
    stats: &FrameStatistics,
    ctx: &EstimationContext,
    cross_term: CrossTerm,
) -> Result<f64> {
    let surrogate = super::channel::update_channel(stats, &OrbitSurrogate::point(*gamma), ctx)?;
    frame_term(gamma, stats, &surrogate, ctx, cross_term)
}

/// `ln q(Γ)` up to a constant: windowed frame terms plus the KDE prior.
#[derive(Debug, Clone, Copy)]
pub struct LogQ<'a> {
    pub ctx: &'a EstimationContext,
    pub frames: &'a [FrameStatistics],
    pub prior: Option<&'a KdePrior>,
    pub window: WindowConfig,
    pub cross_term: CrossTerm,
    pub channel_mode: ChannelMode,
}

impl<'a> LogQ<'a> {
    pub fn new(ctx: &'a EstimationContext, frames: &'a [FrameStatistics], prior: Option<&'a KdePrior>) -> Self {
        LogQ {
            ctx,
            frames,
            prior,
            window: WindowConfig::default(),
            cross_term: CrossTerm::default(),
            channel_mode: ChannelMode::default(),
        }
    }

    pub fn with_window(self, window: WindowConfig) -> Self {
        LogQ { window, ..self }
    }

    pub fn with_cross_term(self, cross_term: CrossTerm) -> Self {
        LogQ { cross_term, ..self }
    }

    pub fn with_channel_mode(self, channel_mode: ChannelMode) -> Self {
        LogQ { channel_mode, ..self }
    }

    /// Data part only, without the prior.
    pub fn likelihood(&self, gamma: &OrbitParams) -> Result<f64> {
        let weights = self.window.weights(self.frames.len());
        let mut total = 0.0;
        for (stats, w) in self.frames.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let term = match self.channel_mode {
                ChannelMode::Fixed => frame_term(gamma, stats, &stats.surrogate, self.ctx, self.cross_term)?,
                ChannelMode::Profile => profile_frame_term(gamma, stats, self.ctx, self.cross_term)?,
            };
            total += w * term;
        }
        Ok(total)
    }

    /// Objective value; `-inf` where the geometry is undefined.
    pub fn eval(&self, gamma: &OrbitParams) -> f64 {
        let prior = self.prior.map_or(0.0, |p| p.log_density(gamma));
        match self.likelihood(gamma) {
            Ok(l) => l + prior,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// `ln q(Γ)` with fixed channel surrogates and the default cross term.
pub fn log_q_gamma(
    gamma: &OrbitParams,
    frames: &[FrameStatistics],
    prior: Option<&KdePrior>,
    window: WindowConfig,
    ctx: &EstimationContext,
) -> f64 {
    LogQ::new(ctx, frames, prior).with_window(window).eval(gamma)
}
