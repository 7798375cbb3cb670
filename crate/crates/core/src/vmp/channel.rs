//! Per-frame sufficient statistics and the channel surrogate update.
//!
//! With `x(Γ) = c(Γ) ⊗ s` every bra-ket the estimator needs reduces to the
//! subarray responses `c` and the matched-filter outputs `z_m = s^H y^(m)`:
//! `⟨x|Λ|x⟩ = γ ‖s‖² ‖c‖²` and `⟨y|Λ|x⟩ = γ Σ_m c_m conj(z_m)`.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::array::{responses_gradient, subarray_responses, HybridConfig};
use crate::error::{Error, Result};
use crate::orbit::{CircularOrbit, Direction, OrbitParams};
use crate::signal::SignalFrame;

/// Known quantities shared by every frame of a tracking session.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationContext {
    pub orbit: CircularOrbit,
    pub hybrid: HybridConfig,
    pub pilot: Vec<Complex64>,
    /// Noise precision `γ_v`.
    pub noise_precision: f64,
    /// Channel prior precision `γ_p`.
    pub channel_precision: f64,
}

impl EstimationContext {
    pub fn validate(&self) -> Result<()> {
        if self.pilot.is_empty() {
            return Err(Error::Config("pilot must not be empty".into()));
        }
        if !(self.noise_precision > 0.0) || !(self.channel_precision >= 0.0) {
            return Err(Error::Config("precisions must be positive".into()));
        }
        Ok(())
    }

    pub fn pilot_energy(&self) -> f64 {
        self.pilot.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// `q(h_n) = CN(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSurrogate {
    pub mean: Complex64,
    pub variance: f64,
}

impl ChannelSurrogate {
    /// Contributes nothing to the orbit objective.
    pub fn silent() -> Self {
        ChannelSurrogate { mean: Complex64::new(0.0, 0.0), variance: 0.0 }
    }
}

/// Gaussian surrogate of the orbit parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSurrogate {
    pub mean: OrbitParams,
    pub covariance: Matrix3<f64>,
}

impl OrbitSurrogate {
    pub fn point(mean: OrbitParams) -> Self {
        OrbitSurrogate { mean, covariance: Matrix3::zeros() }
    }
}

/// What the estimator keeps of frame `n`. Immutable once the surrogate is set.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStatistics {
    pub t: f64,
    pub pointing: Direction,
    /// `z_m = s^H y^(m)`.
    pub matched: Vec<Complex64>,
    pub surrogate: ChannelSurrogate,
}

impl FrameStatistics {
    pub fn from_frame(frame: &SignalFrame, ctx: &EstimationContext) -> Result<Self> {
        let n = ctx.pilot.len();
        if frame.num_subarrays != ctx.hybrid.num_subarrays() || frame.y.len() != frame.num_subarrays * n {
            return Err(Error::Config(format!(
                "frame shape {}x{} does not match array {} x pilot {n}",
                frame.num_subarrays,
                frame.pilot_len(),
                ctx.hybrid.num_subarrays()
            )));
        }
        let matched = frame
            .y
            .chunks_exact(n)
            .map(|ym| ctx.pilot.iter().zip(ym).map(|(s, y)| s.conj() * y).sum())
            .collect();
        Ok(FrameStatistics { t: frame.t, pointing: frame.pointing, matched, surrogate: ChannelSurrogate::silent() })
    }

    /// `(‖c(Γ)‖², Σ_m c_m(Γ) conj(z_m))`.
    pub fn correlate(&self, gamma: &OrbitParams, ctx: &EstimationContext) -> Result<(f64, Complex64)> {
        let d = ctx.orbit.direction(self.t, gamma)?;
        let c = subarray_responses(&d, &self.pointing, &ctx.hybrid);
        let norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        let cross = c.iter().zip(&self.matched).map(|(c, z)| c * z.conj()).sum();
        Ok((norm, cross))
    }
}

/// `Tr(Σ G)` with `G_ij = γ ‖s‖² Re(∂_i c^H ∂_j c)`.
pub fn gradient_trace(stats: &FrameStatistics, orbit: &OrbitSurrogate, ctx: &EstimationContext) -> Result<f64> {
    if orbit.covariance.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let jac = responses_gradient(stats.t, &orbit.mean, &ctx.orbit, &stats.pointing, &ctx.hybrid)?;
    let scale = ctx.noise_precision * ctx.pilot_energy();
    let mut trace = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let g: f64 = jac[i].iter().zip(&jac[j]).map(|(a, b)| (a.conj() * b).re).sum();
            trace += orbit.covariance[(i, j)] * g * scale;
        }
    }
    Ok(trace)
}

/// Delta-method approximation of `E_Γ[⟨x|Λ|x⟩]` under `orbit`.
pub fn expected_template_energy(
    stats: &FrameStatistics,
    orbit: &OrbitSurrogate,
    ctx: &EstimationContext,
) -> Result<f64> {
    let d = ctx.orbit.direction(stats.t, &orbit.mean)?;
    let c = subarray_responses(&d, &stats.pointing, &ctx.hybrid);
    let norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    Ok(ctx.noise_precision * ctx.pilot_energy() * norm + gradient_trace(stats, orbit, ctx)?)
}

/// Channel surrogate of one frame given the current orbit surrogate:
/// `variance = (E[⟨x|Λ|x⟩] + γ_p)^-1`, `mean = variance ⟨x(Γ̄)|Λ|y⟩`.
pub fn update_channel(
    stats: &FrameStatistics,
    orbit: &OrbitSurrogate,
    ctx: &EstimationContext,
) -> Result<ChannelSurrogate> {
    let (_, cross) = stats.correlate(&orbit.mean, ctx)?;
    let energy = expected_template_energy(stats, orbit, ctx)?;
    let variance = 1.0 / (energy + ctx.channel_precision);
    Ok(ChannelSurrogate { mean: cross.conj() * (variance * ctx.noise_precision), variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkBudget;
    use crate::signal::{synthesize_frame, zadoff_chu, LinkSetup, TruthSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn context(noise_precision: f64) -> EstimationContext {
        EstimationContext {
            orbit: CircularOrbit::default(),
            hybrid: HybridConfig::default(),
            pilot: zadoff_chu(63, 29).unwrap(),
            noise_precision,
            channel_precision: 0.0,
        }
    }

    fn frame(gamma: OrbitParams, t: f64, noise_precision: f64, seed: u64) -> (SignalFrame, Complex64) {
        let ctx = context(noise_precision);
        let truth = TruthSource::Orbit { orbit: ctx.orbit, gamma };
        let setup = LinkSetup {
            hybrid: ctx.hybrid,
            budget: LinkBudget::default(),
            pilot: ctx.pilot.clone(),
            noise_precision,
        };
        let d = truth.direction(t).unwrap();
        let pointing = d.rotated(&nalgebra::Vector3::new(0.3, 1.0, 0.2), 0.01);
        let f = synthesize_frame(t, &truth, &pointing, &setup, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let c = subarray_responses(&d, &pointing, &ctx.hybrid);
        let h = f.y[0] / (c[0] * ctx.pilot[0]);
        (f, h)
    }

    fn truth() -> OrbitParams {
        OrbitParams::new(1.5, 0.4, 3.0 * FRAC_PI_2 - 0.1)
    }

    #[test]
    fn collapses_to_least_squares() {
        let (f, h) = frame(truth(), 0.0, f64::INFINITY, 1);
        let ctx = context(1.0);
        let stats = FrameStatistics::from_frame(&f, &ctx).unwrap();
        let s = update_channel(&stats, &OrbitSurrogate::point(truth()), &ctx).unwrap();
        assert!((s.mean - h).norm() <= 1e-12 * h.norm(), "{} vs {}", s.mean, h);
        let x2 = ctx.pilot_energy() * stats.correlate(&truth(), &ctx).unwrap().0;
        assert!((s.variance - 1.0 / x2).abs() <= 1e-14 / x2);
    }

    #[test]
    fn variance_with_channel_prior() {
        let (f, _) = frame(truth(), 0.0, 1e10, 2);
        let mut ctx = context(3.0);
        ctx.channel_precision = 7.0;
        let stats = FrameStatistics::from_frame(&f, &ctx).unwrap();
        let s = update_channel(&stats, &OrbitSurrogate::point(truth()), &ctx).unwrap();
        let x2 = ctx.pilot_energy() * stats.correlate(&truth(), &ctx).unwrap().0;
        assert!((s.variance - 1.0 / (3.0 * x2 + 7.0)).abs() < 1e-12 * s.variance);
    }

    #[test]
    fn orbit_uncertainty_shrinks_variance() {
        let (f, _) = frame(truth(), 30.0, 1e10, 3);
        let ctx = context(1.0);
        let stats = FrameStatistics::from_frame(&f, &ctx).unwrap();
        let point = update_channel(&stats, &OrbitSurrogate::point(truth()), &ctx).unwrap();
        let mut spread = OrbitSurrogate::point(truth());
        spread.covariance = Matrix3::from_diagonal(&nalgebra::Vector3::new(1e-8, 2e-8, 3e-8));
        let blurred = update_channel(&stats, &spread, &ctx).unwrap();
        assert!(blurred.variance < point.variance);
        assert!(gradient_trace(&stats, &spread, &ctx).unwrap() > 0.0);
        spread.covariance *= 2.0;
        assert!(update_channel(&stats, &spread, &ctx).unwrap().variance < blurred.variance);
    }

    #[test]
    fn matched_filter_statistics() {
        let (f, h) = frame(truth(), 0.0, f64::INFINITY, 4);
        let ctx = context(1.0);
        let stats = FrameStatistics::from_frame(&f, &ctx).unwrap();
        let (norm, cross) = stats.correlate(&truth(), &ctx).unwrap();
        // y^H x = conj(h) ‖s‖² ‖c‖²
        let expected = h.conj() * ctx.pilot_energy() * norm;
        assert!((cross - expected).norm() < 1e-9 * expected.norm());
        let bad = SignalFrame { num_subarrays: 32, ..f };
        assert!(FrameStatistics::from_frame(&bad, &ctx).is_err());
    }
}
