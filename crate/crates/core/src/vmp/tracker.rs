//! Session state: initialisation from the first two frames, then one orbit
//! update per new frame.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::orbit::{Direction, OrbitParams};
use crate::signal::SignalFrame;

use super::abc::{abc_sample, AbcConfig, AbcSample};
use super::channel::{update_channel, ChannelSurrogate, EstimationContext, FrameStatistics, OrbitSurrogate};
use super::kde::{KdePrior, DEFAULT_BANDWIDTH};
use super::laplace::{laplace_covariance, HESSIAN_STEP};
use super::objective::{ChannelMode, CrossTerm, LogQ, WindowConfig};
use super::simplex::{optimize_gamma, SimplexConfig};

/// Channel surrogates used while the first orbit estimate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitChannel {
    /// Computed once at the highest-fitness ABC sample.
    BestSample,
    /// Re-derived at every candidate, so each start is scored and refined
    /// with channel moments matched to its own geometry.
    #[default]
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VmpConfig {
    pub abc: AbcConfig,
    pub kde_bandwidth: f64,
    /// Number of highest-scoring ABC samples used as simplex starts.
    pub n_starts: usize,
    pub simplex: SimplexConfig,
    pub hessian_step: f64,
    pub window: WindowConfig,
    pub cross_term: CrossTerm,
    pub init_channel: InitChannel,
    /// Extra channel/orbit alternations after the first orbit estimate.
    pub init_sweeps: usize,
    /// Channel/orbit alternations per new frame; at least one always runs.
    pub step_sweeps: usize,
}

impl Default for VmpConfig {
    fn default() -> Self {
        VmpConfig {
            abc: AbcConfig::default(),
            kde_bandwidth: DEFAULT_BANDWIDTH,
            n_starts: 60,
            simplex: SimplexConfig::default(),
            hessian_step: HESSIAN_STEP,
            window: WindowConfig::default(),
            cross_term: CrossTerm::default(),
            init_channel: InitChannel::default(),
            init_sweeps: 1,
            step_sweeps: 1,
        }
    }
}

impl VmpConfig {
    pub fn validate(&self) -> Result<()> {
        self.abc.validate()?;
        self.simplex.validate()?;
        self.window.validate()?;
        if self.n_starts == 0 || self.n_starts > self.abc.n_samp {
            return Err(Error::Config(format!(
                "n_starts must lie in 1..={}, got {}",
                self.abc.n_samp, self.n_starts
            )));
        }
        if !(self.kde_bandwidth > 0.0 && self.hessian_step > 0.0) {
            return Err(Error::Config("bandwidth and Hessian step must be positive".into()));
        }
        Ok(())
    }
}

/// Estimator output after a frame has been absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Index of the newest frame.
    pub n: usize,
    pub t: f64,
    pub orbit: OrbitSurrogate,
    /// Surrogate of the newest frame's channel.
    pub channel: ChannelSurrogate,
    /// The Hessian could not be inverted; the previous covariance was kept.
    pub hessian_failed: bool,
}

#[derive(Debug, Clone)]
pub struct VmpTracker {
    ctx: EstimationContext,
    cfg: VmpConfig,
    abc: Vec<AbcSample>,
    prior: KdePrior,
    starts: Vec<OrbitParams>,
    frames: Vec<FrameStatistics>,
    orbit: OrbitSurrogate,
    history: Vec<StepRecord>,
}

impl VmpTracker {
    /// Runs ABC from `initial_aoa`, builds the KDE prior and fits the first
    /// orbit surrogate to `frames` (at least two).
    pub fn initialize<R: Rng + ?Sized>(
        frames: &[SignalFrame],
        initial_aoa: &Direction,
        ctx: EstimationContext,
        cfg: VmpConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let abc = abc_sample(initial_aoa, &ctx.orbit, &cfg.abc, rng)?;
        Self::initialize_with_samples(frames, abc, ctx, cfg)
    }

    /// As [`VmpTracker::initialize`] with ABC samples supplied by the caller.
    pub fn initialize_with_samples(
        frames: &[SignalFrame],
        abc: Vec<AbcSample>,
        ctx: EstimationContext,
        cfg: VmpConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        ctx.validate()?;
        if frames.len() < 2 {
            return Err(Error::Config("initialisation needs at least two frames".into()));
        }
        if abc.len() < cfg.n_starts {
            return Err(Error::InsufficientSamples { accepted: abc.len(), needed: cfg.n_starts });
        }
        let prior = KdePrior::new(abc.iter().map(|s| s.params).collect(), cfg.kde_bandwidth)?;
        let mut stats = frames
            .iter()
            .map(|f| FrameStatistics::from_frame(f, &ctx))
            .collect::<Result<Vec<_>>>()?;

        let mode = match cfg.init_channel {
            InitChannel::BestSample => {
                let best = OrbitSurrogate::point(abc[0].params);
                for s in &mut stats {
                    s.surrogate = update_channel(s, &best, &ctx)?;
                }
                ChannelMode::Fixed
            }
            InitChannel::Profile => ChannelMode::Profile,
        };

        let (starts, mean) = {
            let objective = LogQ::new(&ctx, &stats, Some(&prior))
                .with_window(cfg.window)
                .with_cross_term(cfg.cross_term)
                .with_channel_mode(mode);
            let scores: Vec<f64> = abc.par_iter().map(|s| objective.eval(&s.params)).collect();
            let mut order: Vec<usize> = (0..abc.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            let starts: Vec<OrbitParams> = order[..cfg.n_starts].iter().map(|&i| abc[i].params).collect();
            let best = optimize_gamma(|g| objective.eval(g), &starts, &cfg.simplex)?;
            (starts, best.params)
        };

        let mut tracker = VmpTracker {
            ctx,
            cfg,
            abc,
            prior,
            starts,
            frames: stats,
            orbit: OrbitSurrogate::point(mean),
            history: Vec::new(),
        };
        if mode == ChannelMode::Profile {
            tracker.refresh_channels(0..tracker.frames.len())?;
        }
        for _ in 0..cfg.init_sweeps {
            tracker.reoptimize();
            tracker.refresh_channels(0..tracker.frames.len())?;
        }
        let hessian_failed = match tracker.laplace() {
            Ok(cov) => {
                tracker.orbit.covariance = cov;
                false
            }
            Err(Error::SingularHessian { .. }) => {
                let bw2 = tracker.cfg.kde_bandwidth.powi(2);
                tracker.orbit.covariance = Matrix3::identity() * bw2;
                true
            }
            Err(e) => return Err(e),
        };
        tracker.record(hessian_failed);
        Ok(tracker)
    }

    /// Absorbs the next frame: channel update from the previous orbit
    /// moments, then a simplex search from the previous mean and a fresh
    /// Laplace covariance.
    pub fn step(&mut self, frame: &SignalFrame) -> Result<StepRecord> {
        let mut stats = FrameStatistics::from_frame(frame, &self.ctx)?;
        stats.surrogate = update_channel(&stats, &self.orbit, &self.ctx)?;
        self.frames.push(stats);
        let newest = self.frames.len() - 1;
        let sweeps = self.cfg.step_sweeps.max(1);
        for sweep in 0..sweeps {
            self.reoptimize();
            if sweep + 1 < sweeps {
                let orbit = self.orbit;
                self.frames[newest].surrogate = update_channel(&self.frames[newest], &orbit, &self.ctx)?;
            }
        }
        let hessian_failed = match self.laplace() {
            Ok(cov) => {
                self.orbit.covariance = cov;
                false
            }
            Err(Error::SingularHessian { .. }) => true,
            Err(e) => return Err(e),
        };
        Ok(self.record(hessian_failed))
    }

    fn reoptimize(&mut self) {
        let objective = self.objective();
        let best = optimize_gamma(|g| objective.eval(g), &[self.orbit.mean], &self.cfg.simplex)
            .expect("one start");
        self.orbit.mean = best.params;
    }

    /// Re-derives the channel surrogates of `range` at the current mean with
    /// zero orbit covariance.
    fn refresh_channels(&mut self, range: std::ops::Range<usize>) -> Result<()> {
        let point = OrbitSurrogate::point(self.orbit.mean);
        for i in range {
            self.frames[i].surrogate = update_channel(&self.frames[i], &point, &self.ctx)?;
        }
        Ok(())
    }

    fn laplace(&self) -> Result<Matrix3<f64>> {
        let objective = self.objective();
        laplace_covariance(|g| objective.eval(g), &self.orbit.mean, self.cfg.hessian_step)
    }

    fn record(&mut self, hessian_failed: bool) -> StepRecord {
        let last = self.frames.last().expect("at least one frame");
        let rec = StepRecord {
            n: self.frames.len() - 1,
            t: last.t,
            orbit: self.orbit,
            channel: last.surrogate,
            hessian_failed,
        };
        self.history.push(rec);
        rec
    }

    /// Current objective with the stored channel surrogates.
    pub fn objective(&self) -> LogQ<'_> {
        LogQ::new(&self.ctx, &self.frames, Some(&self.prior))
            .with_window(self.cfg.window)
            .with_cross_term(self.cfg.cross_term)
    }

    pub fn orbit(&self) -> &OrbitSurrogate {
        &self.orbit
    }

    pub fn frames(&self) -> &[FrameStatistics] {
        &self.frames
    }

    pub fn prior(&self) -> &KdePrior {
        &self.prior
    }

    pub fn abc_samples(&self) -> &[AbcSample] {
        &self.abc
    }

    /// Simplex starts used at initialisation, best-scoring first.
    pub fn starts(&self) -> &[OrbitParams] {
        &self.starts
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn context(&self) -> &EstimationContext {
        &self.ctx
    }

    pub fn config(&self) -> &VmpConfig {
        &self.cfg
    }

    pub fn predict_aoa(&self, t: f64) -> Result<Direction> {
        predict_aoa(t, &self.orbit, &self.ctx)
    }

    /// History as CSV with columns
    /// `n,t,alpha,beta,eta0,cov_00..cov_22,h_re,h_im,h_var`.
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

/// AoA at `t` under the orbit mean.
pub fn predict_aoa(t: f64, orbit: &OrbitSurrogate, ctx: &EstimationContext) -> Result<Direction> {
    ctx.orbit.direction(t, &orbit.mean)
}

pub fn history_csv(history: &[StepRecord]) -> String {
    let mut out = String::from("n,t,alpha,beta,eta0");
    for i in 0..3 {
        for j in 0..3 {
            out.push_str(&format!(",cov_{i}{j}"));
        }
    }
    out.push_str(",h_re,h_im,h_var\n");
    for r in history {
        let m = r.orbit.mean;
        out.push_str(&format!("{},{},{},{},{}", r.n, r.t, m.alpha, m.beta, m.eta0));
        for i in 0..3 {
            for j in 0..3 {
                out.push_str(&format!(",{}", r.orbit.covariance[(i, j)]));
            }
        }
        out.push_str(&format!(",{},{},{}\n", r.channel.mean.re, r.channel.mean.im, r.channel.variance));
    }
    out
}

/// Squared Mahalanobis radius enclosing `level` of a 3-D Gaussian.
pub fn chi_square_threshold(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let chi = ChiSquared::new(3.0).map_err(|e| Error::Config(e.to_string()))?;
    Ok(chi.inverse_cdf(level))
}

/// Draws from `N(mean, covariance)` and keeps those inside the `level`
/// confidence ellipsoid until `count` are kept.
pub fn sample_ci_orbits<R: Rng + ?Sized>(
    orbit: &OrbitSurrogate,
    level: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<OrbitParams>> {
    let threshold = chi_square_threshold(level)?;
    let sym = (orbit.covariance + orbit.covariance.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let root = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let mean = orbit.mean.to_vector();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        if z.norm_squared() <= threshold {
            out.push(OrbitParams::from_vector(&(mean + root * z)));
        }
    }
    Ok(out)
}
