//! Monte Carlo experiments: draw a pass, synthesise frames, run both
//! trackers, score them against the truth.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{two_step_run, BaselineRecord};
use crate::error::{Error, Result};
use crate::link::{channel_amplitude, noise_precision_for_snr};
use crate::orbit::{sample_prior, CircularOrbit, Direction, OrbitParams, DEFAULT_RATE_DT};
use crate::signal::{obstruct, synthesize_frame, zadoff_chu, LinkSetup, SignalFrame, Trajectory, TruthSource};
use crate::vmp::{EstimationContext, StepRecord, VmpTracker};

use super::config::ScenarioConfig;
use super::metrics::{angular_error, MetricSeries};

pub const VMP: &str = "vmp";
pub const BASELINE: &str = "baseline";

/// Independent random stream for one purpose within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Truth = 0,
    InitialAoa = 1,
    Abc = 2,
    VmpFrames = 3,
    BaselineFrames = 4,
    Confidence = 5,
}

const STREAMS_PER_RUN: u64 = 8;

pub fn stream_rng(seed: u64, run: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64 * STREAMS_PER_RUN + stream as u64);
    rng
}

/// A validated configuration with its trajectory file loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub orbit: CircularOrbit,
    pub pilot: Vec<Complex64>,
    trajectory: Option<Trajectory>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let trajectory = match &config.orbit.trajectory {
            Some(path) => Some(Trajectory::load(path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
                other => other,
            })?),
            None => None,
        };
        Ok(Scenario {
            orbit: CircularOrbit::from_altitude(config.orbit.altitude),
            pilot: zadoff_chu(config.pilot.length, config.pilot.root)?,
            trajectory,
            config,
        })
    }

    /// Frame times of the orbit tracker.
    pub fn vmp_times(&self) -> Vec<f64> {
        self.config.grid(self.config.cadence.vmp_frame)
    }

    /// Frame times of the baseline.
    pub fn baseline_times(&self) -> Vec<f64> {
        self.config.grid(self.config.cadence.baseline_frame)
    }

    pub fn metric_times(&self) -> Vec<f64> {
        self.config.grid(self.config.cadence.metric)
    }

    fn visible_throughout(&self, truth: &TruthSource) -> bool {
        self.config.grid(self.config.cadence.visibility_check).into_iter().all(|t| truth.is_visible(t))
            && truth.is_visible(self.config.duration)
    }

    fn truth_for(&self, gamma: OrbitParams) -> Result<TruthSource> {
        let drift = self.config.orbit.alpha_drift;
        if drift == 0.0 {
            return Ok(TruthSource::Orbit { orbit: self.orbit, gamma });
        }
        let duration = self.config.duration;
        let samples = (0..=duration.ceil() as usize)
            .map(|k| {
                let t = k as f64;
                let g = OrbitParams { alpha: gamma.alpha + drift * t / duration, ..gamma };
                (t, self.orbit.position(t, &g))
            })
            .collect();
        Ok(TruthSource::Trajectory(Trajectory::new(samples)?))
    }

    /// Ground truth for `run`: the trajectory file, the fixed orbit, or a
    /// prior draw that is rising at t = 0 and visible over the whole duration.
    pub fn draw_truth(&self, run: usize) -> Result<RunTruth> {
        let source = if let Some(traj) = &self.trajectory {
            let source = TruthSource::Trajectory(traj.clone());
            if !self.visible_throughout(&source) {
                return Err(Error::Scenario("trajectory is not visible over the whole duration".into()));
            }
            (source, None)
        } else if let Some(g) = self.config.orbit.params {
            let source = self.truth_for(g)?;
            if !self.visible_throughout(&source) {
                return Err(Error::Scenario("configured orbit is not visible over the whole duration".into()));
            }
            (source, Some(g))
        } else {
            let mut rng = stream_rng(self.config.seed, run, Stream::Truth);
            let mut found = None;
            for _ in 0..self.config.orbit.max_draws {
                let g = sample_prior(&mut rng);
                // cheap rejection before building a drifted trajectory; the
                // estimator's prior only holds rising passes
                if !self.orbit.is_visible(0.0, &g)
                    || !self.orbit.is_visible(self.config.duration, &g)
                    || !self.orbit.polar_rate(0.0, &g, DEFAULT_RATE_DT).is_ok_and(|r| r < 0.0)
                {
                    continue;
                }
                let source = self.truth_for(g)?;
                if self.visible_throughout(&source) {
                    found = Some((source, Some(g)));
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Scenario(format!(
                    "no orbit visible for {} s in {} prior draws",
                    self.config.duration, self.config.orbit.max_draws
                ))
            })?
        };
        let (source, gamma) = source;
        let d0 = source.direction(0.0)?;
        let mut rng = stream_rng(self.config.seed, run, Stream::InitialAoa);
        let initial_aoa = perturb(&d0, self.config.initial_aoa_error_deg.to_radians(), &mut rng);
        let position0 = source.position(0.0)?;
        let noise_precision = noise_precision_for_snr(
            self.config.snr_db,
            0.0,
            &position0,
            &self.config.link,
            &self.config.array,
            &self.pilot,
        )?;
        let rho0 = channel_amplitude(0.0, &position0, &self.config.link)?;
        Ok(RunTruth {
            source,
            gamma,
            initial_aoa,
            noise_precision,
            channel_precision: self.config.channel_prior_ratio / (rho0 * rho0),
        })
    }

    fn link_setup(&self, truth: &RunTruth) -> LinkSetup {
        LinkSetup {
            hybrid: self.config.array,
            budget: self.config.link.clone(),
            pilot: self.pilot.clone(),
            noise_precision: truth.noise_precision,
        }
    }

    pub fn estimation_context(&self, truth: &RunTruth) -> EstimationContext {
        EstimationContext {
            orbit: self.orbit,
            hybrid: self.config.array,
            pilot: self.pilot.clone(),
            noise_precision: truth.noise_precision,
            channel_precision: truth.channel_precision,
        }
    }

    /// Records the frame at `t` with the beam at `pointing`, applying the
    /// obstruction window.
    pub fn record_frame<R: Rng + ?Sized>(
        &self,
        t: f64,
        pointing: &Direction,
        truth: &RunTruth,
        rng: &mut R,
    ) -> Result<SignalFrame> {
        let setup = self.link_setup(truth);
        let frame = synthesize_frame(t, &truth.source, pointing, &setup, rng)?;
        Ok(match &self.config.obstruction {
            Some(w) => obstruct(frame, (w.start, w.end), truth.noise_precision, rng),
            None => frame,
        })
    }

    /// Orbit tracker over the pass: the first two frames are steered at the
    /// initial AoA estimate, later ones at the current prediction.
    pub fn run_vmp(&self, run: usize, truth: &RunTruth) -> Result<VmpRun> {
        let times = self.vmp_times();
        let mut frames_rng = stream_rng(self.config.seed, run, Stream::VmpFrames);
        let mut abc_rng = stream_rng(self.config.seed, run, Stream::Abc);
        let first = [
            self.record_frame(times[0], &truth.initial_aoa, truth, &mut frames_rng)?,
            self.record_frame(times[1], &truth.initial_aoa, truth, &mut frames_rng)?,
        ];
        let mut tracker = VmpTracker::initialize(
            &first,
            &truth.initial_aoa,
            self.estimation_context(truth),
            self.config.vmp,
            &mut abc_rng,
        )?;
        for &t in &times[2..] {
            let pointing = tracker.predict_aoa(t)?;
            let frame = self.record_frame(t, &pointing, truth, &mut frames_rng)?;
            tracker.step(&frame)?;
        }
        Ok(VmpRun { tracker })
    }

    pub fn run_baseline(&self, run: usize, truth: &RunTruth) -> Result<Vec<BaselineRecord>> {
        let mut rng = stream_rng(self.config.seed, run, Stream::BaselineFrames);
        let sigma = self.config.initial_aoa_error_deg.to_radians().max(self.config.baseline.music.resolution_deg.to_radians());
        two_step_run(
            &truth.initial_aoa,
            sigma,
            &self.baseline_times(),
            &self.config.array,
            &self.config.baseline,
            |t, pointing| self.record_frame(t, pointing, truth, &mut rng),
        )
    }

    /// One complete run.
    pub fn run_single(&self, run: usize) -> Result<RunOutcome> {
        let truth = self.draw_truth(run)?;
        let times = self.metric_times();
        let true_dirs = times.iter().map(|&t| truth.source.direction(t)).collect::<Result<Vec<_>>>()?;

        let vmp = if self.config.methods.vmp { Some(self.run_vmp(run, &truth)?) } else { None };
        let vmp_errors = match &vmp {
            Some(v) => Some(
                times
                    .iter()
                    .zip(&true_dirs)
                    .map(|(&t, d)| Ok(angular_error(&v.estimate_at(t, &self.orbit, &truth.initial_aoa)?, d)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };

        let baseline = if self.config.methods.baseline { Some(self.run_baseline(run, &truth)?) } else { None };
        let baseline_errors = baseline.as_ref().map(|recs| {
            times
                .iter()
                .zip(&true_dirs)
                .map(|(&t, d)| {
                    let est = recs.iter().rev().find(|r| r.t <= t).map_or(truth.initial_aoa, |r| r.estimate);
                    angular_error(&est, d)
                })
                .collect()
        });

        Ok(RunOutcome { run, times, truth, vmp, vmp_errors, baseline, baseline_errors })
    }

    /// All runs in parallel, averaged per method.
    pub fn run_montecarlo(&self) -> Result<MonteCarloResult> {
        let runs = (0..self.config.runs)
            .into_par_iter()
            .map(|k| self.run_single(k))
            .collect::<Result<Vec<_>>>()?;
        let times = self.metric_times();
        let mut per_run: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for r in &runs {
            if let Some(e) = &r.vmp_errors {
                per_run.entry(VMP.into()).or_default().push(e.clone());
            }
            if let Some(e) = &r.baseline_errors {
                per_run.entry(BASELINE.into()).or_default().push(e.clone());
            }
        }
        let series = MetricSeries::aggregate(&times, &per_run)?;
        Ok(MonteCarloResult { runs, series })
    }
}

/// Rotates `d` by `angle` about a uniformly random axis perpendicular to it.
pub fn perturb<R: Rng + ?Sized>(d: &Direction, angle: f64, rng: &mut R) -> Direction {
    let (e1, e2) = d.tangent_basis();
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let axis: Vector3<f64> = e1 * phi.cos() + e2 * phi.sin();
    d.rotated(&axis, angle)
}

#[derive(Debug, Clone)]
pub struct RunTruth {
    pub source: TruthSource,
    /// Orbit parameters at t = 0, when the truth comes from the model.
    pub gamma: Option<OrbitParams>,
    pub initial_aoa: Direction,
    pub noise_precision: f64,
    pub channel_precision: f64,
}

#[derive(Debug, Clone)]
pub struct VmpRun {
    pub tracker: VmpTracker,
}

impl VmpRun {
    pub fn history(&self) -> &[StepRecord] {
        self.tracker.history()
    }

    /// AoA at `t` from the newest orbit estimate available at `t`; the
    /// initial AoA estimate before the first one.
    pub fn estimate_at(&self, t: f64, orbit: &CircularOrbit, initial: &Direction) -> Result<Direction> {
        match self.history().iter().rev().find(|r| r.t <= t) {
            Some(r) => orbit.direction(t, &r.orbit.mean),
            None => Ok(*initial),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: usize,
    /// Metric grid.
    pub times: Vec<f64>,
    pub truth: RunTruth,
    pub vmp: Option<VmpRun>,
    pub vmp_errors: Option<Vec<f64>>,
    pub baseline: Option<Vec<BaselineRecord>>,
    pub baseline_errors: Option<Vec<f64>>,
}

impl RunOutcome {
    pub fn errors(&self, method: &str) -> Option<&[f64]> {
        match method {
            VMP => self.vmp_errors.as_deref(),
            BASELINE => self.baseline_errors.as_deref(),
            _ => None,
        }
    }

    /// Error of `method` at the grid point nearest `t`.
    pub fn error_at(&self, method: &str, t: f64) -> Option<f64> {
        let errs = self.errors(method)?;
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(errs[i])
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub runs: Vec<RunOutcome>,
    pub series: MetricSeries,
}
