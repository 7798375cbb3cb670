//! `leotrack`: simulate LEO passes, track them with the orbit-based
//! estimator and the two-step baseline, and write CSV results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leotrack::baseline::{baseline_csv, two_step_run};
use leotrack::harness::io::{
    abc_csv, ci_orbits_csv, gnuplot_script, runs_csv, write_metrics, write_text, SimulationMeta,
};
use leotrack::harness::{
    angular_error, stream_rng, MetricSeries, ObstructionWindow, RunTruth, Scenario, ScenarioConfig, Stream,
    BASELINE, VMP,
};
use leotrack::signal::{load_frames, save_frames, SignalFrame, Trajectory, TruthSource};
use leotrack::vmp::{abc_sample, sample_ci_orbits, EstimationContext, VmpTracker};
use leotrack::{Direction, Error, Result};

const TRUTH_FILE: &str = "trajectory.csv";
const META_FILE: &str = "simulation.toml";
const VMP_FRAMES: &str = "frames_vmp.bin";
const BASELINE_FRAMES: &str = "frames_baseline.bin";
const CI_LEVEL: f64 = 0.95;
const CI_COUNT: usize = 100;

#[derive(Parser)]
#[command(name = "leotrack", version, about = "LEO satellite orbit estimation and beam tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a pass and record frames for both trackers, beam on the truth.
    Simulate(Common),
    /// Run the orbit tracker on recorded frames.
    Estimate(Offline),
    /// Run the two-step baseline on recorded frames.
    Baseline(Offline),
    /// Full closed-loop Monte Carlo experiment.
    Montecarlo(Common),
    /// Dump the ABC initialisation samples of the first run.
    Abc(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML); defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Noise-only frames between T0 and T1 seconds.
    #[arg(long, value_name = "T0:T1")]
    obstruct: Option<String>,
    #[arg(long)]
    window_rho: Option<f64>,
    /// Ground-truth trajectory file replacing the orbit model.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args, Clone)]
struct Offline {
    #[command(flatten)]
    common: Common,
    /// Directory written by `simulate`.
    #[arg(long)]
    input: PathBuf,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.snr_db {
            cfg.snr_db = v;
        }
        if let Some(w) = &self.obstruct {
            cfg.obstruction = Some(ObstructionWindow::parse(w)?);
        }
        if let Some(v) = self.window_rho {
            cfg.vmp.window.rho = v;
        }
        if let Some(p) = &self.trajectory {
            cfg.orbit.trajectory = Some(p.clone());
            cfg.orbit.params = None;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        Scenario::new(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Estimate(o) => estimate(o),
        Command::Baseline(o) => baseline(o),
        Command::Montecarlo(c) => montecarlo(c),
        Command::Abc(c) => abc(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn simulate(c: &Common) -> Result<()> {
    let scenario = c.scenario()?;
    let truth = scenario.draw_truth(0)?;
    let seed = scenario.config.seed;
    let record = |times: Vec<f64>, stream: Stream| -> Result<Vec<SignalFrame>> {
        let mut rng = stream_rng(seed, 0, stream);
        times
            .into_iter()
            .map(|t| scenario.record_frame(t, &truth.source.direction(t)?, &truth, &mut rng))
            .collect()
    };
    save_frames(&c.out.join(VMP_FRAMES), &record(scenario.vmp_times(), Stream::VmpFrames)?)?;
    save_frames(&c.out.join(BASELINE_FRAMES), &record(scenario.baseline_times(), Stream::BaselineFrames)?)?;
    let track = Trajectory::new(
        scenario
            .config
            .grid(1.0)
            .into_iter()
            .map(|t| Ok((t, truth.source.position(t)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    write_text(&c.out.join(TRUTH_FILE), &track.to_csv())?;
    let v = truth.initial_aoa.as_vector();
    SimulationMeta {
        noise_precision: truth.noise_precision,
        channel_precision: truth.channel_precision,
        initial_aoa: [v.x, v.y, v.z],
    }
    .save(&c.out.join(META_FILE))?;
    println!("wrote {} and {} to {}", VMP_FRAMES, BASELINE_FRAMES, c.out.display());
    Ok(())
}

/// Recorded frames, metadata and (when present) the truth of a simulation
/// directory.
struct Recording {
    frames: Vec<SignalFrame>,
    meta: SimulationMeta,
    truth: Option<TruthSource>,
}

fn load_recording(dir: &Path, frames_file: &str) -> Result<Recording> {
    let frames = load_frames(&dir.join(frames_file))?;
    if frames.is_empty() {
        return Err(Error::Config(format!("{} holds no frames", dir.join(frames_file).display())));
    }
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() { Some(TruthSource::Trajectory(Trajectory::load(&truth_path)?)) } else { None };
    Ok(Recording { frames, meta: SimulationMeta::load(&dir.join(META_FILE))?, truth })
}

/// Metric series of a single run with estimates `est` at `times`.
fn single_run_metrics(method: &str, times: &[f64], est: &[Direction], truth: &TruthSource) -> Result<MetricSeries> {
    let errs = times
        .iter()
        .zip(est)
        .map(|(&t, d)| Ok(angular_error(d, &truth.direction(t)?)))
        .collect::<Result<Vec<_>>>()?;
    MetricSeries::aggregate(times, &[(method.to_string(), vec![errs])].into_iter().collect())
}

fn estimate(o: &Offline) -> Result<()> {
    let scenario = o.common.scenario()?;
    let rec = load_recording(&o.input, VMP_FRAMES)?;
    if rec.frames.len() < 2 {
        return Err(Error::Config("estimation needs at least two frames".into()));
    }
    let ctx = EstimationContext {
        orbit: scenario.orbit,
        hybrid: scenario.config.array,
        pilot: scenario.pilot.clone(),
        noise_precision: rec.meta.noise_precision,
        channel_precision: rec.meta.channel_precision,
    };
    let seed = scenario.config.seed;
    let mut tracker = VmpTracker::initialize(
        &rec.frames[..2],
        &rec.meta.initial_direction()?,
        ctx,
        scenario.config.vmp,
        &mut stream_rng(seed, 0, Stream::Abc),
    )?;
    for f in &rec.frames[2..] {
        tracker.step(f)?;
    }
    let out = &o.common.out;
    write_text(&out.join("vmp_history.csv"), &tracker.history_csv())?;
    let times: Vec<f64> = tracker.history().iter().map(|r| r.t).collect();
    let est = tracker
        .history()
        .iter()
        .map(|r| scenario.orbit.direction(r.t, &r.orbit.mean))
        .collect::<Result<Vec<_>>>()?;
    let ci = sample_ci_orbits(tracker.orbit(), CI_LEVEL, CI_COUNT, &mut stream_rng(seed, 0, Stream::Confidence))?;
    write_text(&out.join("ci_orbits.csv"), &ci_orbits_csv(&scenario.orbit, &ci, &scenario.metric_times()))?;
    if let Some(truth) = &rec.truth {
        write_metrics(&out.join("metrics.csv"), &single_run_metrics(VMP, &times, &est, truth)?)?;
    }
    let last = tracker.history().last().expect("initialised tracker has a record");
    println!(
        "final orbit alpha={:.6} beta={:.6} eta0={:.6} after {} frames",
        last.orbit.mean.alpha,
        last.orbit.mean.beta,
        last.orbit.mean.eta0,
        tracker.frames().len()
    );
    Ok(())
}

fn baseline(o: &Offline) -> Result<()> {
    let scenario = o.common.scenario()?;
    let rec = load_recording(&o.input, BASELINE_FRAMES)?;
    let times: Vec<f64> = rec.frames.iter().map(|f| f.t).collect();
    let initial = rec.meta.initial_direction()?;
    let sigma = scenario.config.initial_aoa_error_deg.to_radians().max(1e-3);
    let mut frames = rec.frames.iter();
    let records = two_step_run(&initial, sigma, &times, &scenario.config.array, &scenario.config.baseline, |_, _| {
        frames.next().cloned().ok_or_else(|| Error::Config("ran out of recorded frames".into()))
    })?;
    let est: Vec<Direction> = records.iter().map(|r| r.estimate).collect();
    let out = &o.common.out;
    match &rec.truth {
        Some(truth) => {
            let truth_dirs = times.iter().map(|&t| truth.direction(t)).collect::<Result<Vec<_>>>()?;
            write_text(&out.join("baseline_history.csv"), &baseline_csv(&records, &truth_dirs))?;
            write_metrics(&out.join("metrics.csv"), &single_run_metrics(BASELINE, &times, &est, truth)?)?;
        }
        None => write_text(&out.join("baseline_history.csv"), &baseline_csv(&records, &est))?,
    }
    println!("tracked {} frames", records.len());
    Ok(())
}

fn montecarlo(c: &Common) -> Result<()> {
    let scenario = c.scenario()?;
    let result = scenario.run_montecarlo()?;
    write_metrics(&c.out.join("metrics.csv"), &result.series)?;
    write_text(&c.out.join("runs.csv"), &runs_csv(&result.runs))?;
    write_text(&c.out.join("scenario.toml"), &scenario.config.to_toml())?;
    let methods: Vec<&str> = [VMP, BASELINE].into_iter().filter(|m| !result.series.method(m).is_empty()).collect();
    write_text(&c.out.join("metrics.gp"), &gnuplot_script("metrics.csv", &methods, "metrics.png"))?;
    if let Some(run) = result.runs.first().and_then(|r| r.vmp.as_ref()) {
        let ci = sample_ci_orbits(
            run.tracker.orbit(),
            CI_LEVEL,
            CI_COUNT,
            &mut stream_rng(scenario.config.seed, 0, Stream::Confidence),
        )?;
        write_text(&c.out.join("ci_orbits.csv"), &ci_orbits_csv(&scenario.orbit, &ci, &scenario.metric_times()))?;
    }
    for m in &methods {
        let series = result.series.method(m);
        if let Some((t, e)) = series.last() {
            println!("{m}: A_e({t} s) = {e:.4} deg over {} runs", scenario.config.runs);
        }
    }
    Ok(())
}

fn abc(c: &Common) -> Result<()> {
    let scenario = c.scenario()?;
    let truth: RunTruth = scenario.draw_truth(0)?;
    let samples = abc_sample(
        &truth.initial_aoa,
        &scenario.orbit,
        &scenario.config.vmp.abc,
        &mut stream_rng(scenario.config.seed, 0, Stream::Abc),
    )?;
    write_text(&c.out.join("abc.csv"), &abc_csv(&samples))?;
    println!("kept {} samples", samples.len());
    Ok(())
}
