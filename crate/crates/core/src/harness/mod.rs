//! Scenario files, Monte Carlo runs and result output.

pub mod config;
pub mod io;
pub mod metrics;
pub mod montecarlo;

pub use config::{CadenceConfig, MethodsConfig, ObstructionWindow, OrbitConfig, PilotConfig, ScenarioConfig};
pub use metrics::{angular_error, median, MetricRow, MetricSeries, METRIC_HEADER};
pub use montecarlo::{perturb, stream_rng, MonteCarloResult, RunOutcome, RunTruth, Scenario, Stream, VmpRun, BASELINE, VMP};
