//! Variational orbit tracker.
//!
//! The posterior over the orbit parameters `Γ` and the per-frame channel
//! gains `h_n` is approximated by a product of a Gaussian in `Γ` and complex
//! Gaussians in each `h_n`. The channel factors have closed-form updates;
//! the orbit factor is a Laplace approximation at the mode of `ln q(Γ)`,
//! found with a simplex search seeded by rejection sampling.

pub mod abc;
pub mod channel;
pub mod kde;
pub mod laplace;
pub mod objective;
pub mod simplex;
pub mod tracker;

pub use abc::{abc_sample, AbcConfig, AbcSample};
pub use channel::{update_channel, ChannelSurrogate, EstimationContext, FrameStatistics, OrbitSurrogate};
pub use kde::{kde_log_density, KdePrior};
pub use laplace::laplace_covariance;
pub use objective::{log_q_gamma, ChannelMode, CrossTerm, LogQ, WindowConfig};
pub use simplex::{optimize_gamma, SimplexConfig};
pub use tracker::{predict_aoa, sample_ci_orbits, InitChannel, StepRecord, VmpConfig, VmpTracker};
