//! Joint orbit estimation and beam tracking of a LEO satellite from a ground
//! station with a partially-connected hybrid antenna array.
//!
//! The crate is organised bottom-up:
//!
//! - [`orbit`]: circular-orbit geometry seen from the ground station.
//! - [`array`]: uniform planar array steering, hybrid combining and the
//!   noiseless beamformed template.
//! - [`link`]: link budget and stochastic channel draws.
//! - [`signal`]: received-frame synthesis, pilots, obstruction and external
//!   trajectories.
//! - [`vmp`]: the variational estimator (ABC initialisation, KDE prior,
//!   channel and orbit surrogate updates, tracking loop).
//! - [`baseline`]: MUSIC angle estimation followed by a Kalman filter.
//! - [`harness`]: scenario configuration, Monte Carlo experiments and result
//!   files.

pub mod array;
pub mod baseline;
pub mod error;
pub mod harness;
pub mod link;
pub mod orbit;
pub mod signal;
pub mod vmp;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use orbit::{CircularOrbit, Direction, OrbitParams, Position};
