//! Transmit-power minimization for an analog-beamforming power beacon with
//! movable antennas.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: the movable region, antenna layouts (free, uniformly
//!   spaced, fixed ULA/URA), aperture and near-field tests, device sampling.
//! - [`channel`]: line-of-sight near-field channel synthesis and received
//!   power under a constant-modulus analog precoder.
//! - [`precoder`]: the max-min semidefinite relaxation, Gaussian
//!   randomization, the single-device closed form and a brute-force oracle.
//! - [`sgpso`]: the SDP-guided particle swarm over antenna geometry.
//! - [`experiments`]: seeded Monte-Carlo sweeps, CSV/JSON persistence.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod precoder;
pub mod rng;
pub mod sgpso;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
