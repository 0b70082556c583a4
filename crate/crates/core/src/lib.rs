//! Kinetic and kinetic-diffusion Monte Carlo (KDMC) simulation of neutral
//! particles in a 2D slab with absorbing boundaries.
//!
//! Particles stream freely between charge-exchange collisions with a BGK
//! background: at each collision the velocity is resampled from a local
//! Maxwellian. The kinetic integrator resolves every collision; the KDMC
//! integrator takes one kinetic flight per time step and replaces the
//! remainder of the step with a normally distributed positional increment
//! whose mean and covariance are those of the exact collisional process.
//!
//! Modules, bottom-up:
//!
//! - [`model`]: vectors, particles, domains, Maxwellians and backgrounds.
//! - [`rng`]: per-particle deterministic random streams.
//! - [`sampling`]: stochastic kernels, including the diffusive increment.
//! - [`transport`]: the kinetic and KDMC trajectory integrators.
//! - [`tally`]: final-position histograms and their 1D reductions.
//! - [`harness`]: parallel runner, convergence sweeps and order fits.

pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod tally;
pub mod transport;

pub use error::{Error, Result};
pub use model::{Background, Domain, Maxwellian, Particle, Vec2};
pub use rng::{derive_stream, RngStream};
