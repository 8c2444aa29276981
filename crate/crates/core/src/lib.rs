//! Simulation and verification toolkit for the (s,v)-interference problem on
//! Poisson-deployed sensors.
//!
//! Sensors start at the arrival times of a Poisson process (or, in `d`
//! dimensions, on the grid spanned by `d` independent Poisson processes) and
//! must be moved so that consecutive sensors end up between `s` and `v` apart.
//! Moving a sensor a distance `m` costs `|m|^a`.
//!
//! * [`combinatorics`]: exact Stirling / second-order Eulerian numbers and the
//!   finite-difference identities behind the exact expectation.
//! * [`gamma_analytics`]: Gamma arrival densities, tail and truncated moments,
//!   and the exact expected cost of the anchored equal-spacing algorithm.
//! * [`deployment`]: seeded, reproducible sensor deployments.
//! * [`algorithms`]: the four displacement algorithms and the cost metrics.
//! * [`experiments`]: Monte Carlo estimation, log-log slope fits and regime checks.
//! * [`verification`]: the acceptance suite shared by the CLI and tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod combinatorics;
pub mod deployment;
mod error;
pub mod experiments;
pub mod gamma_analytics;
pub mod verification;

pub use error::{Error, Result};
