//! Firing maps of periodically driven linear integrate-and-fire models.
//!
//! The models are `x' = -sigma * x + f(t)` with threshold 1 and reset 0, where
//! `f` is a 1-periodic input current. `sigma > 0` is the leaky integrator and
//! `sigma = 0` the perfect integrator. The firing map sends a reset time to the
//! next threshold crossing; under the supported regimes it is the lift of a
//! degree-one circle map, so the usual circle-map machinery applies: rotation
//! numbers, phase locking, invariant measures and the distribution of
//! interspike intervals.
//!
//! Modules:
//! - [`signal`]: periodic input currents with exact integrals.
//! - [`firing`]: the firing map, its iterates and its derivative.
//! - [`rotation`]: rotation numbers, conjugacies, locking detection, scans.
//! - [`isidist`]: interspike-interval sequences and distributions.
//! - [`cli`]: the `ifmap` command-line front end.

// negated comparisons are used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod firing;
pub mod isidist;
pub mod rotation;
pub mod signal;
mod solve;

pub use error::{Error, Result};
pub use firing::{IFSystem, Orbit, Regime};
pub use rotation::{LockingConfig, LockingResult, RotationEstimate, RotationMethod};
pub use signal::{EssentialBounds, PeriodicSignal, SignalSpec};
