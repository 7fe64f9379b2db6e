//! Computational tools for orbits without time averages.
//!
//! The crate is organised bottom-up:
//!
//! * [`symbolic`]: topological Markov chains, words, cylinders, periodic
//!   orbit enumeration and codings of sequences into `[0, 1]`.
//! * [`orbit`]: the explicit construction of a wild historic sequence and
//!   finite-horizon checks of its visit bounds.
//! * [`frequency`]: Birkhoff sums, exact visit frequencies, traces and
//!   tail oscillation estimates.
//! * [`eta`]: the Method-II measure built from the limsup visit frequency,
//!   evaluated on cylinders.
//! * [`bowen`]: the sojourn-time model of an attracting heteroclinic cycle.
//! * [`markov`]: finite Markov measures, ergodic components and the
//!   decomposition / physicality demonstrations.
//! * [`cesaro`]: higher-order Cesàro and Hölder means.
//! * [`intro`]: the block-schedule orbit with oscillating frequencies.

pub mod bowen;
pub mod cesaro;
pub mod error;
pub mod eta;
pub mod frequency;
pub mod intro;
pub mod markov;
pub mod orbit;
pub mod symbolic;

pub use error::{Error, Result};
