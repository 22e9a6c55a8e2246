//! Piezoelectric photon-to-phonon loss in superconducting circuits.
//!
//! Closed-form loss tangents for substrates, interfaces and junctions; two
//! independent evaluators of the general dissipation integral over layered
//! stacks; participation-ratio T1 budgets and microstrip interference
//! spectra.

pub mod cli;
pub mod constants;
pub mod device;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod materials;
pub mod units;

pub use error::{Error, Result};
