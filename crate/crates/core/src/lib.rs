//! Cavity-Purcell-enhanced single-photon emission from diamond color centers
//! (NV, NE8, SiV) and BB84 key-rate modeling for fiber, terrestrial and
//! satellite links.
//!
//! The crate is split along the physics:
//!
//! * [`quantum`] builds the center/cavity/waveguide operators and integrates
//!   the Lindblad master equation through one excitation cycle.
//! * [`emitter`] holds the closed-form emitter and cavity relations.
//! * [`trajectory`] unravels the same master equation into quantum jumps and
//!   builds HBT coincidence histograms.
//! * [`channel`] computes link budgets and per-pulse noise.
//! * [`qkd`] evaluates secure key rates and loss cutoffs.

pub mod channel;
pub mod constants;
pub mod emitter;
mod error;
pub mod qkd;
pub mod quantum;
pub mod trajectory;

pub use error::{Error, Result};

/// Complex scalar used throughout the quantum modules.
pub type C64 = num_complex::Complex64;
