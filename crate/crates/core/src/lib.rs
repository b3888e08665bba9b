//! Delay-Doppler polarimetry simulation.
//!
//! Zak-OTFS pulsones and their GDAFT spread carriers are transmitted on
//! orthogonal polarizations so that all four polarimetric channel
//! components can be read from one frame by cross-ambiguity. Sequential
//! FMCW and Zadoff-Chu phase-coded systems are provided as baselines, along
//! with the Monte Carlo machinery that compares them.

pub mod ambiguity;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod numtheory;
pub mod params;
pub mod types;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{GdaftParams, ZakParams};
pub use types::{ComplexFrame, DDSurface, Pol, PolPair, PolPath, SupportBox, SupportSet};
