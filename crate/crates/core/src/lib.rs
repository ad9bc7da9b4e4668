//! Cooling limits for a qubit channel through an incoherent many-qubit
//! environment.
//!
//! The crate evaluates when a channel that randomly swaps the transmitted
//! qubit for thermal environment qubits still preserves entanglement, both
//! unconditionally and when an auxiliary environment output is projected to
//! herald the R–A pair. Closed-form boundaries are cross-checked against PPT
//! spectra, and a photon-level Monte Carlo plus simulated tomography
//! reproduce the beam-splitter experiment that realises the channel.

pub mod channel;
pub mod entanglement;
pub mod error;
pub mod limits;
pub mod photonics;
pub mod qmat;
pub mod tomography;

pub mod cli;

pub use error::{Error, Result};
