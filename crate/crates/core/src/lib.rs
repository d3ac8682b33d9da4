//! Simulation and key-rate analysis for the measurement-device-independent
//! SARG04 quantum key distribution protocol.
//!
//! The crate is split along the physical layers of the problem:
//!
//! * [`qubit`] - exact two- and four-dimensional linear algebra for the
//!   protocol's rotation, filtering and Bell-measurement operators.
//! * [`protocol`] - Monte Carlo simulation of the entanglement-based and the
//!   measurement-device-independent rounds, with exact enumeration of the
//!   expected sift rate and error rate.
//! * [`optics`] - a photon-number-resolved model of the relay's beam splitter,
//!   polarization analyzers and threshold detectors.
//! * [`keyrate`] - the asymptotic secret key rate and its ingredients.
//! * [`sweep`] - distance sweeps, cutoff search, intensity optimization and
//!   the parameter studies driven by the `sarg-sweep` binary.
//!
//! Polarization convention: the computational basis state `|0⟩` is the
//! horizontal polarization `|→⟩` and `|1⟩` is vertical `|↑⟩`. Linear
//! polarization at angle `θ` is `cos θ |0⟩ + sin θ |1⟩`, so the rotation `R`
//! turns a polarization by +45°. The relay analyzes at ±45°.

pub mod error;
pub mod keyrate;
pub mod optics;
pub mod protocol;
pub mod qubit;
pub mod sweep;

pub use error::{Error, Result};
