//! Collective-spin fluctuations and variance-based entanglement witnesses
//! for ideal spin-1/2 Bose and Fermi gases.
//!
//! The building blocks, bottom up:
//!
//! - [`spectra`]: single-particle levels for a free-space grid, a
//!   continuum density of states, a harmonic trap and a square lattice.
//! - [`occupancy`]: Bose/Fermi occupations, particle numbers and the
//!   field that produces a given polarization.
//! - [`moments`]: closed-form collective-spin variances and the three
//!   separability inequalities, singlet parameter and singlet fraction.
//! - [`number_resolved`]: exact particle-number distributions of Bose
//!   gases, for evaluating the inequalities without the mean-N replacement.
//! - [`sweep`]: singlet-fraction maps and threshold temperatures.
//! - [`lattice`]: real-space spin correlations, structure factor and the
//!   staggered quantum Fisher information on the square lattice.
//! - [`oracle`]: exact Fock-space enumeration for a few modes.
//! - [`config`] and [`runner`]: the batch front end.

pub mod config;
pub mod error;
pub mod lattice;
pub mod moments;
pub mod number_resolved;
pub mod occupancy;
pub mod oracle;
pub mod output;
pub mod quadrature;
pub mod rng;
pub mod runner;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
