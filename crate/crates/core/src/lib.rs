//! Coherent backscattering of light by a dilute slab of weakly saturated
//! two-level atoms, to first order in the saturation parameter.
//!
//! Detunings are measured in units of the natural linewidth and lengths in
//! units of the linear mean free path at the laser frequency.

pub mod atom;
pub mod bistatic;
pub mod dipole;
pub mod error;
pub mod expint;
pub mod mc;
pub mod quad;
pub mod slab;
pub mod stats;

pub use atom::{Channel, ComplexAmplitude, Detuning, MediumParams, SpectrumSampler};
pub use error::{Error, ParamError, Result, SolveError};
pub use stats::McEstimate;
