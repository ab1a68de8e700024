//! Cooling dynamics of a laser-driven optomechanical system in the strong
//! coupling regime: exact second-order-moment evolution, rotating-wave and
//! zero-temperature closed forms, frequency-matching optimization, parameter
//! sweeps, and a truncated-Fock-space master-equation verifier.
//!
//! All rates are dimensionless in units of the mechanical frequency
//! `omega_m`; times are in units of `1/omega_m`.

pub mod algebra;
pub mod error;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod params;
pub mod rwa;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{DriveParams, SteadyState, SystemParams};
