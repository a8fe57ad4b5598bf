//! Certification and structure-preserving simulation of one-dimensional
//! linear port-Hamiltonian systems made of conservation-law segments coupled
//! at stationary resistive interfaces.

pub mod certify;
pub mod error;
pub mod matrices;
pub mod ports;
pub mod presets;
pub mod system;
pub mod simulate;
pub mod transform;

pub use error::{Error, Result};
