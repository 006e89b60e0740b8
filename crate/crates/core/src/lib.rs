//! Floquet spectra, singlet-doublet crossings and dissipative Floquet–Markov
//! dynamics of a harmonically driven quartic double well.

pub mod basis;
pub mod classical;
pub mod dissipation;
pub mod error;
pub mod export;
pub mod floquet;
pub mod linalg;
pub mod params;
pub mod signal;
pub mod three_state;
pub mod tunneling;

pub use error::{Error, Result};
pub use params::{BathParams, Parity, SystemParams};
