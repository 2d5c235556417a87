//! Simulation and analysis toolkit for a transmon qubit coupled to
//! high-Q nanomechanical oscillators and two-level-system defects.
//!
//! Everything works in SI units with ħ = 1 inside Hamiltonians, so
//! energies are angular frequencies in rad/s.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod fitkit;
pub mod model;
pub mod noisekit;
pub mod qops;
pub mod seed;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
