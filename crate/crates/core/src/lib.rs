//! Simulation and calibration toolkit for near-field microwave addressing of
//! trapped-ion hyperfine qubits in a multi-zone surface trap.
//!
//! The crate models the ⁴³Ca⁺ ground-level hyperfine structure, the
//! eight-electrode two-zone microwave field network, full 16-level rotating
//! frame dynamics with projection-noise readout, the crosstalk / polarization
//! nulling procedures, and the resulting addressing error budget.
//!
//! Frequencies are ordinary frequencies in Hz throughout; the 2π enters only
//! inside the propagator and the Rabi formula.

pub mod atomic;
pub mod budget;
pub mod calibration;
pub mod dynamics;
pub mod error;
pub mod field;
pub(crate) mod rng;
pub mod scenario;

pub mod cli;

pub use error::{Error, Result};

/// Complex double, the scalar used for fields, amplitudes and Hamiltonians.
pub type C64 = num_complex::Complex64;
