//! Numerical core for certifying that a quantum channel is not
//! k-Schmidt-number-breaking, by simulating a semi-quantum signaling game
//! whose payoff is negative only for channels that preserve entanglement of
//! dimension larger than k.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs; randomized routines take an explicit seed.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channels;
pub mod circuit;
pub mod decomposition;
pub mod error;
pub mod game;
pub mod linalg;
pub mod random;
pub mod witnesses;

pub use num_complex::Complex64 as C64;

pub use channels::{ChoiOperator, KrausChannel, QuantumMap};
pub use decomposition::{ProductDecomposition, StateBasis};
pub use error::{Error, Result};
pub use game::{GameResult, GameSpec, MeasurementModel, Mode, Verdict};
pub use linalg::{ComplexMatrix, DimSpec, RealMatrix};
pub use witnesses::{Witness, WitnessKind};

