//! Density-matrix simulation of dual-state purification and tomography
//! purification for quantum error mitigation.
//!
//! Qubit 0 is the most significant bit of every basis index, and character
//! `i` of a Pauli string acts on qubit `i`. Ancilla qubits are appended after
//! the register.

pub mod basis;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod purify;
pub mod sim;

pub use circuit::{Circuit, Gate, ParametricCircuit};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances, C64};
pub use noise::{KrausChannel, NoiseModel};
pub use pauli::{Observable, PauliString};
pub use sim::DensityMatrix;
