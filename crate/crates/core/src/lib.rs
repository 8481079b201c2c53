//! Subsystem surface code with three-qubit checks.
//!
//! Construction of the codes, Pauli-frame simulation of syndrome readout under
//! three noise models, decoding-graph construction, exact minimum-weight
//! perfect matching, Monte Carlo threshold estimation and the spectrum of the
//! associated gauge Hamiltonian.

pub mod blossom;
pub mod circuit;
pub mod code;
pub mod decoder;
pub mod error;
pub mod fit;
pub mod hamiltonian;
pub mod lattice;
pub mod montecarlo;
pub mod noise;
pub mod pauli;
pub mod schedule;

pub use code::{build, distance_bruteforce, validate_code, Geometry, PauliKind, Sector, SubsystemCode};
pub use error::{Error, Result};
pub use pauli::{in_span, Pauli, PauliOperator};
