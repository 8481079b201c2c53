//! Stochastic error models and their samplers.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Fault, FaultKind, Program};
use crate::code::{PauliKind, SubsystemCode};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseVariant {
    /// Independent bit and phase flips on code qubits, perfect syndromes.
    CodeCapacity,
    /// Noisy CNOTs, measurements and preparations in the scheduled circuit.
    #[serde(rename = "circuit")]
    CircuitBased,
    /// Noisy direct three-qubit parity measurements.
    DirectParity,
}

impl fmt::Display for NoiseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseVariant::CodeCapacity => "code-capacity",
            NoiseVariant::CircuitBased => "circuit",
            NoiseVariant::DirectParity => "direct-parity",
        })
    }
}

impl std::str::FromStr for NoiseVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-capacity" => Ok(NoiseVariant::CodeCapacity),
            "circuit" => Ok(NoiseVariant::CircuitBased),
            "direct-parity" => Ok(NoiseVariant::DirectParity),
            _ => Err(Error::InvalidArgument(format!("unknown noise model '{s}'"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub variant: NoiseVariant,
    pub p: f64,
}

impl NoiseModel {
    pub fn new(variant: NoiseVariant, p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::InvalidArgument(format!("error rate {p} outside [0, 0.5]")));
        }
        Ok(NoiseModel { variant, p })
    }
}

/// Decides fault occurrence at a stream of locations that all fail with the
/// same probability, drawing one random number per fault rather than per location.
#[derive(Clone, Debug)]
pub struct FaultClock {
    ln_q: f64,
    remaining: u64,
}

impl FaultClock {
    pub fn new<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Self {
        let mut clock = FaultClock {
            ln_q: (1.0 - p).ln(),
            remaining: 0,
        };
        clock.remaining = clock.gap(rng);
        clock
    }

    fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.ln_q == 0.0 {
            return u64::MAX;
        }
        if self.ln_q == f64::NEG_INFINITY {
            return 0;
        }
        // number of clean locations before the next fault
        let u: f64 = 1.0 - rng.gen::<f64>();
        let g = (u.ln() / self.ln_q).floor();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }

    /// Advances one location; true if it is faulty.
    #[inline]
    pub fn tick<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.remaining > 0 {
            if self.remaining != u64::MAX {
                self.remaining -= 1;
            }
            false
        } else {
            self.remaining = self.gap(rng);
            true
        }
    }
}

/// Independent errors of the given kind on each code qubit with probability `p`.
pub fn sample_code_capacity<R: Rng + ?Sized>(
    code: &SubsystemCode,
    kind: PauliKind,
    p: f64,
    rng: &mut R,
) -> PauliOperator {
    let n = code.n_qubits();
    let mut clock = FaultClock::new(p, rng);
    let mut e = PauliOperator::identity(n);
    for q in 0..n {
        if clock.tick(rng) {
            match kind {
                PauliKind::X => e.toggle_x(q),
                PauliKind::Z => e.toggle_z(q),
            }
        }
    }
    e
}

/// Faults of one 4-round period of the scheduled circuit on the whole lattice.
/// Gate faults carry a uniformly drawn two-qubit Pauli, identity included.
pub fn sample_circuit_fault_layer<R: Rng + ?Sized>(program: &Program, p: f64, rng: &mut R) -> Vec<Fault> {
    let mut clock = FaultClock::new(p, rng);
    let mut out = Vec::new();
    for round in 0..program.period() {
        for loc in program.locations(round) {
            if clock.tick(rng) {
                let pauli = match loc.kind {
                    FaultKind::Gate => rng.gen_range(0..16u8),
                    FaultKind::ParityData => rng.gen_range(0..64u8),
                    _ => 0,
                };
                out.push(Fault {
                    kind: loc.kind,
                    round,
                    op: loc.op as usize,
                    pauli,
                });
            }
        }
    }
    out
}

/// One direct parity measurement's noise: an outcome flip with probability `p`
/// and, independently with probability `p`, a uniform three-qubit Pauli.
pub fn sample_direct_parity_fault<R: Rng + ?Sized>(p: f64, rng: &mut R) -> (bool, [Pauli; 3]) {
    let flip = rng.gen::<f64>() < p;
    let mut paulis = [Pauli::I; 3];
    if rng.gen::<f64>() < p {
        let draw: u8 = rng.gen_range(0..64);
        for (j, slot) in paulis.iter_mut().enumerate() {
            *slot = pauli_from_bits(draw >> j & 1 == 1, draw >> (j + 3) & 1 == 1);
        }
    }
    (flip, paulis)
}

pub fn pauli_from_bits(x: bool, z: bool) -> Pauli {
    match (x, z) {
        (false, false) => Pauli::I,
        (true, false) => Pauli::X,
        (false, true) => Pauli::Z,
        (true, true) => Pauli::Y,
    }
}
