//! Phaseless Pauli operators in binary symplectic form.
//!
//! An n-qubit Pauli is stored as two packed bit vectors (`x` and `z`). Global
//! phases are dropped; only the symplectic part matters for syndromes,
//! cosets and homology classes.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Sparse n-qubit Pauli operator without phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n_qubits: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

/// Single-qubit Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl PauliOperator {
    pub fn identity(n_qubits: usize) -> Self {
        let w = words_for(n_qubits);
        PauliOperator {
            n_qubits,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    /// X on every listed qubit. Repeated indices cancel.
    pub fn x_on<I: IntoIterator<Item = usize>>(n_qubits: usize, qubits: I) -> Self {
        let mut p = Self::identity(n_qubits);
        for q in qubits {
            p.toggle_x(q);
        }
        p
    }

    /// Z on every listed qubit. Repeated indices cancel.
    pub fn z_on<I: IntoIterator<Item = usize>>(n_qubits: usize, qubits: I) -> Self {
        let mut p = Self::identity(n_qubits);
        for q in qubits {
            p.toggle_z(q);
        }
        p
    }

    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        check_index(qubit, n_qubits)?;
        let mut p = Self::identity(n_qubits);
        p.set(qubit, pauli);
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, q: usize) -> Pauli {
        match (self.has_x(q), self.has_z(q)) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn set(&mut self, q: usize, pauli: Pauli) {
        let (xb, zb) = match pauli {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        };
        let (w, b) = (q / WORD, 1u64 << (q % WORD));
        if xb {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if zb {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    #[inline]
    pub fn has_x(&self, q: usize) -> bool {
        self.x[q / WORD] >> (q % WORD) & 1 == 1
    }

    #[inline]
    pub fn has_z(&self, q: usize) -> bool {
        self.z[q / WORD] >> (q % WORD) & 1 == 1
    }

    #[inline]
    pub fn toggle_x(&mut self, q: usize) {
        self.x[q / WORD] ^= 1u64 << (q % WORD);
    }

    #[inline]
    pub fn toggle_z(&mut self, q: usize) {
        self.z[q / WORD] ^= 1u64 << (q % WORD);
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// True when the operator has no Z component.
    pub fn is_x_type(&self) -> bool {
        self.z.iter().all(|&w| w == 0)
    }

    /// True when the operator has no X component.
    pub fn is_z_type(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    pub fn x_support(&self) -> Vec<usize> {
        support(&self.x)
    }

    pub fn z_support(&self) -> Vec<usize> {
        support(&self.z)
    }

    /// Qubits on which the operator acts non-trivially, ascending.
    pub fn support(&self) -> Vec<usize> {
        let merged: Vec<u64> = self.x.iter().zip(&self.z).map(|(a, b)| a | b).collect();
        support(&merged)
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Phaseless product: componentwise XOR of the x and z parts.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.mul_assign(other)?;
        Ok(out)
    }

    pub fn mul_assign(&mut self, other: &Self) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
        Ok(())
    }

    /// Symplectic form `<a.x, b.z> + <a.z, b.x> mod 2`, as a bool (true = anticommute).
    pub fn anticommutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & other.z[i]).count_ones() & 1;
            acc ^= (self.z[i] & other.x[i]).count_ones() & 1;
        }
        Ok(acc == 1)
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        Ok(!self.anticommutes(other)?)
    }

    /// Heisenberg update by CNOT(control -> target): X_c -> X_c X_t, Z_t -> Z_c Z_t.
    pub fn conjugate_by_cnot(&self, control: usize, target: usize) -> Result<Self> {
        let mut out = self.clone();
        out.apply_cnot(control, target)?;
        Ok(out)
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        check_index(control, self.n_qubits)?;
        check_index(target, self.n_qubits)?;
        if control == target {
            return Err(Error::InvalidArgument(format!(
                "CNOT control and target coincide ({control})"
            )));
        }
        if self.has_x(control) {
            self.toggle_x(target);
        }
        if self.has_z(target) {
            self.toggle_z(control);
        }
        Ok(())
    }

    /// Concatenated `x | z` bit vector used by the GF(2) routines.
    fn symplectic_vector(&self) -> Vec<u64> {
        let mut v = Vec::with_capacity(2 * self.x.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.z);
        v
    }

    /// Parse the sparse text form (`+X1 X5 Z7`, `Y3`, `+I`).
    pub fn parse_sparse(n_qubits: usize, text: &str) -> Result<Self> {
        let mut p = Self::identity(n_qubits);
        let body = text.trim().trim_start_matches('+');
        for tok in body.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let (letter, idx) = tok.split_at(1);
            let q: usize = idx
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad Pauli token '{tok}'")))?;
            check_index(q, n_qubits)?;
            let letter = match letter {
                "X" => Pauli::X,
                "Y" => Pauli::Y,
                "Z" => Pauli::Z,
                _ => return Err(Error::InvalidArgument(format!("bad Pauli token '{tok}'"))),
            };
            // Letters on the same qubit multiply.
            let mut single = Self::identity(n_qubits);
            single.set(q, letter);
            p.mul_assign(&single)?;
        }
        Ok(p)
    }
}

fn support(words: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            out.push(wi * WORD + b);
            w &= w - 1;
        }
    }
    out
}

fn check_index(q: usize, n: usize) -> Result<()> {
    if q >= n {
        Err(Error::IndexOutOfRange { index: q, n_qubits: n })
    } else {
        Ok(())
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sup = self.support();
        if sup.is_empty() {
            return write!(f, "+I");
        }
        write!(f, "+")?;
        for (i, q) in sup.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let letter = match self.get(*q) {
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
                Pauli::I => unreachable!(),
            };
            write!(f, "{letter}{q}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli[{}]({})", self.n_qubits, self)
    }
}

/// Incrementally built row-echelon basis of a subspace of GF(2)^(2n).
#[derive(Clone, Debug)]
pub struct Gf2Basis {
    n_qubits: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Gf2Basis {
    pub fn new(n_qubits: usize) -> Self {
        Gf2Basis {
            n_qubits,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &mut [u64]) {
        for (pivot, row) in &self.rows {
            if v[pivot / WORD] >> (pivot % WORD) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
    }

    /// Adds `p` to the basis; returns true when it was independent.
    pub fn insert(&mut self, p: &PauliOperator) -> Result<bool> {
        self.check(p)?;
        let mut v = p.symplectic_vector();
        self.reduce(&mut v);
        match first_set_bit(&v) {
            Some(pivot) => {
                self.rows.push((pivot, v));
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn contains(&self, p: &PauliOperator) -> Result<bool> {
        self.check(p)?;
        let mut v = p.symplectic_vector();
        self.reduce(&mut v);
        Ok(v.iter().all(|&w| w == 0))
    }

    fn check(&self, p: &PauliOperator) -> Result<()> {
        if p.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: p.n_qubits,
            });
        }
        Ok(())
    }
}

fn first_set_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
}

/// GF(2) span membership of `p` in the group generated by `generators` (phases ignored).
pub fn in_span(p: &PauliOperator, generators: &[PauliOperator]) -> Result<bool> {
    let mut basis = Gf2Basis::new(p.n_qubits());
    for g in generators {
        basis.insert(g)?;
    }
    basis.contains(p)
}

/// Rank over GF(2) of a list of operators on `n_qubits` qubits.
pub fn gf2_rank(n_qubits: usize, ops: &[PauliOperator]) -> Result<usize> {
    let mut basis = Gf2Basis::new(n_qubits);
    for g in ops {
        basis.insert(g)?;
    }
    Ok(basis.rank())
}
