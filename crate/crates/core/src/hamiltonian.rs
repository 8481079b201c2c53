//! Spectrum of `H = -sum_T G(T)` on the torus and its decoupling circuit.
//!
//! Inside a sector with stabilizer eigenvalues `x_p, z_p` the Hamiltonian is a
//! sum of independent gauge-qubit terms `-(1 + x_p) Xbar_p - (1 + z_p) Zbar_p`,
//! so the full spectrum follows from counting sectors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::code::{build, Geometry, PauliKind, Role, SubsystemCode};
use crate::error::{Error, Result};

/// Lowest and highest eigenvalue of one gauge qubit in sector `(x, z)`.
pub fn gauge_qubit_levels(x: i8, z: i8) -> Result<(f64, f64)> {
    if x.abs() != 1 || z.abs() != 1 {
        return Err(Error::InvalidArgument(format!("syndromes must be +-1, got ({x}, {z})")));
    }
    let r = ((1.0 + x as f64).powi(2) + (1.0 + z as f64).powi(2)).sqrt();
    Ok((-r, r))
}

/// Gauge-qubit levels in exact form `a + b sqrt(2)`.
fn exact_levels(x: i8, z: i8) -> [(i64, i64); 2] {
    match (x, z) {
        (1, 1) => [(0, -2), (0, 2)],
        (1, _) | (_, 1) => [(-2, 0), (2, 0)],
        _ => [(0, 0), (0, 0)],
    }
}

/// One energy level `a + b sqrt(2)` with its degeneracy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Level {
    pub a: i64,
    pub b: i64,
    pub energy: f64,
    pub degeneracy: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorSpectrum {
    pub l: usize,
    /// Lowest levels in increasing energy.
    pub levels: Vec<Level>,
    /// Number of distinct levels.
    pub n_levels: usize,
    /// Sum of all degeneracies, equal to the Hilbert-space dimension.
    pub dimension: u128,
    pub e0: f64,
    pub ground_degeneracy: u128,
    /// Cost of a gauge excitation, `eps1(1,1) - eps0(1,1)`.
    pub delta_g: f64,
    /// Cost of a single syndrome excitation, `eps0(1,-1) - eps0(1,1)`.
    pub delta_s: f64,
    /// Lowest excitation energy in the whole spectrum.
    pub gap: f64,
    /// Lowest excitation energy inside the trivial syndrome sector.
    pub trivial_sector_gap: f64,
}

/// Largest size whose Hilbert-space dimension `2^(3L^2)` fits the counters.
pub const SPECTRUM_MAX_L: usize = 6;

/// Exact spectrum on the `L x L` torus by summing over syndrome sectors that
/// satisfy `prod x_p = prod z_p = 1`, each carrying a four-fold logical degeneracy.
pub fn spectrum(l: usize, max_levels: usize) -> Result<SectorSpectrum> {
    if l < 2 {
        return Err(Error::UnsupportedSize(l, 2));
    }
    if l > SPECTRUM_MAX_L {
        return Err(Error::TooLarge(format!(
            "spectrum counts overflow beyond L={SPECTRUM_MAX_L}"
        )));
    }
    // (parity of x = -1 plaquettes, parity of z = -1 plaquettes, a, b) -> count
    let mut dp: BTreeMap<(u8, u8, i64, i64), u128> = BTreeMap::new();
    dp.insert((0, 0, 0, 0), 1);
    let sectors: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
    for _ in 0..l * l {
        let mut next: BTreeMap<(u8, u8, i64, i64), u128> = BTreeMap::new();
        for (&(px, pz, a, b), &count) in &dp {
            for &(x, z) in &sectors {
                let npx = px ^ u8::from(x == -1);
                let npz = pz ^ u8::from(z == -1);
                for (da, db) in exact_levels(x, z) {
                    *next.entry((npx, npz, a + da, b + db)).or_insert(0) += count;
                }
            }
        }
        dp = next;
    }
    let mut merged: BTreeMap<(i64, i64), u128> = BTreeMap::new();
    for (&(px, pz, a, b), &count) in &dp {
        if px == 0 && pz == 0 {
            *merged.entry((a, b)).or_insert(0) += 4 * count;
        }
    }
    let mut all: Vec<Level> = merged
        .into_iter()
        .map(|((a, b), degeneracy)| Level {
            a,
            b,
            energy: a as f64 + b as f64 * std::f64::consts::SQRT_2,
            degeneracy,
        })
        .collect();
    all.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    let dimension = all.iter().map(|lv| lv.degeneracy).sum();
    let e0 = all[0].energy;
    let (eps0_11, eps1_11) = gauge_qubit_levels(1, 1)?;
    let (eps0_1m, _) = gauge_qubit_levels(1, -1)?;
    let gap = all[1].energy - e0;
    // the trivial sector holds only levels built from (0, +-2) contributions
    let n = (l * l) as i64;
    let trivial_first = (-2 * n + 4) as f64 * std::f64::consts::SQRT_2;
    Ok(SectorSpectrum {
        l,
        n_levels: all.len(),
        ground_degeneracy: all[0].degeneracy,
        levels: all.into_iter().take(max_levels.max(2)).collect(),
        dimension,
        e0,
        delta_g: eps1_11 - eps0_11,
        delta_s: eps0_1m - eps0_11,
        gap,
        trivial_sector_gap: trivial_first - e0,
    })
}

/// Gap bound along `(1 - t) H' + t H''`, where `H'` is the decoupled
/// Hamiltonian with gap `gap` and `H''` the toric-code Hamiltonian with gap 2.
pub fn deformation_gap_bound(gap: f64) -> f64 {
    gap.min(2.0)
}

/// A Pauli sum `-sum_k P_k` over at most 24 qubits, with each `P_k` a pure X or Z string.
#[derive(Clone, Debug)]
pub struct TriangleHamiltonian {
    pub n_qubits: usize,
    pub terms: Vec<(PauliKind, u32)>,
}

impl TriangleHamiltonian {
    pub fn new(code: &SubsystemCode) -> Result<Self> {
        let n = code.n_qubits();
        if n > 24 {
            return Err(Error::TooLarge(format!("{n} qubits for a dense state vector")));
        }
        let terms = code
            .triangles
            .iter()
            .map(|t| (t.pauli_kind, t.qubits.iter().fold(0u32, |m, &q| m | 1 << q)))
            .collect();
        Ok(TriangleHamiltonian { n_qubits: n, terms })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(kind, mask) in &self.terms {
            match kind {
                PauliKind::X => {
                    for (s, o) in out.iter_mut().enumerate() {
                        *o -= v[s ^ mask as usize];
                    }
                }
                PauliKind::Z => {
                    for (s, o) in out.iter_mut().enumerate() {
                        if (s as u32 & mask).count_ones() % 2 == 0 {
                            *o -= v[s];
                        } else {
                            *o += v[s];
                        }
                    }
                }
            }
        }
    }

    /// Smallest eigenvalue by power iteration on `c I - H` with `c` the number of
    /// terms, which bounds the spectral radius.
    pub fn ground_energy(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let dim = self.dim();
        let c = self.terms.len() as f64;
        // deterministic start vector with overlap on every basis state
        let mut v: Vec<f64> = (0..dim).map(|s| 1.0 + ((s * 7919) % 101) as f64 / 101.0).collect();
        let mut hv = vec![0.0; dim];
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            self.apply(&v, &mut hv);
            let rayleigh: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
            for (x, h) in v.iter_mut().zip(&hv) {
                *x = c * *x - h;
            }
            if (rayleigh - last).abs() < tol {
                return Ok(rayleigh);
            }
            last = rayleigh;
        }
        Err(Error::NoConvergence(max_iter))
    }
}

/// Numerical ground energy of the triangle Hamiltonian on the `L = 2` torus.
pub fn verify_ground_energy_numeric(l: usize) -> Result<f64> {
    if l != 2 {
        return Err(Error::Unsupported("numeric diagonalization is limited to L=2".into()));
    }
    let code = build(2, Geometry::Toric)?;
    TriangleHamiltonian::new(&code)?.ground_energy(1e-13, 200_000)
}

/// A qubit of the cell of plaquette `(r, c)`: its role and offset from `(r, c)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellQubit {
    pub role: Role,
    pub dr: i64,
    pub dc: i64,
}

impl CellQubit {
    fn resolve(&self, code: &SubsystemCode, r: i64, c: i64) -> usize {
        let lay = &code.layout;
        let (row, col) = (r + self.dr, c + self.dc);
        match self.role {
            Role::Vertex => lay.vertex(row, col),
            Role::HEdge => lay.hedge(row, col),
            Role::VEdge => lay.vedge(row, col),
        }
        .expect("toric coordinates always resolve")
    }
}

/// The eight qubits touching a plaquette.
pub const CELL: [CellQubit; 8] = [
    CellQubit {
        role: Role::Vertex,
        dr: 0,
        dc: 0,
    },
    CellQubit {
        role: Role::Vertex,
        dr: 0,
        dc: 1,
    },
    CellQubit {
        role: Role::Vertex,
        dr: 1,
        dc: 0,
    },
    CellQubit {
        role: Role::Vertex,
        dr: 1,
        dc: 1,
    },
    CellQubit {
        role: Role::HEdge,
        dr: 0,
        dc: 0,
    },
    CellQubit {
        role: Role::HEdge,
        dr: 1,
        dc: 0,
    },
    CellQubit {
        role: Role::VEdge,
        dr: 0,
        dc: 0,
    },
    CellQubit {
        role: Role::VEdge,
        dr: 0,
        dc: 1,
    },
];

/// Translation-invariant CNOT layer: one gate per plaquette.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CnotPattern {
    pub control: CellQubit,
    pub target: CellQubit,
}

/// Ordered gate patterns whose translates are pairwise disjoint.
pub fn cnot_patterns() -> Vec<CnotPattern> {
    let mut out = Vec::new();
    for control in CELL {
        for target in CELL {
            if control.role != target.role {
                out.push(CnotPattern { control, target });
            }
        }
    }
    out
}

/// Image of one operator under the circuit.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugatedOperator {
    pub name: String,
    pub plaquette: usize,
    pub before: String,
    pub after: String,
    pub weight_after: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecouplingCircuit {
    pub l: usize,
    /// Layers in application order.
    pub rounds: [CnotPattern; 4],
    /// Qubit carrying the decoupled gauge qubit of each plaquette.
    pub ancilla: Vec<usize>,
    pub ancilla_role: Role,
    pub table: Vec<ConjugatedOperator>,
    pub candidates_tried: u64,
}

/// Pauli with X and Z bit masks over at most 64 qubits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
struct Mask {
    x: u64,
    z: u64,
}

impl Mask {
    fn weight(self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn cnot(&mut self, c: usize, t: usize) {
        self.x ^= (self.x >> c & 1) << t;
        self.z ^= (self.z >> t & 1) << c;
    }

    fn render(self) -> String {
        let mut parts = Vec::new();
        for q in 0..64 {
            let (x, z) = (self.x >> q & 1 == 1, self.z >> q & 1 == 1);
            let p = match (x, z) {
                (true, false) => "X",
                (false, true) => "Z",
                (true, true) => "Y",
                _ => continue,
            };
            parts.push(format!("{p}{q}"));
        }
        parts.join(" ")
    }
}

fn to_mask(op: &crate::pauli::PauliOperator) -> Mask {
    Mask {
        x: op.x_words()[0],
        z: op.z_words()[0],
    }
}

/// Gate list of a pattern over all plaquettes.
fn layer_gates(code: &SubsystemCode, pat: &CnotPattern) -> Vec<(usize, usize)> {
    let l = code.l() as i64;
    let mut out = Vec::with_capacity((l * l) as usize);
    for r in 0..l {
        for c in 0..l {
            out.push((pat.control.resolve(code, r, c), pat.target.resolve(code, r, c)));
        }
    }
    out
}

fn conjugate(mut m: Mask, layers: &[&Vec<(usize, usize)>]) -> Mask {
    for layer in layers {
        for &(c, t) in layer.iter() {
            m.cnot(c, t);
        }
    }
    m
}

/// Checks the decoupling contract on every plaquette; returns the ancilla qubits.
fn contract_holds(
    ops: &[(Mask, Mask, Mask, Mask)],
    layers: &[&Vec<(usize, usize)>],
) -> Option<(Vec<usize>, Vec<[Mask; 4]>)> {
    let mut ancilla = Vec::new();
    let mut images = Vec::new();
    for &(sx, sz, gx, gz) in ops {
        let a = conjugate(sx, layers);
        let b = conjugate(sz, layers);
        let jx = conjugate(gx, layers);
        let jz = conjugate(gz, layers);
        if a.weight() != 4 || b.weight() != 4 {
            return None;
        }
        if jx.weight() != 1 || jz.weight() != 1 || jx.z != 0 || jz.x != 0 || jx.x != jz.z {
            return None;
        }
        ancilla.push(jx.x.trailing_zeros() as usize);
        images.push([a, b, jx, jz]);
    }
    Some((ancilla, images))
}

/// Searches four translation-invariant CNOT layers under which every `S^X_p`,
/// `S^Z_p` becomes a weight-4 operator of a toric code on the remaining
/// qubits and the gauge pair `Xbar_p, Zbar_p` becomes `X, Z` on one qubit.
/// Candidates are screened on one plaquette and confirmed on all of them.
pub fn decoupling_search(l: usize) -> Result<DecouplingCircuit> {
    decoupling_search_with(l, None)
}

/// As [`decoupling_search`], optionally requiring the gauge qubit to land on a
/// qubit of the given role.
pub fn decoupling_search_with(l: usize, ancilla_role: Option<Role>) -> Result<DecouplingCircuit> {
    if l < 3 {
        return Err(Error::UnsupportedSize(l, 3));
    }
    let code = build(l, Geometry::Toric)?;
    if code.n_qubits() > 64 {
        return Err(Error::TooLarge(format!(
            "search uses 64-bit masks, L={l} has {} qubits",
            code.n_qubits()
        )));
    }
    let g = &code.groups;
    let ops: Vec<(Mask, Mask, Mask, Mask)> = (0..l * l)
        .map(|p| {
            (
                to_mask(&g.stabilizers_x[p]),
                to_mask(&g.stabilizers_z[p]),
                to_mask(&g.gauge_x[p]),
                to_mask(&g.gauge_z[p]),
            )
        })
        .collect();
    let probe = code.layout.plaquette_index(1, 1);
    let patterns = cnot_patterns();
    let gates: Vec<Vec<(usize, usize)>> = patterns.iter().map(|p| layer_gates(&code, p)).collect();
    let mut tried = 0u64;
    let (sx, sz, gx, gz) = ops[probe];
    for i1 in 0..patterns.len() {
        let after1 = [sx, sz, gx, gz].map(|m| conjugate(m, &[&gates[i1]]));
        for i2 in 0..patterns.len() {
            let after2 = after1.map(|m| conjugate(m, &[&gates[i2]]));
            for i3 in 0..patterns.len() {
                let after3 = after2.map(|m| conjugate(m, &[&gates[i3]]));
                for i4 in 0..patterns.len() {
                    tried += 1;
                    let [a, b, jx, jz] = after3.map(|m| conjugate(m, &[&gates[i4]]));
                    if a.weight() != 4 || b.weight() != 4 || jx.weight() != 1 || jz.weight() != 1 {
                        continue;
                    }
                    if jx.z != 0 || jz.x != 0 || jx.x != jz.z {
                        continue;
                    }
                    let layers = [&gates[i1], &gates[i2], &gates[i3], &gates[i4]];
                    let Some((ancilla, images)) = contract_holds(&ops, &layers) else {
                        continue;
                    };
                    let role = code.layout.site(ancilla[0]).role();
                    if ancilla_role.is_some_and(|want| want != role) {
                        continue;
                    }
                    if !toric_structure(&images, &ancilla, code.n_qubits()) {
                        continue;
                    }
                    let mut table = Vec::new();
                    for (p, (&(sx, sz, gx, gz), img)) in ops.iter().zip(&images).enumerate() {
                        for (name, before, after) in [
                            ("S^X", sx, img[0]),
                            ("S^Z", sz, img[1]),
                            ("Xbar", gx, img[2]),
                            ("Zbar", gz, img[3]),
                        ] {
                            table.push(ConjugatedOperator {
                                name: name.to_string(),
                                plaquette: p,
                                before: before.render(),
                                after: after.render(),
                                weight_after: after.weight() as usize,
                            });
                        }
                    }
                    return Ok(DecouplingCircuit {
                        l,
                        rounds: [patterns[i1], patterns[i2], patterns[i3], patterns[i4]],
                        ancilla_role: role,
                        ancilla,
                        table,
                        candidates_tried: tried,
                    });
                }
            }
        }
    }
    Err(Error::Construction(format!(
        "no decoupling circuit among {tried} candidates"
    )))
}

/// The images form a toric code on the non-ancilla qubits: stabilizers avoid
/// the ancillas, are pure X or pure Z, and every other qubit lies in exactly two
/// X and two Z images.
fn toric_structure(images: &[[Mask; 4]], ancilla: &[usize], n: usize) -> bool {
    let anc: u64 = ancilla.iter().fold(0, |m, &q| m | 1 << q);
    if anc.count_ones() as usize != ancilla.len() {
        return false;
    }
    let mut cover_x = vec![0u8; n];
    let mut cover_z = vec![0u8; n];
    for img in images {
        let (a, b) = (img[0], img[1]);
        if a.z != 0 || b.x != 0 || (a.x | b.z) & anc != 0 {
            return false;
        }
        for q in 0..n {
            cover_x[q] += (a.x >> q & 1) as u8;
            cover_z[q] += (b.z >> q & 1) as u8;
        }
    }
    (0..n).all(|q| {
        if anc >> q & 1 == 1 {
            cover_x[q] == 0 && cover_z[q] == 0
        } else {
            cover_x[q] == 2 && cover_z[q] == 2
        }
    })
}
