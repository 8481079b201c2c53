//! Periodic syndrome-extraction schedules.
//!
//! Every triangle repeats `M G1 G2 G3` with period four rounds. A schedule fixes,
//! per triangle kind, the round (mod 4) of the measurement and which qubit role
//! is coupled to the ancilla in each of the three following rounds. Schedules
//! are translation invariant, so four local schedules describe the whole circuit.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use crate::code::{build, Geometry, PauliKind, Role, SubsystemCode, TriangleKind};
use crate::error::{Error, Result};

pub const PERIOD: usize = 4;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LocalSchedule {
    /// Round (mod 4) at which the ancilla is measured and re-prepared.
    pub measure_round: u8,
    /// `cnot_order[i]` is the role coupled at round `measure_round + 1 + i`.
    pub cnot_order: [Role; 3],
}

impl LocalSchedule {
    /// Round (mod 4) of the CNOT acting on the qubit with the given role.
    pub fn cnot_round(&self, role: Role) -> u8 {
        let pos = self.cnot_order.iter().position(|&r| r == role).unwrap();
        (self.measure_round + 1 + pos as u8) % PERIOD as u8
    }

    /// Role coupled at the given round, `None` in the measurement round.
    pub fn role_at(&self, round: u8) -> Option<Role> {
        let k = (round + PERIOD as u8 - self.measure_round) % PERIOD as u8;
        if k == 0 {
            None
        } else {
            Some(self.cnot_order[k as usize - 1])
        }
    }

    pub fn first_gate(&self) -> Role {
        self.cnot_order[0]
    }

    pub fn last_gate(&self) -> Role {
        self.cnot_order[2]
    }

    fn shifted(&self, by: u8) -> Self {
        LocalSchedule {
            measure_round: (self.measure_round + by) % PERIOD as u8,
            cnot_order: self.cnot_order,
        }
    }
}

/// Ancilla role in the CNOTs of a triangle of the given kind.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum AncillaRole {
    Control,
    Target,
}

pub fn ancilla_role(kind: TriangleKind) -> AncillaRole {
    match kind.pauli_kind() {
        PauliKind::X => AncillaRole::Control,
        PauliKind::Z => AncillaRole::Target,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Schedule {
    /// Indexed by `TriangleKind::index()`.
    pub local: [LocalSchedule; 4],
}

/// Lattice reflections used in the exchange-symmetry test.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Reflection {
    /// Columns reversed: NW <-> NE, SW <-> SE.
    Horizontal,
    /// Rows reversed: NW <-> SW, NE <-> SE.
    Vertical,
}

impl Reflection {
    pub fn apply(self, kind: TriangleKind) -> TriangleKind {
        use TriangleKind::*;
        match (self, kind) {
            (Reflection::Horizontal, NW) => NE,
            (Reflection::Horizontal, NE) => NW,
            (Reflection::Horizontal, SW) => SE,
            (Reflection::Horizontal, SE) => SW,
            (Reflection::Vertical, NW) => SW,
            (Reflection::Vertical, SW) => NW,
            (Reflection::Vertical, NE) => SE,
            (Reflection::Vertical, SE) => NE,
        }
    }
}

impl Schedule {
    pub fn get(&self, kind: TriangleKind) -> &LocalSchedule {
        &self.local[kind.index()]
    }

    /// Pair of kinds whose product is the stabilizer of the given type, in
    /// measurement order: the first is measured one round before the second.
    pub fn stabilizer_pair(&self, kind: PauliKind) -> (TriangleKind, TriangleKind) {
        let (a, b) = match kind {
            PauliKind::X => (TriangleKind::SW, TriangleKind::NE),
            PauliKind::Z => (TriangleKind::SE, TriangleKind::NW),
        };
        let (ma, mb) = (self.get(a).measure_round, self.get(b).measure_round);
        if (ma + 1) % PERIOD as u8 == mb {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Whether the two triangles of every stabilizer are measured in consecutive rounds.
    pub fn has_consecutive_pairs(&self) -> bool {
        [
            (TriangleKind::SW, TriangleKind::NE),
            (TriangleKind::SE, TriangleKind::NW),
        ]
        .iter()
        .all(|&(a, b)| {
            let d = (self.get(a).measure_round + PERIOD as u8 - self.get(b).measure_round) % PERIOD as u8;
            d == 1 || d == 3
        })
    }

    /// The schedule obtained by reflecting the lattice (which also exchanges X
    /// and Z triangles) and shifting time by two rounds.
    pub fn exchange_image(&self, reflection: Reflection) -> Schedule {
        let mut local = self.local;
        for kind in TriangleKind::ALL {
            local[reflection.apply(kind).index()] = self.get(kind).shifted(2);
        }
        Schedule { local }
    }

    pub fn is_exchange_symmetric(&self, reflection: Reflection) -> bool {
        self.exchange_image(reflection) == *self
    }

    /// Four-row round table, one column per triangle kind.
    pub fn round_table(&self) -> String {
        let mut out = String::from("round");
        for kind in TriangleKind::ALL {
            out.push_str(&format!(" | {:<7}", kind.to_string()));
        }
        out.push('\n');
        for round in 0..PERIOD as u8 {
            out.push_str(&format!("{round:>5}"));
            for kind in TriangleKind::ALL {
                let cell = match self.get(kind).role_at(round) {
                    None => match kind.pauli_kind() {
                        PauliKind::X => "M_X".to_string(),
                        PauliKind::Z => "M_Z".to_string(),
                    },
                    Some(Role::Vertex) => "CNOT u".to_string(),
                    Some(Role::HEdge) => "CNOT h".to_string(),
                    Some(Role::VEdge) => "CNOT v".to_string(),
                };
                out.push_str(&format!(" | {cell:<7}"));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.round_table())
    }
}

/// True iff no code qubit takes part in two CNOTs in the same round anywhere on
/// the lattice. Ancillas belong to a single triangle, so only code qubits can collide.
pub fn check_consistent(s: &Schedule, code: &SubsystemCode) -> bool {
    let n = code.n_qubits();
    let mut used = vec![u8::MAX; n];
    for round in 0..PERIOD as u8 {
        for t in &code.triangles {
            if let Some(role) = s.get(t.kind).role_at(round) {
                let q = t.qubit(role);
                if used[q] == round {
                    return false;
                }
                used[q] = round;
            }
        }
    }
    true
}

/// Consistency on a single unit cell: every qubit lies in exactly one triangle
/// of each kind with the same role, so a collision happens iff two kinds couple
/// the same role in the same round.
fn cell_consistent(s: &Schedule) -> bool {
    Role::ALL.iter().all(|&role| {
        let mut seen = [false; PERIOD];
        TriangleKind::ALL.iter().all(|&k| {
            let r = s.get(k).cnot_round(role) as usize;
            !std::mem::replace(&mut seen[r], true)
        })
    })
}

fn reference_code() -> &'static SubsystemCode {
    static CODE: OnceLock<SubsystemCode> = OnceLock::new();
    CODE.get_or_init(|| build(4, Geometry::Toric).expect("L=4 toric code"))
}

/// Outcome of the overlap test for one X/Z triangle pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairViolation {
    pub x_triangle: (usize, usize, TriangleKind),
    pub z_triangle: (usize, usize, TriangleKind),
    pub shared_qubit: usize,
}

/// Pairs of overlapping X/Z triangles that violate all three sufficient
/// conditions for correctness (disjoint, measured two rounds apart, or the
/// leading triangle's last gate commuting with the tailing triangle's first).
pub fn correctness_violations(s: &Schedule, code: &SubsystemCode) -> Vec<PairViolation> {
    let mut by_qubit: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, t) in code.triangles.iter().enumerate() {
        if t.pauli_kind == PauliKind::X {
            for q in t.qubits {
                by_qubit.entry(q).or_default().push(i);
            }
        }
    }
    let mut out = Vec::new();
    for tz in code.triangles.iter().filter(|t| t.pauli_kind == PauliKind::Z) {
        let mut partners: Vec<usize> = tz
            .qubits
            .iter()
            .flat_map(|q| by_qubit.get(q).into_iter().flatten().copied())
            .collect();
        partners.sort_unstable();
        partners.dedup();
        for xi in partners {
            let tx = &code.triangles[xi];
            let (lx, lz) = (s.get(tx.kind), s.get(tz.kind));
            let d = (lz.measure_round + PERIOD as u8 - lx.measure_round) % PERIOD as u8;
            let (lead, lead_t, tail, tail_t) = match d {
                2 => continue,
                1 => (lx, tx, lz, tz),
                3 => (lz, tz, lx, tx),
                _ => {
                    // measured in the same round: no ordering condition applies
                    out.push(PairViolation {
                        x_triangle: (tx.plaquette.0, tx.plaquette.1, tx.kind),
                        z_triangle: (tz.plaquette.0, tz.plaquette.1, tz.kind),
                        shared_qubit: tx.qubits.iter().copied().find(|q| tz.qubits.contains(q)).unwrap(),
                    });
                    continue;
                }
            };
            let last = lead_t.qubit(lead.last_gate());
            let first = tail_t.qubit(tail.first_gate());
            // X-type CNOTs target the code qubit, Z-type CNOTs use it as control;
            // two such gates commute iff they act on different code qubits.
            if last == first {
                out.push(PairViolation {
                    x_triangle: (tx.plaquette.0, tx.plaquette.1, tx.kind),
                    z_triangle: (tz.plaquette.0, tz.plaquette.1, tz.kind),
                    shared_qubit: last,
                });
            }
        }
    }
    out
}

pub fn check_correct(s: &Schedule) -> bool {
    s.has_consecutive_pairs() && correctness_violations(s, reference_code()).is_empty()
}

const ORDERS: [[Role; 3]; 6] = [
    [Role::Vertex, Role::HEdge, Role::VEdge],
    [Role::Vertex, Role::VEdge, Role::HEdge],
    [Role::HEdge, Role::Vertex, Role::VEdge],
    [Role::HEdge, Role::VEdge, Role::Vertex],
    [Role::VEdge, Role::Vertex, Role::HEdge],
    [Role::VEdge, Role::HEdge, Role::Vertex],
];

/// Measurement-round assignments allowed by the X-at-{3,0}, Z-at-{1,2} pattern,
/// as `[NW, NE, SW, SE]`, in lexicographic search order.
pub fn measurement_patterns() -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for ne in [0u8, 3] {
        for nw in [1u8, 2] {
            let sw = if ne == 0 { 3 } else { 0 };
            let se = if nw == 1 { 2 } else { 1 };
            out.push([nw, ne, sw, se]);
        }
    }
    out
}

/// All consistent and correct schedules with the given measurement rounds
/// (indexed by `TriangleKind::index()`), in deterministic order.
pub fn correct_schedules_with(measure: [u8; 4]) -> Vec<Schedule> {
    let mut out = Vec::new();
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                for d in 0..6 {
                    let idx = [a, b, c, d];
                    let mut local = [LocalSchedule {
                        measure_round: 0,
                        cnot_order: ORDERS[0],
                    }; 4];
                    for k in 0..4 {
                        local[k] = LocalSchedule {
                            measure_round: measure[k],
                            cnot_order: ORDERS[idx[k]],
                        };
                    }
                    let s = Schedule { local };
                    if cell_consistent(&s) && check_correct(&s) {
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}

/// Every consistent, correct schedule over the four allowed measurement patterns.
pub fn all_correct_schedules() -> Vec<Schedule> {
    measurement_patterns()
        .into_iter()
        .flat_map(correct_schedules_with)
        .collect()
}

/// Deterministic choice: the first correct schedule symmetric under the X/Z
/// exchange composed with a horizontal reflection and a two-round shift; then
/// the first symmetric under the vertical variant; then the first correct one.
pub fn find_schedule() -> Result<Schedule> {
    static FOUND: OnceLock<Option<Schedule>> = OnceLock::new();
    FOUND
        .get_or_init(|| {
            let all = all_correct_schedules();
            [Reflection::Horizontal, Reflection::Vertical]
                .iter()
                .find_map(|&r| all.iter().find(|s| s.is_exchange_symmetric(r)).copied())
                .or_else(|| all.first().copied())
        })
        .ok_or_else(|| Error::Construction("no correct schedule exists".into()))
}
