//! Pauli-frame simulation of periodic syndrome readout.
//!
//! A [`Program`] holds the operations of one period (four rounds for the
//! scheduled CNOT circuit, two rounds for direct parity measurements) and the
//! ordered list of fault locations inside each round. A [`CircuitSim`] runs the
//! program over a window of `period * T` rounds, either with random faults or
//! with an explicit fault list, and reports per-sector syndrome histories.
//!
//! Frames index code qubits first and then one ancilla per triangle. X-type
//! ancillas are CNOT controls measured in the X basis, Z-type ancillas are
//! targets measured in the Z basis; both are re-prepared in the round they are
//! measured.

use rand::Rng;
use serde::Serialize;

use crate::code::{Geometry, PauliKind, Sector, SubsystemCode};
use crate::error::{Error, Result};
use crate::lattice::DefectSet;
use crate::noise::FaultClock;
use crate::pauli::PauliOperator;
use crate::schedule::{Schedule, PERIOD};

/// How triangle eigenvalues are read out.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Extraction {
    /// Ancilla-based CNOT circuits following a periodic schedule.
    Circuit(Schedule),
    /// Direct three-qubit parity measurements: X triangles, then Z triangles.
    DirectParity,
}

/// Which error sectors a simulation reports.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Tracking {
    X,
    Z,
    Both,
}

impl Tracking {
    pub fn sectors(self) -> &'static [Sector] {
        match self {
            Tracking::X => &[PauliKind::X],
            Tracking::Z => &[PauliKind::Z],
            Tracking::Both => &[PauliKind::X, PauliKind::Z],
        }
    }
}

impl From<Sector> for Tracking {
    fn from(s: Sector) -> Self {
        match s {
            PauliKind::X => Tracking::X,
            PauliKind::Z => Tracking::Z,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FaultKind {
    /// Two-qubit Pauli after a CNOT.
    Gate,
    /// Flipped ancilla measurement outcome.
    Measurement,
    /// Ancilla prepared in the orthogonal state.
    Preparation,
    /// Flipped outcome of a direct parity measurement.
    ParityOutcome,
    /// Three-qubit Pauli after a direct parity measurement.
    ParityData,
}

/// One fault. `round` counts from the start of the simulation window and `op`
/// indexes the operations of phase `round % period`.
///
/// `pauli` encodes the injected Pauli: for gate faults bit 0/1 are X on
/// control/target and bit 2/3 Z on control/target; for parity-data faults bits
/// 0..3 are X and bits 3..6 are Z on the triangle's qubits in role order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Fault {
    pub kind: FaultKind,
    pub round: usize,
    pub op: usize,
    pub pauli: u8,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Cnot { control: u32, target: u32 },
    Measure { ancilla: u32, triangle: u32 },
    Parity { triangle: u32 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub op: u32,
    pub kind: FaultKind,
}

/// Operations and fault locations of one period.
#[derive(Clone, Debug)]
pub struct Program {
    extraction: Extraction,
    n_code: usize,
    n_frame: usize,
    n_checks: usize,
    period: usize,
    ops: Vec<Vec<Op>>,
    locations: Vec<Vec<Location>>,
    /// phase -> frame qubit -> operations touching it
    touching: Vec<Vec<Vec<u32>>>,
    tri_qubits: Vec<[u32; 3]>,
    tri_kind: Vec<PauliKind>,
    tri_plaquette: Vec<u32>,
    /// Z-check supports (detect X errors) and X-check supports, by plaquette.
    check_support: [Vec<Vec<u32>>; 2],
    /// First round (mod period) of the window for each sector.
    window_start: [usize; 2],
}

fn sector_slot(s: Sector) -> usize {
    match s {
        PauliKind::X => 0,
        PauliKind::Z => 1,
    }
}

impl Program {
    pub fn new(code: &SubsystemCode, extraction: Extraction) -> Result<Self> {
        if code.geometry() != Geometry::Toric {
            return Err(Error::Unsupported(
                "repeated syndrome readout is implemented for the toric code only".into(),
            ));
        }
        let n_code = code.n_qubits();
        let n_tri = code.triangles.len();
        let period = match extraction {
            Extraction::Circuit(_) => PERIOD,
            Extraction::DirectParity => 2,
        };
        let mut ops: Vec<Vec<Op>> = vec![Vec::new(); period];
        let mut locations: Vec<Vec<Location>> = vec![Vec::new(); period];
        match extraction {
            Extraction::Circuit(s) => {
                for (phase, (ops, locs)) in ops.iter_mut().zip(locations.iter_mut()).enumerate() {
                    for (i, t) in code.triangles.iter().enumerate() {
                        let anc = (n_code + i) as u32;
                        match s.get(t.kind).role_at(phase as u8) {
                            None => {
                                let op = ops.len() as u32;
                                ops.push(Op::Measure {
                                    ancilla: anc,
                                    triangle: i as u32,
                                });
                                locs.push(Location {
                                    op,
                                    kind: FaultKind::Measurement,
                                });
                                locs.push(Location {
                                    op,
                                    kind: FaultKind::Preparation,
                                });
                            }
                            Some(role) => {
                                let q = t.qubit(role) as u32;
                                let (control, target) = match t.pauli_kind {
                                    PauliKind::X => (anc, q),
                                    PauliKind::Z => (q, anc),
                                };
                                let op = ops.len() as u32;
                                ops.push(Op::Cnot { control, target });
                                locs.push(Location {
                                    op,
                                    kind: FaultKind::Gate,
                                });
                            }
                        }
                    }
                }
            }
            Extraction::DirectParity => {
                for (phase, kind) in [PauliKind::X, PauliKind::Z].into_iter().enumerate() {
                    for (i, t) in code.triangles.iter().enumerate() {
                        if t.pauli_kind == kind {
                            ops[phase].push(Op::Parity { triangle: i as u32 });
                        }
                    }
                    // all projections of a round happen before its data errors
                    let n_ops = ops[phase].len() as u32;
                    for op in 0..n_ops {
                        locations[phase].push(Location {
                            op,
                            kind: FaultKind::ParityOutcome,
                        });
                    }
                    for op in 0..n_ops {
                        locations[phase].push(Location {
                            op,
                            kind: FaultKind::ParityData,
                        });
                    }
                }
            }
        }
        let n_frame = n_code + n_tri;
        let tri_qubits: Vec<[u32; 3]> = code.triangles.iter().map(|t| t.qubits.map(|q| q as u32)).collect();
        let mut touching = vec![vec![Vec::new(); n_frame]; period];
        for (phase, phase_ops) in ops.iter().enumerate() {
            for (k, op) in phase_ops.iter().enumerate() {
                let qs: Vec<u32> = match *op {
                    Op::Cnot { control, target } => vec![control, target],
                    Op::Measure { ancilla, .. } => vec![ancilla],
                    Op::Parity { triangle } => tri_qubits[triangle as usize].to_vec(),
                };
                for q in qs {
                    touching[phase][q as usize].push(k as u32);
                }
            }
        }
        let l = code.l();
        let tri_plaquette = code
            .triangles
            .iter()
            .map(|t| (t.plaquette.0 * l + t.plaquette.1) as u32)
            .collect();
        let tri_kind = code.triangles.iter().map(|t| t.pauli_kind).collect();
        let support = |ops: &[PauliOperator]| -> Vec<Vec<u32>> {
            ops.iter()
                .map(|o| o.support().into_iter().map(|q| q as u32).collect())
                .collect()
        };
        let check_support = [support(&code.groups.stabilizers_z), support(&code.groups.stabilizers_x)];

        let mut program = Program {
            extraction,
            n_code,
            n_frame,
            n_checks: l * l,
            period,
            ops,
            locations,
            touching,
            tri_qubits,
            tri_kind,
            tri_plaquette,
            check_support,
            window_start: [0, 0],
        };
        for sector in [PauliKind::X, PauliKind::Z] {
            program.window_start[sector_slot(sector)] = program.compute_window_start(sector)?;
        }
        Ok(program)
    }

    /// Phases at which the checks of a sector are read out.
    fn measure_phases(&self, sector: Sector) -> Vec<usize> {
        let tri_kind = sector.opposite();
        let mut out = Vec::new();
        for (phase, ops) in self.ops.iter().enumerate() {
            for op in ops {
                let tri = match *op {
                    Op::Measure { triangle, .. } | Op::Parity { triangle } => triangle,
                    Op::Cnot { .. } => continue,
                };
                if self.tri_kind[tri as usize] == tri_kind {
                    out.push(phase);
                    break;
                }
            }
        }
        out
    }

    /// The window opens one round before the first of the consecutive rounds
    /// that read out one syndrome layer.
    fn compute_window_start(&self, sector: Sector) -> Result<usize> {
        let phases = self.measure_phases(sector);
        let p = self.period;
        (1..=p)
            .find(|&b| phases.contains(&(b % p)) && !phases.contains(&((b - 1) % p)))
            .map(|b| b - 1)
            .ok_or_else(|| Error::Construction("checks are not read out in consecutive rounds".into()))
    }

    pub fn extraction(&self) -> Extraction {
        self.extraction
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn n_code(&self) -> usize {
        self.n_code
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn ops(&self, round: usize) -> &[Op] {
        &self.ops[round % self.period]
    }

    pub fn locations(&self, round: usize) -> &[Location] {
        &self.locations[round % self.period]
    }

    pub fn triangle_qubits(&self, triangle: usize) -> [u32; 3] {
        self.tri_qubits[triangle]
    }

    /// Sector whose syndrome a triangle's outcome contributes to.
    pub fn triangle_sector(&self, triangle: usize) -> Sector {
        self.tri_kind[triangle].opposite()
    }

    pub fn triangle_plaquette(&self, triangle: usize) -> usize {
        self.tri_plaquette[triangle] as usize
    }

    /// Triangle whose ancilla or parity an operation reads out, if any.
    pub fn op_triangle(&self, round: usize, op: usize) -> Option<usize> {
        match self.ops(round)[op] {
            Op::Measure { triangle, .. } | Op::Parity { triangle } => Some(triangle as usize),
            Op::Cnot { control, target } => {
                let anc = control.max(target) as usize;
                Some(anc - self.n_code)
            }
        }
    }

    /// Round at which sector windows start, modulo the period.
    pub fn window_start(&self, sector: Sector) -> usize {
        self.window_start[sector_slot(sector)]
    }

    pub fn check_support(&self, sector: Sector) -> &[Vec<u32>] {
        &self.check_support[sector_slot(sector)]
    }
}

/// Syndrome bits `s_c(t)` for `t` in `0..=T`; layer `T` is the noiseless final readout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SyndromeHistory {
    pub sector: Sector,
    pub n_checks: usize,
    pub t_rounds: usize,
    pub bits: Vec<u8>,
}

impl SyndromeHistory {
    pub fn new(sector: Sector, n_checks: usize, t_rounds: usize) -> Self {
        SyndromeHistory {
            sector,
            n_checks,
            t_rounds,
            bits: vec![0; n_checks * (t_rounds + 1)],
        }
    }

    pub fn layers(&self) -> usize {
        self.t_rounds + 1
    }

    pub fn get(&self, t: usize, check: usize) -> bool {
        self.bits[t * self.n_checks + check] != 0
    }

    pub fn toggle(&mut self, t: usize, check: usize) {
        self.bits[t * self.n_checks + check] ^= 1;
    }

    pub fn layer(&self, t: usize) -> &[u8] {
        &self.bits[t * self.n_checks..(t + 1) * self.n_checks]
    }

    pub fn is_trivial(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }
}

/// Outcome of one simulated trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub t_rounds: usize,
    pub histories: Vec<SyndromeHistory>,
    /// Accumulated error on code qubits at the end of the window; only the
    /// components of tracked sectors are meaningful.
    #[serde(skip)]
    pub accumulated: PauliOperator,
}

impl TrialRecord {
    pub fn history(&self, sector: Sector) -> Option<&SyndromeHistory> {
        self.histories.iter().find(|h| h.sector == sector)
    }
}

/// Simulator for `T` syndrome layers of a program.
#[derive(Clone, Debug)]
pub struct CircuitSim<'a> {
    pub program: &'a Program,
    pub t_rounds: usize,
    pub tracking: Tracking,
    start: usize,
    end: usize,
}

impl<'a> CircuitSim<'a> {
    pub fn new(program: &'a Program, t_rounds: usize, tracking: Tracking) -> Result<Self> {
        if t_rounds == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        let p = program.period;
        let span = p * t_rounds;
        let starts: Vec<usize> = tracking.sectors().iter().map(|&s| program.window_start(s)).collect();
        let start = *starts.iter().min().unwrap();
        let end = starts.iter().map(|s| s + span).max().unwrap();
        Ok(CircuitSim {
            program,
            t_rounds,
            tracking,
            start,
            end,
        })
    }

    /// Absolute round range `[start, end)` of the window.
    pub fn window(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    /// Syndrome layer fed by a readout at absolute round `round`.
    fn layer_of(&self, sector: Sector, round: usize) -> Option<usize> {
        let s = self.program.window_start(sector);
        if round <= s {
            return None;
        }
        let t = (round - s - 1) / self.program.period;
        (t < self.t_rounds).then_some(t)
    }

    /// Random-fault trial with error rate `p`.
    pub fn simulate<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> TrialRecord {
        let mut clock = FaultClock::new(p, rng);
        self.run(
            None,
            |_, loc, rng: &mut R| {
                if clock.tick(rng) {
                    Some(match loc.kind {
                        FaultKind::Gate => rng.gen_range(0..16u8),
                        FaultKind::ParityData => rng.gen_range(0..64u8),
                        _ => 0,
                    })
                } else {
                    None
                }
            },
            rng,
        )
    }

    /// Deterministic trial with an explicit fault list and an optional error
    /// present on the code qubits before the window opens.
    pub fn simulate_faults(&self, initial: Option<&PauliOperator>, faults: &[Fault]) -> TrialRecord {
        let mut dummy = rand::rngs::mock::StepRng::new(0, 0);
        self.run(
            initial,
            |round, loc, _: &mut rand::rngs::mock::StepRng| {
                faults
                    .iter()
                    .find(|f| f.round == round && f.op == loc.op as usize && f.kind == loc.kind)
                    .map(|f| f.pauli)
            },
            &mut dummy,
        )
    }

    fn run<R: Rng + ?Sized, F>(&self, initial: Option<&PauliOperator>, mut fault: F, rng: &mut R) -> TrialRecord
    where
        F: FnMut(usize, &Location, &mut R) -> Option<u8>,
    {
        let prog = self.program;
        let mut fx = vec![0u8; prog.n_frame];
        let mut fz = vec![0u8; prog.n_frame];
        if let Some(e) = initial {
            for q in 0..prog.n_code {
                fx[q] = e.has_x(q) as u8;
                fz[q] = e.has_z(q) as u8;
            }
        }
        let sectors = self.tracking.sectors();
        let mut histories: Vec<SyndromeHistory> = sectors
            .iter()
            .map(|&s| SyndromeHistory::new(s, prog.n_checks, self.t_rounds))
            .collect();
        let mut parity_flip = Vec::new();

        for round in self.start..self.end {
            let phase = round % prog.period;
            let ops = &prog.ops[phase];
            for loc in &prog.locations[phase] {
                let op = ops[loc.op as usize];
                let f = fault(round, loc, rng);
                match (loc.kind, op) {
                    (FaultKind::Gate, Op::Cnot { control, target }) => {
                        let (c, t) = (control as usize, target as usize);
                        fx[t] ^= fx[c];
                        fz[c] ^= fz[t];
                        if let Some(b) = f {
                            fx[c] ^= b & 1;
                            fx[t] ^= b >> 1 & 1;
                            fz[c] ^= b >> 2 & 1;
                            fz[t] ^= b >> 3 & 1;
                        }
                    }
                    (FaultKind::Measurement, Op::Measure { ancilla, triangle }) => {
                        let a = ancilla as usize;
                        let tri = triangle as usize;
                        let read = match prog.tri_kind[tri] {
                            PauliKind::Z => fx[a],
                            PauliKind::X => fz[a],
                        };
                        let outcome = read ^ f.is_some() as u8;
                        self.record(&mut histories, round, tri, outcome);
                    }
                    (FaultKind::Preparation, Op::Measure { ancilla, triangle }) => {
                        let a = ancilla as usize;
                        fx[a] = 0;
                        fz[a] = 0;
                        if f.is_some() {
                            match prog.tri_kind[triangle as usize] {
                                PauliKind::Z => fx[a] = 1,
                                PauliKind::X => fz[a] = 1,
                            }
                        }
                    }
                    (FaultKind::ParityOutcome, Op::Parity { triangle }) => {
                        let tri = triangle as usize;
                        let frame = match prog.tri_kind[tri] {
                            PauliKind::Z => &fx,
                            PauliKind::X => &fz,
                        };
                        let read = prog.tri_qubits[tri].iter().fold(0, |acc, &q| acc ^ frame[q as usize]);
                        parity_flip.push((tri, read ^ f.is_some() as u8));
                    }
                    (FaultKind::ParityData, Op::Parity { triangle }) => {
                        // the round's projections are complete once data faults start
                        for (tri, outcome) in parity_flip.drain(..) {
                            self.record(&mut histories, round, tri, outcome);
                        }
                        if let Some(b) = f {
                            for (j, &q) in prog.tri_qubits[triangle as usize].iter().enumerate() {
                                fx[q as usize] ^= b >> j & 1;
                                fz[q as usize] ^= b >> (j + 3) & 1;
                            }
                        }
                    }
                    _ => unreachable!("location kind does not match operation"),
                }
            }
        }

        for h in histories.iter_mut() {
            let frame = match h.sector {
                PauliKind::X => &fx,
                PauliKind::Z => &fz,
            };
            for (c, support) in prog.check_support(h.sector).iter().enumerate() {
                let s = support.iter().fold(0, |acc, &q| acc ^ frame[q as usize]);
                h.bits[self.t_rounds * prog.n_checks + c] = s;
            }
        }

        let mut accumulated = PauliOperator::identity(prog.n_code);
        for q in 0..prog.n_code {
            if fx[q] == 1 && sectors.contains(&PauliKind::X) {
                accumulated.toggle_x(q);
            }
            if fz[q] == 1 && sectors.contains(&PauliKind::Z) {
                accumulated.toggle_z(q);
            }
        }
        TrialRecord {
            t_rounds: self.t_rounds,
            histories,
            accumulated,
        }
    }

    fn record(&self, histories: &mut [SyndromeHistory], round: usize, tri: usize, outcome: u8) {
        if outcome == 0 {
            return;
        }
        let sector = self.program.triangle_sector(tri);
        if let Some(h) = histories.iter_mut().find(|h| h.sector == sector) {
            if let Some(t) = self.layer_of(sector, round) {
                h.toggle(t, self.program.triangle_plaquette(tri));
            }
        }
    }

    /// Every fault location of the window, in execution order.
    pub fn fault_locations(&self) -> impl Iterator<Item = (usize, Location)> + '_ {
        (self.start..self.end).flat_map(move |round| self.program.locations(round).iter().map(move |&l| (round, l)))
    }

    /// Sector-relevant variants of a fault location with their probability in
    /// units of `p`. Gate faults contribute the three nontrivial single-sector
    /// patterns at p/4 each; parity-data faults are split into single-qubit
    /// constituents with marginal p/2 each.
    pub fn sector_variants(&self, sector: Sector, kind: FaultKind) -> &'static [(u8, f64)] {
        match (kind, sector) {
            (FaultKind::Gate, PauliKind::X) => &[(1, 0.25), (2, 0.25), (3, 0.25)],
            (FaultKind::Gate, PauliKind::Z) => &[(4, 0.25), (8, 0.25), (12, 0.25)],
            (FaultKind::ParityData, PauliKind::X) => &[(1, 0.5), (2, 0.5), (4, 0.5)],
            (FaultKind::ParityData, PauliKind::Z) => &[(8, 0.5), (16, 0.5), (32, 0.5)],
            _ => &[(0, 1.0)],
        }
    }

    /// Sparse propagation of one fault, tracking only the given sector's frame
    /// component. Returns the flipped syndrome bits `(t, check)` (including the
    /// final layer) and the residual error support on code qubits.
    pub fn propagate(&self, sector: Sector, fault: &Fault) -> Result<(Vec<(usize, usize)>, Vec<usize>)> {
        let prog = self.program;
        if fault.round < self.start || fault.round >= self.end {
            return Err(Error::InvalidFault(format!("round {} outside window", fault.round)));
        }
        let ops = prog.ops(fault.round);
        let op = *ops
            .get(fault.op)
            .ok_or_else(|| Error::InvalidFault(format!("no operation {} in round {}", fault.op, fault.round)))?;
        let mut flips: Vec<(usize, usize)> = Vec::new();
        let mut support: Vec<u32> = Vec::new();
        let toggle = |support: &mut Vec<u32>, q: u32| {
            if let Some(i) = support.iter().position(|&x| x == q) {
                support.swap_remove(i);
            } else {
                support.push(q);
            }
        };
        let record = |flips: &mut Vec<(usize, usize)>, round: usize, tri: usize| {
            if prog.triangle_sector(tri) == sector {
                if let Some(t) = self.layer_of(sector, round) {
                    let key = (t, prog.triangle_plaquette(tri));
                    if let Some(i) = flips.iter().position(|&k| k == key) {
                        flips.swap_remove(i);
                    } else {
                        flips.push(key);
                    }
                }
            }
        };
        let component = |b: u8, x_bit: u8, z_bit: u8| match sector {
            PauliKind::X => b >> x_bit & 1 == 1,
            PauliKind::Z => b >> z_bit & 1 == 1,
        };
        match (fault.kind, op) {
            (FaultKind::Gate, Op::Cnot { control, target }) => {
                if component(fault.pauli, 0, 2) {
                    toggle(&mut support, control);
                }
                if component(fault.pauli, 1, 3) {
                    toggle(&mut support, target);
                }
            }
            (FaultKind::Measurement, Op::Measure { triangle, .. })
            | (FaultKind::ParityOutcome, Op::Parity { triangle }) => {
                record(&mut flips, fault.round, triangle as usize);
            }
            (FaultKind::Preparation, Op::Measure { ancilla, triangle }) => {
                // |0> prepared as |1> is an X error, |+> as |-> a Z error
                if prog.triangle_sector(triangle as usize) == sector {
                    toggle(&mut support, ancilla);
                }
            }
            (FaultKind::ParityData, Op::Parity { triangle }) => {
                for (j, &q) in prog.tri_qubits[triangle as usize].iter().enumerate() {
                    if component(fault.pauli, j as u8, j as u8 + 3) {
                        toggle(&mut support, q);
                    }
                }
            }
            _ => {
                return Err(Error::InvalidFault(format!(
                    "{:?} fault on operation {:?}",
                    fault.kind, op
                )))
            }
        }

        let mut touched: Vec<u32> = Vec::new();
        for round in fault.round + 1..self.end {
            if support.is_empty() {
                break;
            }
            let phase = round % prog.period;
            touched.clear();
            for &q in &support {
                touched.extend_from_slice(&prog.touching[phase][q as usize]);
            }
            touched.sort_unstable();
            touched.dedup();
            for &k in &touched {
                match prog.ops[phase][k as usize] {
                    Op::Cnot { control, target } => match sector {
                        PauliKind::X => {
                            if support.contains(&control) {
                                toggle(&mut support, target);
                            }
                        }
                        PauliKind::Z => {
                            if support.contains(&target) {
                                toggle(&mut support, control);
                            }
                        }
                    },
                    Op::Measure { ancilla, triangle } => {
                        if let Some(i) = support.iter().position(|&x| x == ancilla) {
                            support.swap_remove(i);
                            record(&mut flips, round, triangle as usize);
                        }
                    }
                    Op::Parity { triangle } => {
                        let odd = prog.tri_qubits[triangle as usize]
                            .iter()
                            .filter(|q| support.contains(q))
                            .count()
                            % 2
                            == 1;
                        if odd {
                            record(&mut flips, round, triangle as usize);
                        }
                    }
                }
            }
        }

        // Leftover ancilla components are discarded by the final data readout.
        let mut residual: Vec<usize> = support
            .iter()
            .filter(|&&q| (q as usize) < prog.n_code)
            .map(|&q| q as usize)
            .collect();
        residual.sort_unstable();
        for (c, sup) in prog.check_support(sector).iter().enumerate() {
            let odd = sup
                .iter()
                .filter(|&&q| residual.binary_search(&(q as usize)).is_ok())
                .count()
                % 2
                == 1;
            if odd {
                flips.push((self.t_rounds, c));
            }
        }
        flips.sort_unstable();
        Ok((flips, residual))
    }
}

/// Defects and residual code-qubit error left by a single fault in an
/// otherwise noiseless run, computed by full frame simulation.
pub fn inject_single_fault(sim: &CircuitSim<'_>, sector: Sector, fault: &Fault) -> Result<(DefectSet, PauliOperator)> {
    let (start, end) = sim.window();
    if fault.round < start || fault.round >= end {
        return Err(Error::InvalidFault(format!("round {} outside window", fault.round)));
    }
    let locs = sim.program.locations(fault.round);
    if !locs.iter().any(|l| l.op as usize == fault.op && l.kind == fault.kind) {
        return Err(Error::InvalidFault(format!(
            "no {:?} location at operation {} of round {}",
            fault.kind, fault.op, fault.round
        )));
    }
    if !sim.tracking.sectors().contains(&sector) {
        return Err(Error::InvalidArgument(format!("sector {sector:?} is not tracked")));
    }
    let rec = sim.simulate_faults(None, std::slice::from_ref(fault));
    let history = rec.history(sector).expect("tracked sector");
    let defects = crate::lattice::defects_from_history(history);
    let n = rec.accumulated.n_qubits();
    let residual = match sector {
        PauliKind::X => PauliOperator::x_on(n, rec.accumulated.x_support()),
        PauliKind::Z => PauliOperator::z_on(n, rec.accumulated.z_support()),
    };
    Ok((defects, residual))
}
