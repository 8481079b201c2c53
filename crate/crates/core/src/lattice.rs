//! Decoding graphs.
//!
//! The 2D lattice has one node per check of a sector and one edge per code
//! qubit. The 3D lattice has nodes `(t, check)` for `t` in `0..=T` and edges
//! found by enumerating every single fault of the readout circuit; the edge
//! prior is the total probability of the faults producing that defect pair.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::circuit::{CircuitSim, Fault, FaultKind, Program, SyndromeHistory, Tracking};
use crate::code::{Sector, SubsystemCode};
use crate::error::{Error, Result};

/// Marker for the boundary endpoint of an edge.
pub const BOUNDARY: usize = usize::MAX;

/// Priors are kept inside this range before taking logarithms.
pub const PRIOR_FLOOR: f64 = 1e-12;
pub const PRIOR_CEIL: f64 = 0.5;

/// Defects as node ids `t * n_checks + check`, sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DefectSet {
    pub n_checks: usize,
    pub layers: usize,
    pub nodes: Vec<usize>,
}

impl DefectSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(t, check)` coordinates of each defect.
    pub fn coords(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .map(|&n| (n / self.n_checks, n % self.n_checks))
            .collect()
    }
}

/// Node `(t, c)` is a defect iff `s_c(t-1) != s_c(t)`, with `s_c(-1) = 0`.
pub fn defects_from_history(history: &SyndromeHistory) -> DefectSet {
    let nc = history.n_checks;
    let mut nodes = Vec::new();
    for t in 0..history.layers() {
        let cur = history.layer(t);
        for c in 0..nc {
            let prev = if t == 0 { 0 } else { history.bits[(t - 1) * nc + c] };
            if cur[c] != prev {
                nodes.push(t * nc + c);
            }
        }
    }
    DefectSet {
        n_checks: nc,
        layers: history.layers(),
        nodes,
    }
}

/// Defects from a sparse list of flipped syndrome bits.
pub fn defects_from_flips(flips: &[(usize, usize)], n_checks: usize, t_rounds: usize) -> DefectSet {
    let mut set: BTreeMap<usize, bool> = BTreeMap::new();
    let mut toggle = |n: usize| {
        let e = set.entry(n).or_insert(false);
        *e = !*e;
    };
    for &(t, c) in flips {
        toggle(t * n_checks + c);
        if t < t_rounds {
            toggle((t + 1) * n_checks + c);
        }
    }
    DefectSet {
        n_checks,
        layers: t_rounds + 1,
        nodes: set.into_iter().filter(|&(_, v)| v).map(|(k, _)| k).collect(),
    }
}

/// Number of single faults of each kind merged into an edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FaultCounts {
    pub gate: u32,
    pub measurement: u32,
    pub preparation: u32,
    pub parity_outcome: u32,
    pub parity_data: u32,
}

impl FaultCounts {
    fn add(&mut self, kind: FaultKind) {
        match kind {
            FaultKind::Gate => self.gate += 1,
            FaultKind::Measurement => self.measurement += 1,
            FaultKind::Preparation => self.preparation += 1,
            FaultKind::ParityOutcome => self.parity_outcome += 1,
            FaultKind::ParityData => self.parity_data += 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeEdge {
    pub a: usize,
    /// Second endpoint or [`BOUNDARY`].
    pub b: usize,
    /// Prior divided by the error rate.
    pub coeff: f64,
    pub prior: f64,
    pub weight: f64,
    /// Code qubits flipped when the decoder uses this edge.
    pub correction: Vec<usize>,
    pub counts: FaultCounts,
}

impl LatticeEdge {
    pub fn other(&self, node: usize) -> usize {
        if self.a == node {
            self.b
        } else {
            self.a
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.b == BOUNDARY
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LatticeKind {
    TwoD,
    ThreeD,
}

#[derive(Clone, Debug, Serialize)]
pub struct VirtualLattice {
    pub kind: LatticeKind,
    pub sector: Sector,
    pub n_checks: usize,
    pub layers: usize,
    pub edges: Vec<LatticeEdge>,
    /// Edge indices incident to each node.
    pub adjacency: Vec<Vec<u32>>,
    /// Code qubits whose single error no check detects (2D only).
    pub undetected_qubits: Vec<usize>,
}

impl VirtualLattice {
    pub fn n_nodes(&self) -> usize {
        self.n_checks * self.layers
    }

    pub fn has_boundary(&self) -> bool {
        self.edges.iter().any(|e| e.is_boundary())
    }

    fn index(&mut self) {
        self.adjacency = vec![Vec::new(); self.n_nodes()];
        for (i, e) in self.edges.iter().enumerate() {
            self.adjacency[e.a].push(i as u32);
            if e.b != BOUNDARY && e.b != e.a {
                self.adjacency[e.b].push(i as u32);
            }
        }
    }

    /// Copy with priors `coeff * p` (clamped) and weights `-ln(prior)`.
    /// 2D lattices keep unit weights.
    pub fn with_rate(&self, p: f64) -> VirtualLattice {
        let mut out = self.clone();
        for e in out.edges.iter_mut() {
            e.prior = (e.coeff * p).clamp(PRIOR_FLOOR, PRIOR_CEIL);
            e.weight = match self.kind {
                LatticeKind::TwoD => 1.0,
                LatticeKind::ThreeD => -e.prior.ln(),
            };
        }
        out
    }

    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node / self.n_checks, node % self.n_checks)
    }

    /// CSV rows `node_a,node_b,prior,weight,correction`; the boundary is `B`
    /// and correction qubits are space separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_a,node_b,prior,weight,correction\n");
        for e in &self.edges {
            let b = if e.is_boundary() {
                "B".to_string()
            } else {
                e.b.to_string()
            };
            let corr: Vec<String> = e.correction.iter().map(|q| q.to_string()).collect();
            let _ = writeln!(out, "{},{},{:.6e},{:.6},{}", e.a, b, e.prior, e.weight, corr.join(" "));
        }
        out
    }

    /// Parses the format written by [`VirtualLattice::to_csv`].
    pub fn from_csv(text: &str, sector: Sector, n_checks: usize, layers: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::InvalidArgument(format!("line {}: expected 5 columns", i + 1)));
            }
            let num = |s: &str| -> Result<usize> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("line {}: bad node '{s}'", i + 1)))
            };
            let a = num(cols[0])?;
            let b = if cols[1].trim() == "B" { BOUNDARY } else { num(cols[1])? };
            let prior: f64 = cols[2]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("line {}: bad prior", i + 1)))?;
            let weight: f64 = cols[3]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("line {}: bad weight", i + 1)))?;
            let correction = cols[4].split_whitespace().map(num).collect::<Result<Vec<_>>>()?;
            if a >= n_checks * layers || (b != BOUNDARY && b >= n_checks * layers) {
                return Err(Error::InvalidArgument(format!("line {}: node out of range", i + 1)));
            }
            edges.push(LatticeEdge {
                a,
                b,
                coeff: prior,
                prior,
                weight,
                correction,
                counts: FaultCounts::default(),
            });
        }
        let mut lat = VirtualLattice {
            kind: if layers == 1 {
                LatticeKind::TwoD
            } else {
                LatticeKind::ThreeD
            },
            sector,
            n_checks,
            layers,
            edges,
            adjacency: Vec::new(),
            undetected_qubits: Vec::new(),
        };
        lat.index();
        Ok(lat)
    }
}

/// Checks containing each code qubit, for errors of the given sector.
fn qubit_checks(code: &SubsystemCode, sector: Sector) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); code.n_qubits()];
    for (c, op) in code.sector_checks(sector).iter().enumerate() {
        for q in op.support() {
            out[q].push(c);
        }
    }
    out
}

/// 2D lattice for perfect syndromes: one edge per code qubit between the
/// checks it violates, or to the boundary if it violates only one.
pub fn build_2d(code: &SubsystemCode, sector: Sector) -> Result<VirtualLattice> {
    let checks = qubit_checks(code, sector);
    let n_checks = code.sector_checks(sector).len();
    let mut edges = Vec::with_capacity(code.n_qubits());
    let mut undetected = Vec::new();
    for (q, cs) in checks.iter().enumerate() {
        let (a, b) = match cs.as_slice() {
            [] => {
                undetected.push(q);
                continue;
            }
            [a] => (*a, BOUNDARY),
            [a, b] => (*a, *b),
            _ => return Err(Error::Construction(format!("qubit {q} violates {} checks", cs.len()))),
        };
        edges.push(LatticeEdge {
            a,
            b,
            coeff: 1.0,
            prior: 0.0,
            weight: 1.0,
            correction: vec![q],
            counts: FaultCounts::default(),
        });
    }
    let mut lat = VirtualLattice {
        kind: LatticeKind::TwoD,
        sector,
        n_checks,
        layers: 1,
        edges,
        adjacency: Vec::new(),
        undetected_qubits: undetected,
    };
    lat.index();
    Ok(lat)
}

/// Probability bookkeeping of a fault enumeration, in units of `p`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EnumerationStats {
    pub locations: BTreeMap<String, usize>,
    pub faults: usize,
    pub total_mass: f64,
    pub edge_mass: f64,
    pub silent_mass: f64,
    pub max_defects: usize,
}

impl EnumerationStats {
    /// Mass expected from the location counts and the per-kind sector rates.
    pub fn expected_mass(&self) -> f64 {
        self.locations
            .iter()
            .map(|(k, &n)| {
                let per = match k.as_str() {
                    "Gate" => 0.75,
                    "ParityData" => 1.5,
                    _ => 1.0,
                };
                per * n as f64
            })
            .sum()
    }
}

/// One enumerated fault and its effect.
#[derive(Clone, Debug, Serialize)]
pub struct FaultEffect {
    pub fault: Fault,
    /// Probability in units of `p`.
    pub weight: f64,
    pub defects: Vec<usize>,
    pub residual: Vec<usize>,
}

/// Every sector-relevant single fault of the window with its defects and
/// residual, using sparse propagation.
pub fn enumerate_faults(
    program: &Program,
    t_rounds: usize,
    sector: Sector,
) -> Result<(Vec<FaultEffect>, EnumerationStats)> {
    let sim = CircuitSim::new(program, t_rounds, Tracking::from(sector))?;
    let nc = program.n_checks();
    let mut out = Vec::new();
    let mut stats = EnumerationStats::default();
    for (round, loc) in sim.fault_locations() {
        *stats.locations.entry(format!("{:?}", loc.kind)).or_insert(0) += 1;
        for &(pauli, weight) in sim.sector_variants(sector, loc.kind) {
            let fault = Fault {
                kind: loc.kind,
                round,
                op: loc.op as usize,
                pauli,
            };
            let (flips, residual) = sim.propagate(sector, &fault)?;
            let defects = defects_from_flips(&flips, nc, t_rounds).nodes;
            stats.faults += 1;
            stats.total_mass += weight;
            stats.max_defects = stats.max_defects.max(defects.len());
            out.push(FaultEffect {
                fault,
                weight,
                defects,
                residual,
            });
        }
    }
    Ok((out, stats))
}

/// 3D lattice from exhaustive single-fault enumeration. Priors are stored as
/// coefficients of `p`; call [`VirtualLattice::with_rate`] before decoding.
pub fn build_3d(
    code: &SubsystemCode,
    program: &Program,
    t_rounds: usize,
    sector: Sector,
) -> Result<(VirtualLattice, EnumerationStats)> {
    let (effects, mut stats) = enumerate_faults(program, t_rounds, sector)?;
    let nc = program.n_checks();
    let lat2d = build_2d(code, sector)?;
    let mut spatial: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for e in &lat2d.edges {
        let key = (e.a.min(e.b), e.a.max(e.b));
        spatial.entry(key).or_default().push(e.correction[0]);
    }
    let checks: Vec<Vec<usize>> = code.sector_checks(sector).iter().map(|o| o.support()).collect();
    let judges: Vec<Vec<usize>> = code.sector_judges(sector).iter().map(|o| o.support()).collect();
    let is_trivial = |support: &[usize]| {
        let overlap = |s: &Vec<usize>| s.iter().filter(|q| support.binary_search(q).is_ok()).count() % 2;
        checks.iter().all(|c| overlap(c) == 0) && judges.iter().all(|j| overlap(j) == 0)
    };
    let xor = |a: &[usize], b: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
        v.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < v.len() {
            if i + 1 < v.len() && v[i] == v[i + 1] {
                i += 2;
            } else {
                out.push(v[i]);
                i += 1;
            }
        }
        out
    };

    let mut acc: BTreeMap<(usize, usize), LatticeEdge> = BTreeMap::new();
    for fe in &effects {
        match fe.defects.len() {
            0 => {
                if !is_trivial(&fe.residual) {
                    return Err(Error::Construction(format!(
                        "fault {:?} flips a logical without creating defects",
                        fe.fault
                    )));
                }
                stats.silent_mass += fe.weight;
            }
            2 => {
                let (a, b) = (fe.defects[0], fe.defects[1]);
                let (ca, cb) = (a % nc, b % nc);
                let edge = acc.entry((a, b)).or_insert_with(|| LatticeEdge {
                    a,
                    b,
                    coeff: 0.0,
                    prior: 0.0,
                    weight: 0.0,
                    correction: Vec::new(),
                    counts: FaultCounts::default(),
                });
                if edge.coeff == 0.0 {
                    // pick the representative consistent with this fault
                    let candidates: Vec<Vec<usize>> = if ca == cb {
                        vec![Vec::new()]
                    } else {
                        spatial
                            .get(&(ca.min(cb), ca.max(cb)))
                            .ok_or_else(|| {
                                Error::Construction(format!(
                                    "fault {:?} links checks {ca} and {cb}, which share no qubit",
                                    fe.fault
                                ))
                            })?
                            .iter()
                            .map(|&q| vec![q])
                            .collect()
                    };
                    edge.correction = candidates
                        .into_iter()
                        .find(|rep| is_trivial(&xor(rep, &fe.residual)))
                        .ok_or_else(|| {
                            Error::Construction(format!("no gauge-equivalent correction for fault {:?}", fe.fault))
                        })?;
                } else if !is_trivial(&xor(&edge.correction, &fe.residual)) {
                    return Err(Error::Construction(format!(
                        "fault {:?} is inequivalent to the other faults of edge ({a},{b})",
                        fe.fault
                    )));
                }
                edge.coeff += fe.weight;
                edge.counts.add(fe.fault.kind);
                stats.edge_mass += fe.weight;
            }
            k => {
                return Err(Error::Construction(format!(
                    "fault {:?} produced {k} defects",
                    fe.fault
                )))
            }
        }
    }
    let mut lat = VirtualLattice {
        kind: LatticeKind::ThreeD,
        sector,
        n_checks: nc,
        layers: t_rounds + 1,
        edges: acc.into_values().collect(),
        adjacency: Vec::new(),
        undetected_qubits: Vec::new(),
    };
    lat.index();
    Ok((lat, stats))
}

/// Displacement class of an edge of a toric 3D lattice as seen from `node`:
/// `(d_row, d_col, d_t)` with spatial offsets reduced to `(-L/2, L/2]`.
pub fn edge_offset(lat: &VirtualLattice, l: usize, node: usize, edge: &LatticeEdge) -> (i64, i64, i64) {
    let other = edge.other(node);
    let (t1, c1) = lat.node_coords(node);
    let (t2, c2) = lat.node_coords(other);
    let wrap = |d: i64| {
        let li = l as i64;
        let m = d.rem_euclid(li);
        if m > li / 2 {
            m - li
        } else {
            m
        }
    };
    let (r1, k1) = ((c1 / l) as i64, (c1 % l) as i64);
    let (r2, k2) = ((c2 / l) as i64, (c2 % l) as i64);
    (wrap(r2 - r1), wrap(k2 - k1), t2 as i64 - t1 as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build, Geometry, PauliKind};

    #[test]
    fn flipped_bit_gives_two_defects() {
        let mut h = SyndromeHistory::new(PauliKind::X, 4, 3);
        h.toggle(1, 2);
        let d = defects_from_history(&h);
        assert_eq!(d.coords(), vec![(1, 2), (2, 2)]);
        assert_eq!(defects_from_flips(&[(1, 2)], 4, 3), d);
    }

    #[test]
    fn trivial_history_has_no_defects() {
        let h = SyndromeHistory::new(PauliKind::X, 9, 4);
        assert!(defects_from_history(&h).is_empty());
    }

    #[test]
    fn toric_2d_counts() {
        for l in 3..6 {
            let code = build(l, Geometry::Toric).unwrap();
            let lat = build_2d(&code, PauliKind::X).unwrap();
            assert_eq!(lat.n_nodes(), l * l);
            assert_eq!(lat.edges.len(), 3 * l * l);
            assert!(lat.adjacency.iter().all(|a| a.len() == 6));
        }
    }

    #[test]
    fn csv_roundtrip() {
        let code = build(3, Geometry::Planar).unwrap();
        let lat = build_2d(&code, PauliKind::X).unwrap().with_rate(0.1);
        let back = VirtualLattice::from_csv(&lat.to_csv(), PauliKind::X, lat.n_checks, 1).unwrap();
        assert_eq!(back.edges.len(), lat.edges.len());
        for (a, b) in back.edges.iter().zip(&lat.edges) {
            assert_eq!((a.a, a.b, &a.correction), (b.a, b.b, &b.correction));
        }
    }
}
