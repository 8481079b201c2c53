//! Construction of the subsystem toric code and the planar subsystem surface code.
//!
//! Coordinates: plaquette `(r, c)` has its north-west corner at vertex `(r, c)`;
//! rows grow southward and columns eastward. Horizontal edge `h(r, c)` joins
//! vertices `(r, c)` and `(r, c+1)`; vertical edge `v(r, c)` joins `(r, c)` and
//! `(r+1, c)`. On the torus all coordinates wrap modulo `L`.
//!
//! Each plaquette carries four triangles. A triangle is a vertex plus the two
//! plaquette edges incident to it; SW and NE triangles carry `XXX`, SE and NW
//! triangles carry `ZZZ`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{gf2_rank, Gf2Basis, PauliOperator};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Toric,
    Planar,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Toric => write!(f, "toric"),
            Geometry::Planar => write!(f, "planar"),
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toric" => Ok(Geometry::Toric),
            "planar" => Ok(Geometry::Planar),
            _ => Err(Error::InvalidArgument(format!("unknown geometry '{s}'"))),
        }
    }
}

/// Kind of Pauli a check or error is made of.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Z,
}

impl PauliKind {
    pub fn opposite(self) -> Self {
        match self {
            PauliKind::X => PauliKind::Z,
            PauliKind::Z => PauliKind::X,
        }
    }
}

/// Error type tracked by a decoder; X errors are detected by Z checks and vice versa.
pub type Sector = PauliKind;

/// A lattice site carrying a qubit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Site {
    Vertex { row: usize, col: usize },
    HEdge { row: usize, col: usize },
    VEdge { row: usize, col: usize },
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Vertex { row, col } => write!(f, "vertex({row},{col})"),
            Site::HEdge { row, col } => write!(f, "h({row},{col})"),
            Site::VEdge { row, col } => write!(f, "v({row},{col})"),
        }
    }
}

impl Site {
    pub fn role(&self) -> Role {
        match self {
            Site::Vertex { .. } => Role::Vertex,
            Site::HEdge { .. } => Role::HEdge,
            Site::VEdge { .. } => Role::VEdge,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TriangleKind {
    NW,
    NE,
    SW,
    SE,
}

impl TriangleKind {
    pub const ALL: [TriangleKind; 4] = [TriangleKind::NW, TriangleKind::NE, TriangleKind::SW, TriangleKind::SE];

    pub fn pauli_kind(self) -> PauliKind {
        match self {
            TriangleKind::SW | TriangleKind::NE => PauliKind::X,
            TriangleKind::SE | TriangleKind::NW => PauliKind::Z,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Offsets (row, col) of the triangle's vertex, its horizontal edge and its
    /// vertical edge relative to the plaquette's north-west vertex.
    fn offsets(self) -> [(usize, usize); 3] {
        match self {
            TriangleKind::NW => [(0, 0), (0, 0), (0, 0)],
            TriangleKind::NE => [(0, 1), (0, 0), (0, 1)],
            TriangleKind::SW => [(1, 0), (1, 0), (0, 0)],
            TriangleKind::SE => [(1, 1), (1, 0), (0, 1)],
        }
    }
}

impl fmt::Display for TriangleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Position of a qubit inside a triangle.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Role {
    Vertex,
    HEdge,
    VEdge,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Vertex, Role::HEdge, Role::VEdge];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Triangle {
    pub plaquette: (usize, usize),
    pub kind: TriangleKind,
    /// Qubits in role order: vertex, horizontal edge, vertical edge.
    pub qubits: [usize; 3],
    pub pauli_kind: PauliKind,
}

impl Triangle {
    pub fn qubit(&self, role: Role) -> usize {
        self.qubits[role.index()]
    }
}

/// Qubit indexing for one geometry and size.
#[derive(Clone, Debug, Serialize)]
pub struct CodeLayout {
    pub l: usize,
    pub geometry: Geometry,
    pub n_qubits: usize,
    pub sites: Vec<Site>,
}

impl CodeLayout {
    pub fn new(l: usize, geometry: Geometry) -> Result<Self> {
        if l < 2 {
            return Err(Error::UnsupportedSize(l, 2));
        }
        let mut layout = CodeLayout {
            l,
            geometry,
            n_qubits: 0,
            sites: Vec::new(),
        };
        let (vr, vc) = layout.vertex_dims();
        let (hr, hc) = layout.hedge_dims();
        let (er, ec) = layout.vedge_dims();
        for row in 0..vr {
            for col in 0..vc {
                layout.sites.push(Site::Vertex { row, col });
            }
        }
        for row in 0..hr {
            for col in 0..hc {
                layout.sites.push(Site::HEdge { row, col });
            }
        }
        for row in 0..er {
            for col in 0..ec {
                layout.sites.push(Site::VEdge { row, col });
            }
        }
        layout.n_qubits = layout.sites.len();
        Ok(layout)
    }

    fn vertex_dims(&self) -> (usize, usize) {
        match self.geometry {
            Geometry::Toric => (self.l, self.l),
            Geometry::Planar => (self.l + 1, self.l + 1),
        }
    }

    fn hedge_dims(&self) -> (usize, usize) {
        match self.geometry {
            Geometry::Toric => (self.l, self.l),
            Geometry::Planar => (self.l + 1, self.l),
        }
    }

    fn vedge_dims(&self) -> (usize, usize) {
        match self.geometry {
            Geometry::Toric => (self.l, self.l),
            Geometry::Planar => (self.l, self.l + 1),
        }
    }

    pub fn n_plaquettes(&self) -> usize {
        self.l * self.l
    }

    pub fn plaquette_index(&self, row: usize, col: usize) -> usize {
        row * self.l + col
    }

    pub fn plaquette_coords(&self, p: usize) -> (usize, usize) {
        (p / self.l, p % self.l)
    }

    /// Plaquette at a signed offset from `(row, col)`; wraps on the torus,
    /// `None` outside the planar patch.
    pub fn plaquette_at(&self, row: i64, col: i64) -> Option<usize> {
        let l = self.l as i64;
        match self.geometry {
            Geometry::Toric => Some(self.plaquette_index(row.rem_euclid(l) as usize, col.rem_euclid(l) as usize)),
            Geometry::Planar => {
                if (0..l).contains(&row) && (0..l).contains(&col) {
                    Some(self.plaquette_index(row as usize, col as usize))
                } else {
                    None
                }
            }
        }
    }

    fn wrap(&self, row: i64, col: i64, dims: (usize, usize)) -> Option<(usize, usize)> {
        match self.geometry {
            Geometry::Toric => {
                let l = self.l as i64;
                Some((row.rem_euclid(l) as usize, col.rem_euclid(l) as usize))
            }
            Geometry::Planar => {
                if row >= 0 && col >= 0 && (row as usize) < dims.0 && (col as usize) < dims.1 {
                    Some((row as usize, col as usize))
                } else {
                    None
                }
            }
        }
    }

    pub fn vertex(&self, row: i64, col: i64) -> Option<usize> {
        let dims = self.vertex_dims();
        self.wrap(row, col, dims).map(|(r, c)| r * dims.1 + c)
    }

    pub fn hedge(&self, row: i64, col: i64) -> Option<usize> {
        let dims = self.hedge_dims();
        let base = self.vertex_dims().0 * self.vertex_dims().1;
        self.wrap(row, col, dims).map(|(r, c)| base + r * dims.1 + c)
    }

    pub fn vedge(&self, row: i64, col: i64) -> Option<usize> {
        let dims = self.vedge_dims();
        let base = self.vertex_dims().0 * self.vertex_dims().1 + self.hedge_dims().0 * self.hedge_dims().1;
        self.wrap(row, col, dims).map(|(r, c)| base + r * dims.1 + c)
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        let within = |r: usize, c: usize, d: (usize, usize)| r < d.0 && c < d.1;
        match site {
            Site::Vertex { row, col } if within(row, col, self.vertex_dims()) => self.vertex(row as i64, col as i64),
            Site::HEdge { row, col } if within(row, col, self.hedge_dims()) => self.hedge(row as i64, col as i64),
            Site::VEdge { row, col } if within(row, col, self.vedge_dims()) => self.vedge(row as i64, col as i64),
            _ => None,
        }
    }

    pub fn site(&self, q: usize) -> Site {
        self.sites[q]
    }
}

/// Boundary stabilizer of the planar code, attached to a boundary edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryStabilizer {
    pub edge: Site,
    pub op: PauliOperator,
}

/// Stabilizer, gauge and logical operator lists.
#[derive(Clone, Debug)]
pub struct CodeGroups {
    /// `S^X_p`, indexed by plaquette.
    pub stabilizers_x: Vec<PauliOperator>,
    /// `S^Z_p`, indexed by plaquette.
    pub stabilizers_z: Vec<PauliOperator>,
    /// Weight-2 XX boundary stabilizers (planar).
    pub boundary_x: Vec<BoundaryStabilizer>,
    /// Weight-2 ZZ boundary stabilizers (planar).
    pub boundary_z: Vec<BoundaryStabilizer>,
    /// Gauge-qubit X operators, `G(T^SW_p)`.
    pub gauge_x: Vec<PauliOperator>,
    /// Gauge-qubit Z operators, `G(T^SE_p)`.
    pub gauge_z: Vec<PauliOperator>,
    pub logical_x: Vec<PauliOperator>,
    pub logical_z: Vec<PauliOperator>,
}

/// A fully built code: layout, triangles and operator groups.
#[derive(Clone, Debug)]
pub struct SubsystemCode {
    pub layout: CodeLayout,
    /// Triangles, four per plaquette, ordered by plaquette then `TriangleKind`.
    pub triangles: Vec<Triangle>,
    pub groups: CodeGroups,
}

pub fn build(l: usize, geometry: Geometry) -> Result<SubsystemCode> {
    let layout = CodeLayout::new(l, geometry)?;
    let n = layout.n_qubits;

    let mut triangles = Vec::with_capacity(4 * l * l);
    for r in 0..l {
        for c in 0..l {
            for kind in TriangleKind::ALL {
                let [ov, oh, oe] = kind.offsets();
                let (ri, ci) = (r as i64, c as i64);
                let qubits = [
                    layout.vertex(ri + ov.0 as i64, ci + ov.1 as i64),
                    layout.hedge(ri + oh.0 as i64, ci + oh.1 as i64),
                    layout.vedge(ri + oe.0 as i64, ci + oe.1 as i64),
                ];
                let qubits = [
                    qubits[0].expect("triangle vertex inside the lattice"),
                    qubits[1].expect("triangle h-edge inside the lattice"),
                    qubits[2].expect("triangle v-edge inside the lattice"),
                ];
                triangles.push(Triangle {
                    plaquette: (r, c),
                    kind,
                    qubits,
                    pauli_kind: kind.pauli_kind(),
                });
            }
        }
    }

    let tri = |p: usize, kind: TriangleKind| &triangles[4 * p + kind.index()];
    let op_of = |t: &Triangle| triangle_operator(n, t);

    let mut stabilizers_x = Vec::with_capacity(l * l);
    let mut stabilizers_z = Vec::with_capacity(l * l);
    let mut gauge_x = Vec::with_capacity(l * l);
    let mut gauge_z = Vec::with_capacity(l * l);
    for p in 0..l * l {
        let sw = op_of(tri(p, TriangleKind::SW));
        let ne = op_of(tri(p, TriangleKind::NE));
        let se = op_of(tri(p, TriangleKind::SE));
        let nw = op_of(tri(p, TriangleKind::NW));
        stabilizers_x.push(sw.multiply(&ne)?);
        stabilizers_z.push(se.multiply(&nw)?);
        gauge_x.push(sw);
        gauge_z.push(se);
    }

    let li = l as i64;
    let mut boundary_x = Vec::new();
    let mut boundary_z = Vec::new();
    if geometry == Geometry::Planar {
        // XX terms run along the left and right sides, ZZ terms along the top and
        // bottom. At the south-west and south-east corners the last edge takes the
        // other type: with uniform sides every boundary-to-boundary string needs
        // L+1 qubits, while this placement gives distance L.
        let v = |r: i64, c: i64| layout.vertex(r, c).unwrap();
        for r in 0..li {
            let e = layout.vedge(r, 0).unwrap();
            let edge = Site::VEdge {
                row: r as usize,
                col: 0,
            };
            if r < li - 1 {
                boundary_x.push(BoundaryStabilizer {
                    edge,
                    op: PauliOperator::x_on(n, [e, v(r, 0)]),
                });
            } else {
                boundary_z.push(BoundaryStabilizer {
                    edge,
                    op: PauliOperator::z_on(n, [e, v(r + 1, 0)]),
                });
            }
        }
        for r in 0..li {
            let e = layout.vedge(r, li).unwrap();
            let edge = Site::VEdge {
                row: r as usize,
                col: l,
            };
            boundary_x.push(BoundaryStabilizer {
                edge,
                op: PauliOperator::x_on(n, [e, v(r + 1, li)]),
            });
        }
        for c in 0..li {
            let e = layout.hedge(0, c).unwrap();
            let edge = Site::HEdge {
                row: 0,
                col: c as usize,
            };
            boundary_z.push(BoundaryStabilizer {
                edge,
                op: PauliOperator::z_on(n, [e, v(0, c + 1)]),
            });
        }
        for c in 0..li {
            let e = layout.hedge(li, c).unwrap();
            let edge = Site::HEdge {
                row: l,
                col: c as usize,
            };
            if c < li - 1 {
                boundary_z.push(BoundaryStabilizer {
                    edge,
                    op: PauliOperator::z_on(n, [e, v(li, c)]),
                });
            } else {
                boundary_x.push(BoundaryStabilizer {
                    edge,
                    op: PauliOperator::x_on(n, [e, v(li, c + 1)]),
                });
            }
        }
    }

    // Gamma: row 0 (vertices and horizontal edges); Lambda: column 0 (vertices and vertical edges).
    let (vr, vc) = layout.vertex_dims();
    let (_, hc) = layout.hedge_dims();
    let (er, _) = layout.vedge_dims();
    let gamma: Vec<usize> = (0..vc as i64)
        .map(|c| layout.vertex(0, c).unwrap())
        .chain((0..hc as i64).map(|c| layout.hedge(0, c).unwrap()))
        .collect();
    let lambda: Vec<usize> = (0..vr as i64)
        .map(|r| layout.vertex(r, 0).unwrap())
        .chain((0..er as i64).map(|r| layout.vedge(r, 0).unwrap()))
        .collect();

    let mut logical_x = vec![PauliOperator::x_on(n, gamma.iter().copied())];
    let mut logical_z = vec![PauliOperator::z_on(n, lambda.iter().copied())];
    if geometry == Geometry::Toric {
        logical_x.push(PauliOperator::x_on(n, lambda.iter().copied()));
        logical_z.push(PauliOperator::z_on(n, gamma.iter().copied()));
    }

    Ok(SubsystemCode {
        layout,
        triangles,
        groups: CodeGroups {
            stabilizers_x,
            stabilizers_z,
            boundary_x,
            boundary_z,
            gauge_x,
            gauge_z,
            logical_x,
            logical_z,
        },
    })
}

pub fn triangle_operator(n_qubits: usize, t: &Triangle) -> PauliOperator {
    match t.pauli_kind {
        PauliKind::X => PauliOperator::x_on(n_qubits, t.qubits),
        PauliKind::Z => PauliOperator::z_on(n_qubits, t.qubits),
    }
}

impl SubsystemCode {
    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits
    }

    pub fn l(&self) -> usize {
        self.layout.l
    }

    pub fn geometry(&self) -> Geometry {
        self.layout.geometry
    }

    pub fn triangle(&self, plaquette: usize, kind: TriangleKind) -> &Triangle {
        &self.triangles[4 * plaquette + kind.index()]
    }

    pub fn triangle_op(&self, t: &Triangle) -> PauliOperator {
        triangle_operator(self.n_qubits(), t)
    }

    /// All triangle operators of the given Pauli kind.
    pub fn triangle_ops(&self, kind: PauliKind) -> Vec<PauliOperator> {
        self.triangles
            .iter()
            .filter(|t| t.pauli_kind == kind)
            .map(|t| self.triangle_op(t))
            .collect()
    }

    /// Every stabilizer generator (plaquette and boundary), X first.
    pub fn all_stabilizers(&self) -> Vec<PauliOperator> {
        let g = &self.groups;
        g.stabilizers_x
            .iter()
            .chain(&g.stabilizers_z)
            .cloned()
            .chain(g.boundary_x.iter().map(|b| b.op.clone()))
            .chain(g.boundary_z.iter().map(|b| b.op.clone()))
            .collect()
    }

    /// Checks that detect errors of the given type: plaquette checks indexed by
    /// plaquette, followed by the matching boundary checks.
    pub fn sector_checks(&self, sector: Sector) -> Vec<PauliOperator> {
        let g = &self.groups;
        let (plaq, bdry) = match sector {
            PauliKind::X => (&g.stabilizers_z, &g.boundary_z),
            PauliKind::Z => (&g.stabilizers_x, &g.boundary_x),
        };
        plaq.iter().cloned().chain(bdry.iter().map(|b| b.op.clone())).collect()
    }

    /// Generators of the trivial class for errors of the given type: triangles of
    /// that type plus same-type boundary stabilizers.
    pub fn sector_trivial_generators(&self, sector: Sector) -> Vec<PauliOperator> {
        let bdry = match sector {
            PauliKind::X => &self.groups.boundary_x,
            PauliKind::Z => &self.groups.boundary_z,
        };
        let mut out = self.triangle_ops(sector);
        out.extend(bdry.iter().map(|b| b.op.clone()));
        out
    }

    /// Bare logicals whose commutation decides success for errors of this type.
    pub fn sector_judges(&self, sector: Sector) -> &[PauliOperator] {
        match sector {
            PauliKind::X => &self.groups.logical_z,
            PauliKind::Z => &self.groups.logical_x,
        }
    }

    /// Expected number of independent stabilizer generators.
    pub fn expected_stabilizer_rank(&self) -> usize {
        let l = self.l();
        match self.geometry() {
            Geometry::Toric => 2 * (l * l - 1),
            Geometry::Planar => 2 * l * l + 4 * l,
        }
    }

    pub fn expected_logical_qubits(&self) -> usize {
        match self.geometry() {
            Geometry::Toric => 2,
            Geometry::Planar => 1,
        }
    }
}

/// One named structural check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    /// GF(2) rank of the stabilizer group.
    pub s: usize,
    pub k_prime: usize,
    pub g: usize,
    pub k: usize,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn first_anticommuting(a: &[PauliOperator], b: &[PauliOperator]) -> Result<Option<(usize, usize)>> {
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if x.anticommutes(y)? {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Structural validation of a built code.
pub fn validate_code(code: &SubsystemCode) -> Result<ValidationReport> {
    let g = &code.groups;
    let n = code.n_qubits();
    let l = code.l();
    let stabs = code.all_stabilizers();
    let triangles: Vec<PauliOperator> = code.triangles.iter().map(|t| code.triangle_op(t)).collect();
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        })
    };

    // (a) stabilizers pairwise commute
    let mut bad = None;
    'outer: for i in 0..stabs.len() {
        for j in i + 1..stabs.len() {
            if stabs[i].anticommutes(&stabs[j])? {
                bad = Some((i, j));
                break 'outer;
            }
        }
    }
    push(
        "stabilizers_commute",
        bad.is_none(),
        match bad {
            Some((i, j)) => format!("stabilizer {} anticommutes with {}", stabs[i], stabs[j]),
            None => format!("{} generators", stabs.len()),
        },
    );

    // (b) triangles commute with every stabilizer
    let bad = first_anticommuting(&triangles, &stabs)?;
    push(
        "triangles_commute_with_stabilizers",
        bad.is_none(),
        match bad {
            Some((i, j)) => format!("triangle {} anticommutes with {}", triangles[i], stabs[j]),
            None => format!("{} triangles", triangles.len()),
        },
    );

    // (c) global product identities (torus only)
    if code.geometry() == Geometry::Toric {
        let mut px = PauliOperator::identity(n);
        for s in &g.stabilizers_x {
            px.mul_assign(s)?;
        }
        let mut pz = PauliOperator::identity(n);
        for s in &g.stabilizers_z {
            pz.mul_assign(s)?;
        }
        push(
            "global_products",
            px.is_identity() && pz.is_identity(),
            format!("prod S^X = {px}, prod S^Z = {pz}"),
        );
    }

    // (d) stabilizer rank
    let s = gf2_rank(n, &stabs)?;
    let expected_s = code.expected_stabilizer_rank();
    push(
        "stabilizer_rank",
        s == expected_s,
        format!("rank {s}, expected {expected_s}"),
    );

    // (e) counts: the gauge pairs must add 2g independent directions
    let k_prime = n - s;
    let mut basis = Gf2Basis::new(n);
    for op in &stabs {
        basis.insert(op)?;
    }
    for op in g.gauge_x.iter().chain(&g.gauge_z) {
        basis.insert(op)?;
    }
    let gauge_dim = basis.rank() - s;
    let gq = gauge_dim / 2;
    let k = k_prime.saturating_sub(gq);
    let expected_k = code.expected_logical_qubits();
    push(
        "derived_counts",
        gauge_dim % 2 == 0 && gq == l * l && k == expected_k && k_prime == l * l + expected_k,
        format!("k'={k_prime}, g={gq}, k={k}"),
    );

    // gauge pairs: X_p anticommutes with Z_q iff p == q
    let mut bad = None;
    'gp: for (p, xp) in g.gauge_x.iter().enumerate() {
        for (q, zq) in g.gauge_z.iter().enumerate() {
            if xp.anticommutes(zq)? != (p == q) {
                bad = Some((p, q));
                break 'gp;
            }
        }
    }
    push(
        "gauge_pairs",
        bad.is_none(),
        match bad {
            Some((p, q)) => format!("gauge X_{p} / Z_{q} have wrong commutation"),
            None => format!("{} pairs", g.gauge_x.len()),
        },
    );

    // (f) logical anticommutation pattern
    let mut ok = g.logical_x.len() == expected_k && g.logical_z.len() == expected_k;
    let mut detail = String::from("delta pattern");
    for (i, x) in g.logical_x.iter().enumerate() {
        for (j, z) in g.logical_z.iter().enumerate() {
            if x.anticommutes(z)? != (i == j) {
                ok = false;
                detail = format!("logical X_{} / Z_{} have wrong commutation", i + 1, j + 1);
            }
        }
    }
    push("logical_pattern", ok, detail);

    // (g) logicals commute with all triangles and stabilizers
    let logicals: Vec<PauliOperator> = g.logical_x.iter().chain(&g.logical_z).cloned().collect();
    let bad_t = first_anticommuting(&logicals, &triangles)?;
    let bad_s = first_anticommuting(&logicals, &stabs)?;
    push(
        "logicals_commute_with_gauge",
        bad_t.is_none() && bad_s.is_none(),
        match (bad_t, bad_s) {
            (Some((i, j)), _) => format!("logical {} anticommutes with {}", logicals[i], triangles[j]),
            (_, Some((i, j))) => format!("logical {} anticommutes with {}", logicals[i], stabs[j]),
            _ => "ok".to_string(),
        },
    );

    Ok(ValidationReport {
        n,
        s,
        k_prime,
        g: gq,
        k,
        checks,
    })
}

/// Largest instance accepted by [`distance_bruteforce`].
pub const BRUTEFORCE_MAX_QUBITS: usize = 24;

/// Minimum weight of a pure X (or Z) error that commutes with all opposite-type
/// stabilizers but is not generated by same-type gauge and stabilizer operators.
pub fn distance_bruteforce(code: &SubsystemCode, error_type: PauliKind) -> Result<usize> {
    let n = code.n_qubits();
    if n > BRUTEFORCE_MAX_QUBITS {
        return Err(Error::TooLarge(format!("{n} qubits exceeds {BRUTEFORCE_MAX_QUBITS}")));
    }
    min_logical_weight(code, error_type, n)?.ok_or_else(|| Error::Construction("no logical operator found".into()))
}

/// Exhaustive search for a nontrivial logical of weight at most `max_weight`.
///
/// Enumerates supports in order of increasing weight, so the cost is
/// `sum_w C(n, w)`; usable beyond [`BRUTEFORCE_MAX_QUBITS`] when the bound is small.
pub fn min_logical_weight(code: &SubsystemCode, error_type: PauliKind, max_weight: usize) -> Result<Option<usize>> {
    let n = code.n_qubits();
    if n > 128 {
        return Err(Error::TooLarge(format!("{n} qubits exceeds 128")));
    }
    let to_mask = |words: &[u64]| -> u128 {
        let lo = words[0] as u128;
        let hi = words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    };
    // support of the component that interacts with the error
    let check_mask = |op: &PauliOperator| match error_type {
        PauliKind::X => to_mask(op.z_words()),
        PauliKind::Z => to_mask(op.x_words()),
    };
    let own_mask = |op: &PauliOperator| match error_type {
        PauliKind::X => to_mask(op.x_words()),
        PauliKind::Z => to_mask(op.z_words()),
    };
    let checks: Vec<u128> = code.sector_checks(error_type).iter().map(check_mask).collect();

    let plaquette_stabs = match error_type {
        PauliKind::X => &code.groups.stabilizers_x,
        PauliKind::Z => &code.groups.stabilizers_z,
    };
    let mut basis = U128Basis::default();
    for op in code
        .sector_trivial_generators(error_type)
        .iter()
        .chain(plaquette_stabs.iter())
    {
        basis.insert(own_mask(op));
    }

    let mut support = Vec::with_capacity(max_weight);
    for w in 1..=max_weight.min(n) {
        support.clear();
        support.extend(0..w);
        loop {
            let m = support.iter().fold(0u128, |acc, &q| acc | (1u128 << q));
            if checks.iter().all(|&c| (c & m).count_ones() % 2 == 0) && basis.reduce(m) != 0 {
                return Ok(Some(w));
            }
            // next combination in lexicographic order
            let mut i = w;
            while i > 0 && support[i - 1] == n - w + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            support[i - 1] += 1;
            for j in i..w {
                support[j] = support[j - 1] + 1;
            }
        }
    }
    Ok(None)
}

/// Row-echelon basis of GF(2)^128 vectors keyed by highest set bit.
#[derive(Default)]
struct U128Basis {
    rows: Vec<u128>,
}

impl U128Basis {
    fn reduce(&self, mut v: u128) -> u128 {
        for &b in &self.rows {
            let pivot = 127 - b.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= b;
            }
        }
        v
    }

    fn insert(&mut self, v: u128) {
        let r = self.reduce(v);
        if r != 0 {
            let pos = self.rows.partition_point(|&b| b.leading_zeros() < r.leading_zeros());
            self.rows.insert(pos, r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_counts() {
        for l in 2..6 {
            let t = CodeLayout::new(l, Geometry::Toric).unwrap();
            assert_eq!(t.n_qubits, 3 * l * l);
            let p = CodeLayout::new(l, Geometry::Planar).unwrap();
            assert_eq!(p.n_qubits, 3 * l * l + 4 * l + 1);
        }
        assert!(matches!(
            CodeLayout::new(1, Geometry::Toric),
            Err(Error::UnsupportedSize(1, 2))
        ));
    }

    #[test]
    fn index_map_is_bijective() {
        for geometry in [Geometry::Toric, Geometry::Planar] {
            let layout = CodeLayout::new(4, geometry).unwrap();
            for (q, site) in layout.sites.iter().enumerate() {
                assert_eq!(layout.index_of(*site), Some(q));
            }
        }
    }

    #[test]
    fn small_toric_counts() {
        let code = build(2, Geometry::Toric).unwrap();
        assert_eq!(code.n_qubits(), 12);
        assert_eq!(code.triangles.len(), 16);
        assert_eq!(code.groups.stabilizers_x.len() + code.groups.stabilizers_z.len(), 8);
    }

    #[test]
    fn stabilizer_is_product_of_two_triangles() {
        let code = build(3, Geometry::Toric).unwrap();
        let p = code.layout.plaquette_index(1, 1);
        let sw = code.triangle_op(code.triangle(p, TriangleKind::SW));
        let ne = code.triangle_op(code.triangle(p, TriangleKind::NE));
        let s = sw.multiply(&ne).unwrap();
        assert_eq!(s.weight(), 6);
        assert_eq!(s, code.groups.stabilizers_x[p]);
    }

    #[test]
    fn triangle_qubits_are_distinct() {
        for geometry in [Geometry::Toric, Geometry::Planar] {
            let code = build(3, geometry).unwrap();
            for t in &code.triangles {
                let q = t.qubits;
                assert!(q[0] != q[1] && q[1] != q[2] && q[0] != q[2]);
            }
        }
    }

    #[test]
    fn planar_boundary_counts() {
        let code = build(2, Geometry::Planar).unwrap();
        assert_eq!(code.n_qubits(), 21);
        assert_eq!(code.groups.boundary_x.len() + code.groups.boundary_z.len(), 8);
        for b in code.groups.boundary_x.iter().chain(&code.groups.boundary_z) {
            assert_eq!(b.op.weight(), 2);
        }
    }

    #[test]
    fn corrupted_stabilizer_is_caught() {
        let mut code = build(3, Geometry::Toric).unwrap();
        let q = code.groups.stabilizers_x[0].support()[0];
        let flip = PauliOperator::z_on(code.n_qubits(), [q]);
        code.groups.stabilizers_x[0].mul_assign(&flip).unwrap();
        let report = validate_code(&code).unwrap();
        assert!(!report.passed());
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"stabilizers_commute") || names.contains(&"triangles_commute_with_stabilizers"));
    }

    #[test]
    fn bruteforce_refuses_large_codes() {
        let code = build(3, Geometry::Toric).unwrap();
        assert!(matches!(
            distance_bruteforce(&code, PauliKind::X),
            Err(Error::TooLarge(_))
        ));
    }
}
