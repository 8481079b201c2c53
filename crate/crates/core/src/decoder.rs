//! Minimum-weight perfect matching of defects on a virtual lattice.
//!
//! Edge weights are quantized to integers (`WEIGHT_SCALE` units per nat) so that
//! the blossom solver runs exactly. Toric lattices are decoded on a sparse
//! candidate graph of nearby defects whose optimality on the complete graph is
//! certified by the matching duals; lattices with a boundary use the complete
//! graph with one boundary twin per defect.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::blossom::{max_weight_matching, min_weight_perfect_matching};
use crate::code::{PauliKind, Sector, SubsystemCode};
use crate::error::{Error, Result};
use crate::lattice::{DefectSet, VirtualLattice, BOUNDARY};
use crate::pauli::{in_span, PauliOperator};

pub const WEIGHT_SCALE: f64 = 10_000.0;
const INF: i64 = i64::MAX / 8;
const INITIAL_NEIGHBORS: usize = 6;

/// Complete-graph reduction of a decoding instance.
#[derive(Clone, Debug, Serialize)]
pub struct MatchingProblem {
    /// Lattice node of each defect.
    pub defects: Vec<usize>,
    /// Row-major `n x n` geodesic distances.
    pub dist: Vec<i64>,
    /// Distance from each defect to the nearest boundary, if the lattice has one.
    pub boundary: Option<Vec<i64>>,
}

impl MatchingProblem {
    pub fn len(&self) -> usize {
        self.defects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> i64 {
        self.dist[i * self.defects.len() + j]
    }

    /// Total weight of a matching; `None` partners denote the boundary.
    pub fn weight_of(&self, pairs: &[(usize, Option<usize>)]) -> i64 {
        pairs
            .iter()
            .map(|&(i, j)| match j {
                Some(j) => self.d(i, j),
                None => self.boundary.as_ref().map_or(INF, |b| b[i]),
            })
            .sum()
    }
}

/// Output of the decoder.
#[derive(Clone, Debug)]
pub struct Correction {
    /// Matched defect nodes; `None` is the boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: i64,
    pub operator: PauliOperator,
}

#[derive(Clone, Debug)]
pub struct Decoder {
    lattice: VirtualLattice,
    n_qubits: usize,
    /// Integer weight per lattice edge.
    weights: Vec<i64>,
    /// Node adjacency `(neighbor, edge)`; the boundary is node `n_nodes`.
    adj: Vec<Vec<(u32, u32)>>,
    boundary: bool,
}

impl Decoder {
    /// Prepares a decoder for a lattice whose weights are already set.
    pub fn new(lattice: &VirtualLattice, n_qubits: usize) -> Result<Self> {
        let n = lattice.n_nodes();
        let mut adj = vec![Vec::new(); n + 1];
        let mut weights = Vec::with_capacity(lattice.edges.len());
        for (k, e) in lattice.edges.iter().enumerate() {
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::InvalidArgument(format!("edge {k} has weight {}", e.weight)));
            }
            if e.correction.iter().any(|&q| q >= n_qubits) {
                return Err(Error::IndexOutOfRange {
                    index: *e.correction.iter().max().unwrap(),
                    n_qubits,
                });
            }
            weights.push(((e.weight * WEIGHT_SCALE).round() as i64).max(1));
            let b = if e.b == BOUNDARY { n } else { e.b };
            if b == e.a {
                continue;
            }
            adj[e.a].push((b as u32, k as u32));
            adj[b].push((e.a as u32, k as u32));
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Ok(Decoder {
            lattice: lattice.clone(),
            n_qubits,
            weights,
            adj,
            boundary: lattice.has_boundary(),
        })
    }

    pub fn lattice(&self) -> &VirtualLattice {
        &self.lattice
    }

    pub fn edge_weight(&self, edge: usize) -> i64 {
        self.weights[edge]
    }

    fn boundary_node(&self) -> usize {
        self.lattice.n_nodes()
    }

    fn check_defects(&self, defects: &DefectSet) -> Result<()> {
        let n = self.lattice.n_nodes();
        if let Some(&bad) = defects.nodes.iter().find(|&&v| v >= n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n_qubits: n,
            });
        }
        if !self.boundary && defects.len() % 2 == 1 {
            return Err(Error::OddDefects(defects.len()));
        }
        Ok(())
    }

    /// Full single-source distances from `src`.
    fn dijkstra(&self, src: usize) -> Vec<i64> {
        let mut dist = vec![INF; self.adj.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0;
        heap.push(Reverse((0i64, src as u32)));
        while let Some(Reverse((d, v))) = heap.pop() {
            let v = v as usize;
            if d > dist[v] {
                continue;
            }
            for &(w, e) in &self.adj[v] {
                let nd = d + self.weights[e as usize];
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        dist
    }

    /// Pairwise geodesic distances between defects, plus boundary distances
    /// when the lattice has a boundary.
    pub fn all_pairs_defect_distances(&self, defects: &DefectSet) -> Result<MatchingProblem> {
        self.check_defects(defects)?;
        let n = defects.len();
        let mut dist = vec![0; n * n];
        let mut boundary = self.boundary.then(|| vec![INF; n]);
        for (i, &src) in defects.nodes.iter().enumerate() {
            let d = self.dijkstra(src);
            for (j, &dst) in defects.nodes.iter().enumerate() {
                if d[dst] >= INF {
                    return Err(Error::Disconnected(format!("no path between nodes {src} and {dst}")));
                }
                dist[i * n + j] = d[dst];
            }
            if let Some(b) = boundary.as_mut() {
                b[i] = d[self.boundary_node()];
                if b[i] >= INF {
                    return Err(Error::Disconnected(format!("node {src} cannot reach the boundary")));
                }
            }
        }
        Ok(MatchingProblem {
            defects: defects.nodes.clone(),
            dist,
            boundary,
        })
    }

    /// Exact matching on the complete defect graph.
    pub fn decode_dense(&self, defects: &DefectSet) -> Result<Correction> {
        let problem = self.all_pairs_defect_distances(defects)?;
        let pairs = mwpm(&problem)?;
        self.correction_from(&problem.defects, &pairs, problem.weight_of(&pairs))
    }

    /// Exact matching; sparse and certified on lattices without a boundary.
    pub fn decode(&self, defects: &DefectSet) -> Result<Correction> {
        if self.boundary {
            return self.decode_dense(defects);
        }
        self.check_defects(defects)?;
        let (pairs, weight) = self.sparse_matching(&defects.nodes)?;
        self.correction_from(&defects.nodes, &pairs, weight)
    }

    fn correction_from(&self, nodes: &[usize], pairs: &[(usize, Option<usize>)], weight: i64) -> Result<Correction> {
        let mut parity = vec![false; self.n_qubits];
        for &(i, j) in pairs {
            let target = j.map_or(self.boundary_node(), |j| nodes[j]);
            for e in self.path(nodes[i], target)? {
                for &q in &self.lattice.edges[e].correction {
                    parity[q] ^= true;
                }
            }
        }
        let support = parity.iter().enumerate().filter(|(_, &b)| b).map(|(q, _)| q);
        let operator = match self.lattice.sector {
            PauliKind::X => PauliOperator::x_on(self.n_qubits, support),
            PauliKind::Z => PauliOperator::z_on(self.n_qubits, support),
        };
        Ok(Correction {
            pairs: pairs.iter().map(|&(i, j)| (nodes[i], j.map(|j| nodes[j]))).collect(),
            weight,
            operator,
        })
    }

    /// Edges of a shortest path from `src` to `dst`. Among equal-weight paths the
    /// one whose predecessors have the smallest node ids is chosen.
    pub fn path(&self, src: usize, dst: usize) -> Result<Vec<usize>> {
        if src == dst {
            return Ok(Vec::new());
        }
        let mut dist = HashMap::new();
        let mut pred: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(src, 0i64);
        heap.push(Reverse((0i64, src as u32)));
        while let Some(Reverse((d, v))) = heap.pop() {
            let v = v as usize;
            if d > dist[&v] {
                continue;
            }
            if v == dst {
                break;
            }
            // never route through the boundary
            if v == self.boundary_node() {
                continue;
            }
            for &(w, e) in &self.adj[v] {
                let w = w as usize;
                let nd = d + self.weights[e as usize];
                let cur = dist.get(&w).copied().unwrap_or(INF);
                let better = nd < cur || (nd == cur && pred.get(&w).is_some_and(|&(pv, _)| v < pv));
                if better {
                    dist.insert(w, nd);
                    pred.insert(w, (v, e as usize));
                    if nd < cur {
                        heap.push(Reverse((nd, w as u32)));
                    }
                }
            }
        }
        if !dist.contains_key(&dst) {
            return Err(Error::Disconnected(format!("no path between nodes {src} and {dst}")));
        }
        let mut out = Vec::new();
        let mut v = dst;
        while v != src {
            let (pv, e) = pred[&v];
            out.push(e);
            v = pv;
        }
        out.reverse();
        Ok(out)
    }

    /// Bounded search from defect `i`. Stops once `k` other defects are found or
    /// the frontier reaches `radius`; returns the defects found and the radius
    /// below which every defect was found.
    fn nearest(
        &self,
        i: usize,
        nodes: &[usize],
        defect_at: &[u32],
        k: usize,
        radius: i64,
        scratch: &mut Scratch,
    ) -> (Vec<(usize, i64)>, i64) {
        scratch.next_stamp();
        let mut heap = BinaryHeap::new();
        scratch.set(nodes[i], 0);
        heap.push(Reverse((0i64, nodes[i] as u32)));
        let mut found = Vec::new();
        while let Some(Reverse((d, v))) = heap.pop() {
            let v = v as usize;
            if d > scratch.get(v) {
                continue;
            }
            if found.len() >= k || d >= radius {
                return (found, d);
            }
            let j = defect_at[v];
            if j != u32::MAX && j as usize != i {
                found.push((j as usize, d));
            }
            for &(w, e) in &self.adj[v] {
                let w = w as usize;
                let nd = d + self.weights[e as usize];
                if nd < scratch.get(w) {
                    scratch.set(w, nd);
                    heap.push(Reverse((nd, w as u32)));
                }
            }
        }
        (found, INF)
    }

    /// Minimum-weight perfect matching of `nodes` without boundary.
    ///
    /// The matching is solved on a sparse candidate graph (nearest neighbours of
    /// each defect). Writing `rho_i = C - dual_i` for the blossom duals of the
    /// flipped weights `C - d`, the result is optimal on the complete graph iff
    /// `2 d_ij >= rho_i + rho_j` for every pair. Pairs violating this are added
    /// and the problem re-solved until none remain.
    fn sparse_matching(&self, nodes: &[usize]) -> Result<(Vec<(usize, Option<usize>)>, i64)> {
        let n = nodes.len();
        if n == 0 {
            return Ok((Vec::new(), 0));
        }
        let mut defect_at = vec![u32::MAX; self.adj.len()];
        for (i, &v) in nodes.iter().enumerate() {
            if defect_at[v] != u32::MAX {
                return Err(Error::InvalidArgument(format!("repeated defect node {v}")));
            }
            defect_at[v] = i as u32;
        }
        let mut scratch = Scratch::new(self.adj.len());
        let mut k = vec![INITIAL_NEIGHBORS.min(n - 1); n];
        // every defect closer to i than radius[i] is listed in seen[i]
        let mut seen: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
        let mut radius = vec![0i64; n];
        let mut cand: HashMap<(usize, usize), i64> = HashMap::new();
        let mut search = |i: usize, k: usize, r: i64, seen: &mut Vec<Vec<(usize, i64)>>, radius: &mut Vec<i64>| {
            let (f, got) = self.nearest(i, nodes, &defect_at, k, r, &mut scratch);
            if got >= INF && f.len() < n - 1 {
                return Err(Error::Disconnected(format!(
                    "defect at node {} reaches only {} others",
                    nodes[i],
                    f.len()
                )));
            }
            seen[i] = f;
            radius[i] = got;
            Ok(())
        };
        for i in 0..n {
            search(i, k[i], INF, &mut seen, &mut radius)?;
            for &(j, d) in &seen[i] {
                cand.insert((i.min(j), i.max(j)), d);
            }
        }
        loop {
            let mut edges: Vec<(usize, usize, i64)> = cand.iter().map(|(&(i, j), &d)| (i, j, d)).collect();
            edges.sort_unstable();
            let c = edges.iter().map(|e| e.2).max().unwrap_or(0) + 1;
            let flipped: Vec<_> = edges.iter().map(|&(i, j, d)| (i, j, c - d)).collect();
            let result = max_weight_matching(n, &flipped, true);
            if !result.is_perfect() {
                let mut grew = false;
                for i in (0..n).filter(|&i| result.mate[i].is_none()) {
                    if k[i] < n - 1 {
                        k[i] = (2 * k[i]).min(n - 1);
                        search(i, k[i], INF, &mut seen, &mut radius)?;
                        for &(j, d) in &seen[i] {
                            grew |= cand.insert((i.min(j), i.max(j)), d).is_none();
                        }
                    }
                }
                if !grew {
                    return Err(Error::Inconsistent("no perfect matching on the complete graph".into()));
                }
                continue;
            }
            let rho: Vec<i64> = result.dual.iter().map(|&y| c - y).collect();
            let rho_max = *rho.iter().max().unwrap();
            let mut violated = false;
            for i in 0..n {
                // only partners closer than (rho_i + rho_max) / 2 can violate
                let reach = (rho[i] + rho_max + 1) / 2;
                if radius[i] < reach {
                    search(i, usize::MAX, reach, &mut seen, &mut radius)?;
                }
                for &(j, d) in &seen[i] {
                    if 2 * d < rho[i] + rho[j] {
                        violated |= cand.insert((i.min(j), i.max(j)), d).is_none();
                    }
                }
            }
            if !violated {
                let pairs: Vec<(usize, Option<usize>)> =
                    result.pairs().into_iter().map(|(a, b)| (a, Some(b))).collect();
                let weight = pairs.iter().map(|&(a, b)| cand[&(a, b.unwrap())]).sum();
                return Ok((pairs, weight));
            }
        }
    }
}

/// Time-stamped distance array reused across bounded searches.
struct Scratch {
    dist: Vec<i64>,
    stamp: Vec<u32>,
    now: u32,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![INF; n],
            stamp: vec![0; n],
            now: 0,
        }
    }

    fn next_stamp(&mut self) {
        self.now += 1;
    }

    #[inline]
    fn get(&self, v: usize) -> i64 {
        if self.stamp[v] == self.now {
            self.dist[v]
        } else {
            INF
        }
    }

    #[inline]
    fn set(&mut self, v: usize, d: i64) {
        self.stamp[v] = self.now;
        self.dist[v] = d;
    }
}

/// Exact minimum-weight perfect matching on the complete defect graph. With a
/// boundary, each defect gets a twin joined to it at the boundary distance and
/// the twins form a zero-weight clique.
pub fn mwpm(problem: &MatchingProblem) -> Result<Vec<(usize, Option<usize>)>> {
    let n = problem.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, problem.d(i, j)));
        }
    }
    let total = match &problem.boundary {
        None => {
            if n % 2 == 1 {
                return Err(Error::OddDefects(n));
            }
            n
        }
        Some(b) => {
            for i in 0..n {
                edges.push((i, n + i, b[i]));
                for j in i + 1..n {
                    edges.push((n + i, n + j, 0));
                }
            }
            2 * n
        }
    };
    let pairs = min_weight_perfect_matching(total, &edges)
        .ok_or_else(|| Error::Inconsistent("complete graph has no perfect matching".into()))?;
    let mut out = Vec::new();
    for (a, b) in pairs {
        match (a < n, b < n) {
            (true, true) => out.push((a, Some(b))),
            (true, false) => out.push((a, None)),
            (false, true) => out.push((b, None)),
            (false, false) => {}
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Repeatedly matches the closest remaining pair (or defect and boundary).
pub fn greedy_matching(problem: &MatchingProblem) -> Vec<(usize, Option<usize>)> {
    let n = problem.len();
    let mut cands: Vec<(i64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            cands.push((problem.d(i, j), i, j));
        }
        if let Some(b) = &problem.boundary {
            cands.push((b[i], i, usize::MAX));
        }
    }
    cands.sort_unstable();
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for (_, i, j) in cands {
        if used[i] || (j != usize::MAX && used[j]) {
            continue;
        }
        used[i] = true;
        if j == usize::MAX {
            out.push((i, None));
        } else {
            used[j] = true;
            out.push((i, Some(j)));
        }
    }
    out
}

/// Success test for a decoded trial, with the checks and bare logicals of one
/// error sector cached.
#[derive(Clone, Debug)]
pub struct Judge {
    sector: Sector,
    checks: Vec<PauliOperator>,
    logicals: Vec<PauliOperator>,
    trivial: Vec<PauliOperator>,
}

impl Judge {
    pub fn new(code: &SubsystemCode, sector: Sector) -> Self {
        Judge {
            sector,
            checks: code.sector_checks(sector),
            logicals: code.sector_judges(sector).to_vec(),
            trivial: code.sector_trivial_generators(sector),
        }
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    fn residual(&self, accumulated: &PauliOperator, correction: &PauliOperator) -> Result<PauliOperator> {
        let r = accumulated.multiply(correction)?;
        for (i, c) in self.checks.iter().enumerate() {
            if c.anticommutes(&r)? {
                return Err(Error::Inconsistent(format!("residual violates check {i}")));
            }
        }
        Ok(r)
    }

    /// True iff `accumulated * correction` commutes with every bare logical of
    /// the opposite type.
    pub fn judge(&self, accumulated: &PauliOperator, correction: &PauliOperator) -> Result<bool> {
        let r = self.residual(accumulated, correction)?;
        for l in &self.logicals {
            if l.anticommutes(&r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Same verdict by GF(2) membership of the residual in the gauge and
    /// stabilizer span.
    pub fn judge_by_span(&self, accumulated: &PauliOperator, correction: &PauliOperator) -> Result<bool> {
        let r = self.residual(accumulated, correction)?;
        in_span(&r, &self.trivial)
    }
}

/// One-shot form of [`Judge::judge`].
pub fn judge(
    code: &SubsystemCode,
    sector: Sector,
    accumulated: &PauliOperator,
    correction: &PauliOperator,
) -> Result<bool> {
    Judge::new(code, sector).judge(accumulated, correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build, Geometry};
    use crate::lattice::build_2d;

    fn defects(lat: &VirtualLattice, nodes: &[usize]) -> DefectSet {
        DefectSet {
            n_checks: lat.n_checks,
            layers: lat.layers,
            nodes: nodes.to_vec(),
        }
    }

    #[test]
    fn empty_defects_give_identity() {
        let code = build(4, Geometry::Toric).unwrap();
        let lat = build_2d(&code, PauliKind::X).unwrap();
        let dec = Decoder::new(&lat, code.n_qubits()).unwrap();
        let c = dec.decode(&defects(&lat, &[])).unwrap();
        assert!(c.operator.is_identity());
        assert!(c.pairs.is_empty());
    }

    #[test]
    fn odd_defects_rejected_on_torus() {
        let code = build(4, Geometry::Toric).unwrap();
        let lat = build_2d(&code, PauliKind::X).unwrap();
        let dec = Decoder::new(&lat, code.n_qubits()).unwrap();
        assert!(matches!(dec.decode(&defects(&lat, &[3])), Err(Error::OddDefects(1))));
    }

    #[test]
    fn adjacent_defects_cost_one_edge() {
        let code = build(5, Geometry::Toric).unwrap();
        let lat = build_2d(&code, PauliKind::X).unwrap();
        let dec = Decoder::new(&lat, code.n_qubits()).unwrap();
        let e = &lat.edges[7];
        let p = dec.all_pairs_defect_distances(&defects(&lat, &[e.a, e.b])).unwrap();
        assert_eq!(p.d(0, 1), WEIGHT_SCALE as i64);
    }

    #[test]
    fn single_qubit_errors_are_corrected() {
        for geometry in [Geometry::Toric, Geometry::Planar] {
            let code = build(4, geometry).unwrap();
            for sector in [PauliKind::X, PauliKind::Z] {
                let lat = build_2d(&code, sector).unwrap();
                let dec = Decoder::new(&lat, code.n_qubits()).unwrap();
                let judge = Judge::new(&code, sector);
                for e in &lat.edges {
                    let nodes: Vec<usize> = [e.a, e.b].into_iter().filter(|&v| v != BOUNDARY).collect();
                    let c = dec.decode(&defects(&lat, &nodes)).unwrap();
                    let err = match sector {
                        PauliKind::X => PauliOperator::x_on(code.n_qubits(), e.correction.clone()),
                        PauliKind::Z => PauliOperator::z_on(code.n_qubits(), e.correction.clone()),
                    };
                    assert!(judge.judge(&err, &c.operator).unwrap());
                }
            }
        }
    }

    #[test]
    fn judge_verdicts() {
        let code = build(3, Geometry::Toric).unwrap();
        let j = Judge::new(&code, PauliKind::X);
        let n = code.n_qubits();
        let e = PauliOperator::x_on(n, [0, 5]);
        assert!(j.judge(&e, &e).unwrap());
        let lx = code.groups.logical_x[0].clone();
        let id = PauliOperator::identity(n);
        assert!(!j.judge(&lx, &id).unwrap());
        let g = code.groups.gauge_x[2].clone();
        assert!(j.judge(&g, &id).unwrap());
        let bad = PauliOperator::x_on(n, [0]);
        assert!(matches!(j.judge(&bad, &id), Err(Error::Inconsistent(_))));
    }
}
