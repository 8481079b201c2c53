use std::collections::{BTreeMap, BTreeSet};

use ssc_core::circuit::{Extraction, Program};
use ssc_core::code::{build, Geometry, PauliKind};
use ssc_core::lattice::{build_2d, build_3d, edge_offset, LatticeEdge, VirtualLattice};
use ssc_core::pauli::PauliOperator;
use ssc_core::schedule::{all_correct_schedules, find_schedule, Reflection, Schedule};

#[test]
fn toric_2d_lattice_is_triangular() {
    for l in 3..=6 {
        let code = build(l, Geometry::Toric).unwrap();
        let lat = build_2d(&code, PauliKind::X).unwrap();
        assert_eq!(lat.n_nodes(), l * l);
        assert_eq!(lat.edges.len(), 3 * l * l);
        assert!(lat.adjacency.iter().all(|a| a.len() == 6));
        let qubits: BTreeSet<usize> = lat
            .edges
            .iter()
            .map(|e| {
                assert_eq!(e.correction.len(), 1);
                e.correction[0]
            })
            .collect();
        assert_eq!(qubits.len(), code.n_qubits());
    }
}

#[test]
fn stars_reproduce_z_stabilizers() {
    let code = build(4, Geometry::Toric).unwrap();
    let lat = build_2d(&code, PauliKind::X).unwrap();
    let n = code.n_qubits();
    for (p, stab) in code.groups.stabilizers_z.iter().enumerate() {
        let star = PauliOperator::z_on(n, lat.adjacency[p].iter().map(|&k| lat.edges[k as usize].correction[0]));
        assert_eq!(&star, stab, "plaquette {p}");
    }
}

#[test]
fn faces_are_x_triangles() {
    let l = 4;
    let code = build(l, Geometry::Toric).unwrap();
    let lat = build_2d(&code, PauliKind::X).unwrap();
    let n = code.n_qubits();
    let mut nbr: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in &lat.edges {
        nbr.insert((e.a.min(e.b), e.a.max(e.b)), e.correction[0]);
    }
    let edge = |a: usize, b: usize| nbr.get(&(a.min(b), a.max(b))).copied();
    let triangles: BTreeSet<Vec<usize>> = code
        .triangles
        .iter()
        .filter(|t| t.pauli_kind == PauliKind::X)
        .map(|t| {
            let mut q = t.qubits.to_vec();
            q.sort_unstable();
            q
        })
        .collect();
    let mut faces = BTreeSet::new();
    for a in 0..lat.n_nodes() {
        for b in a + 1..lat.n_nodes() {
            for c in b + 1..lat.n_nodes() {
                if let (Some(x), Some(y), Some(z)) = (edge(a, b), edge(b, c), edge(a, c)) {
                    let mut q = vec![x, y, z];
                    q.sort_unstable();
                    faces.insert(q);
                }
            }
        }
    }
    assert_eq!(faces.len(), 2 * l * l);
    assert_eq!(faces, triangles);
    assert!(faces.iter().all(|f| PauliOperator::x_on(n, f.clone()).weight() == 3));
}

#[test]
fn planar_2d_lattice_has_boundary_edges() {
    let l = 4;
    let code = build(l, Geometry::Planar).unwrap();
    let lat = build_2d(&code, PauliKind::X).unwrap();
    assert!(lat.has_boundary());
    let detected: usize = lat.edges.len() + lat.undetected_qubits.len();
    assert_eq!(detected, code.n_qubits());
    let ops = code.sector_checks(PauliKind::X);
    for e in lat.edges.iter().filter(|e| e.is_boundary()) {
        let x = PauliOperator::x_on(code.n_qubits(), e.correction.clone());
        let hits = ops.iter().filter(|s| s.anticommutes(&x).unwrap()).count();
        assert_eq!(hits, 1);
    }
}

type Row = (i64, i64, i64, f64, u32, u32, u32);

fn bulk_table(lat: &VirtualLattice, l: usize, node: usize) -> Vec<Row> {
    let mut rows: Vec<Row> = lat.adjacency[node]
        .iter()
        .map(|&k| {
            let e: &LatticeEdge = &lat.edges[k as usize];
            let (dr, dc, dt) = edge_offset(lat, l, node, e);
            (
                dr,
                dc,
                dt,
                e.coeff,
                e.counts.gate,
                e.counts.measurement,
                e.counts.preparation,
            )
        })
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rows
}

fn circuit_lattice(schedule: Schedule, l: usize, t: usize) -> (VirtualLattice, ssc_core::lattice::EnumerationStats) {
    let code = build(l, Geometry::Toric).unwrap();
    let program = Program::new(&code, Extraction::Circuit(schedule)).unwrap();
    build_3d(&code, &program, t, PauliKind::X).unwrap()
}

/// Sorted `(prior / p, G, M, P)` rows of the reference neighbor table.
fn reference_table() -> Vec<(f64, u32, u32, u32)> {
    let mut v = vec![(5.5, 6, 2, 2); 2];
    v.extend([(2.0, 8, 0, 0); 4]);
    v.extend([(1.0, 4, 0, 0); 2]);
    v.extend([(0.5, 2, 0, 0); 6]);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn classes(rows: &[Row]) -> Vec<(f64, u32, u32, u32)> {
    let mut v: Vec<_> = rows.iter().map(|r| (r.3, r.4, r.5, r.6)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn bulk_priors_match_reference_table() {
    let s = find_schedule().unwrap();
    assert!(s.is_exchange_symmetric(Reflection::Horizontal));
    let (l, t) = (5, 4);
    let (lat, stats) = circuit_lattice(s, l, t);
    let nc = l * l;
    for check in [0, 7, 24] {
        let rows = bulk_table(&lat, l, 2 * nc + check);
        assert_eq!(classes(&rows), reference_table());
        for r in &rows {
            let spatial = (r.0, r.1);
            match r.3 {
                x if x == 5.5 => assert_eq!((spatial, r.2.abs()), ((0, 0), 1)),
                x if x == 0.5 => assert_eq!(r.2.abs(), 1),
                _ => assert_eq!(r.2, 0),
            }
        }
        // space-like neighbours are the 2D lattice's, and every space-time
        // diagonal projects onto one of them
        let space: BTreeSet<(i64, i64)> = rows.iter().filter(|r| r.2 == 0).map(|r| (r.0, r.1)).collect();
        assert_eq!(space.len(), 6);
        for r in rows.iter().filter(|r| r.3 == 0.5) {
            assert!(space.contains(&(r.0, r.1)));
            // the space part points against the time step, as in (x -+ 1, y, t +- 1)
            let partner = rows.iter().find(|q| (q.0, q.1, q.2) == (-r.0, -r.1, -r.2));
            assert!(partner.is_some());
        }
    }
    assert!((stats.total_mass - stats.expected_mass()).abs() < 1e-9);
    assert!((stats.edge_mass + stats.silent_mass - stats.total_mass).abs() < 1e-9);
}

#[test]
fn every_correct_schedule_conserves_probability() {
    let all = all_correct_schedules();
    assert!(!all.is_empty());
    let (l, t) = (4, 4);
    let mut reference_class = 0;
    for s in all {
        let (lat, stats) = circuit_lattice(s, l, t);
        assert!((stats.total_mass - stats.expected_mass()).abs() < 1e-9);
        assert!((stats.edge_mass + stats.silent_mass - stats.total_mass).abs() < 1e-9);
        assert!(stats.max_defects <= 2);
        let rows = bulk_table(&lat, l, 2 * l * l + 5);
        assert!(rows.len() <= 14);
        if classes(&rows) == reference_table() {
            reference_class += 1;
        }
    }
    assert!(reference_class > 0);
}

#[test]
fn direct_parity_lattice_conserves_probability() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = Program::new(&code, Extraction::DirectParity).unwrap();
    let (lat, stats) = build_3d(&code, &program, 4, PauliKind::X).unwrap();
    assert!((stats.total_mass - stats.expected_mass()).abs() < 1e-9);
    assert!((stats.edge_mass + stats.silent_mass - stats.total_mass).abs() < 1e-9);
    assert!(lat.edges.iter().all(|e| e.coeff > 0.0));
    let w = lat.with_rate(0.01);
    assert!(w
        .edges
        .iter()
        .all(|e| e.prior > 0.0 && e.prior < 1.0 && e.weight.is_finite() && e.weight > 0.0));
}

#[test]
fn time_like_edge_weight_is_log_prior() {
    let (l, t) = (4, 3);
    let (lat, _) = circuit_lattice(find_schedule().unwrap(), l, t);
    let p = 0.005;
    let w = lat.with_rate(p);
    let node = l * l + 3;
    let e = w.adjacency[node]
        .iter()
        .map(|&k| &w.edges[k as usize])
        .find(|e| edge_offset(&w, l, node, e) == (0, 0, 1))
        .unwrap();
    assert!((e.weight + (5.5 * p).ln()).abs() < 1e-12);
    assert!(e.correction.is_empty());
}
