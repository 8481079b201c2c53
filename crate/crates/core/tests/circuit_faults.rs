use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssc_core::circuit::{inject_single_fault, CircuitSim, Extraction, Fault, FaultKind, Op, Program, Tracking};
use ssc_core::code::{build, Geometry, PauliKind, SubsystemCode};
use ssc_core::lattice::{defects_from_flips, defects_from_history};
use ssc_core::pauli::PauliOperator;
use ssc_core::schedule::{check_consistent, find_schedule};

fn circuit_program(code: &SubsystemCode) -> Program {
    Program::new(code, Extraction::Circuit(find_schedule().unwrap())).unwrap()
}

/// All X-sector-visible variants of every fault location in one period.
fn faults_of_period(sim: &CircuitSim<'_>, first_round: usize) -> Vec<Fault> {
    let mut out = Vec::new();
    for round in first_round..first_round + sim.program.period() {
        for loc in sim.program.locations(round) {
            let variants: Vec<u8> = match loc.kind {
                FaultKind::Gate => (1..16).collect(),
                FaultKind::ParityData => (1..64).collect(),
                _ => vec![0],
            };
            for pauli in variants {
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

/// Every single fault of a middle period yields 0 or 2 defects, and the full
/// frame simulation agrees with the sparse propagation used to build lattices.
fn zero_or_two(l: usize) {
    let code = build(l, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let t = 4;
    let sim = CircuitSim::new(&program, t, Tracking::X).unwrap();
    let (start, _) = sim.window();
    let faults = faults_of_period(&sim, start + 2 * program.period());
    assert!(faults.len() > 1000);
    let mut violations = 0;
    for f in &faults {
        let (defects, residual) = inject_single_fault(&sim, PauliKind::X, f).unwrap();
        if !(defects.is_empty() || defects.len() == 2) {
            violations += 1;
        }
        let (flips, res_sparse) = sim.propagate(PauliKind::X, f).unwrap();
        assert_eq!(
            defects_from_flips(&flips, program.n_checks(), t).nodes,
            defects.nodes,
            "{f:?}"
        );
        assert_eq!(residual.x_support(), res_sparse, "{f:?}");
    }
    assert_eq!(violations, 0);
}

#[test]
fn single_faults_make_zero_or_two_defects_l3() {
    zero_or_two(3);
}

#[test]
fn single_faults_make_zero_or_two_defects_l4() {
    zero_or_two(4);
}

#[test]
fn direct_parity_constituents_make_zero_or_two_defects() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = Program::new(&code, Extraction::DirectParity).unwrap();
    let t = 3;
    let sim = CircuitSim::new(&program, t, Tracking::X).unwrap();
    let (start, end) = sim.window();
    for round in start..end {
        for loc in program.locations(round) {
            for &(pauli, _) in sim.sector_variants(PauliKind::X, loc.kind) {
                let f = Fault {
                    kind: loc.kind,
                    round,
                    op: loc.op as usize,
                    pauli,
                };
                let (d, _) = inject_single_fault(&sim, PauliKind::X, &f).unwrap();
                assert!(d.is_empty() || d.len() == 2, "{f:?}: {:?}", d.coords());
            }
        }
    }
}

#[test]
fn noiseless_runs_are_trivial() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for extraction in [Extraction::Circuit(find_schedule().unwrap()), Extraction::DirectParity] {
        let code = build(4, Geometry::Toric).unwrap();
        let program = Program::new(&code, extraction).unwrap();
        let sim = CircuitSim::new(&program, 4, Tracking::Both).unwrap();
        let rec = sim.simulate(0.0, &mut rng);
        assert!(rec.histories.iter().all(|h| h.is_trivial()));
        assert!(rec.accumulated.is_identity());
    }
}

#[test]
fn vertex_error_flips_its_diagonal_plaquettes() {
    let l = 4;
    let code = build(l, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let t = 3;
    let sim = CircuitSim::new(&program, t, Tracking::X).unwrap();
    let lay = &code.layout;
    for (r, c) in [(0i64, 0i64), (1, 2), (3, 3)] {
        let q = lay.vertex(r, c).unwrap();
        let e = PauliOperator::x_on(code.n_qubits(), [q]);
        let rec = sim.simulate_faults(Some(&e), &[]);
        let h = rec.history(PauliKind::X).unwrap();
        let nw = lay.plaquette_at(r - 1, c - 1).unwrap();
        let se = lay.plaquette_at(r, c).unwrap();
        let mut expected = vec![nw, se];
        expected.sort_unstable();
        // the error sits on the qubit from the window start, so the first layer
        // may predate the ancillas' interaction with it
        let layers: Vec<Vec<usize>> = (0..=t)
            .map(|layer| (0..program.n_checks()).filter(|&p| h.get(layer, p)).collect())
            .collect();
        let first = layers.iter().position(|f| !f.is_empty()).unwrap();
        assert!(first <= 1);
        for f in &layers[first..] {
            assert_eq!(f, &expected, "vertex ({r},{c})");
        }
        let d = defects_from_history(h);
        assert_eq!(d.coords(), expected.iter().map(|&p| (first, p)).collect::<Vec<_>>());
        assert_eq!(rec.accumulated.x_support(), vec![q]);
    }
}

fn fault_in_round(program: &Program, kind: FaultKind, round: usize, pick: impl Fn(usize) -> bool) -> Option<Fault> {
    program.locations(round).iter().find_map(|loc| {
        let tri = program.op_triangle(round, loc.op as usize);
        (loc.kind == kind && tri.is_some_and(&pick)).then_some(Fault {
            kind,
            round,
            op: loc.op as usize,
            pauli: 0,
        })
    })
}

#[test]
fn measurement_flip_makes_a_time_like_pair() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let t = 4;
    let sim = CircuitSim::new(&program, t, Tracking::X).unwrap();
    let (start, end) = sim.window();
    let mut seen = 0;
    for round in start..end {
        let Some(f) = fault_in_round(&program, FaultKind::Measurement, round, |tri| {
            program.triangle_sector(tri) == PauliKind::X
        }) else {
            continue;
        };
        let (d, residual) = inject_single_fault(&sim, PauliKind::X, &f).unwrap();
        assert!(residual.is_identity());
        let tri = program.op_triangle(round, f.op).unwrap();
        let p = program.triangle_plaquette(tri);
        let c = d.coords();
        assert_eq!(c.len(), 2, "{f:?}");
        assert_eq!((c[0].1, c[1].1), (p, p));
        assert_eq!(c[1].0, c[0].0 + 1);
        seen += 1;
    }
    assert!(seen >= t);
}

#[test]
fn x_ancilla_faults_leave_the_x_sector_alone() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let sim = CircuitSim::new(&program, 4, Tracking::X).unwrap();
    let (start, end) = sim.window();
    let mut seen = 0;
    for round in start..end {
        for kind in [FaultKind::Preparation, FaultKind::Measurement] {
            if let Some(f) = fault_in_round(&program, kind, round, |tri| {
                program.triangle_sector(tri) == PauliKind::Z
            }) {
                let (d, residual) = inject_single_fault(&sim, PauliKind::X, &f).unwrap();
                assert!(d.is_empty() && residual.is_identity(), "{f:?}");
                seen += 1;
            }
        }
    }
    assert!(seen > 0);
}

/// `XX` after a CNOT acts like `X` on the control just before it, which is an
/// `X` left on that qubit by the preceding round's gate.
#[test]
fn xx_after_cnot_equals_x_on_control_before() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let n_code = program.n_code() as u32;
    let sim = CircuitSim::new(&program, 4, Tracking::X).unwrap();
    let (start, end) = sim.window();
    let mut checked = 0;
    for round in start + 1..end {
        for (k, op) in program.ops(round).iter().enumerate() {
            let Op::Cnot { control, .. } = *op else { continue };
            if control >= n_code {
                continue;
            }
            let before = program.ops(round - 1).iter().enumerate().find_map(|(j, o)| match *o {
                Op::Cnot { control: c, .. } if c == control => Some((j, 1u8)),
                Op::Cnot { target: t, .. } if t == control => Some((j, 2u8)),
                _ => None,
            });
            let Some((j, bit)) = before else { continue };
            let xx = Fault {
                kind: FaultKind::Gate,
                round,
                op: k,
                pauli: 3,
            };
            let x = Fault {
                kind: FaultKind::Gate,
                round: round - 1,
                op: j,
                pauli: bit,
            };
            let (d1, r1) = inject_single_fault(&sim, PauliKind::X, &xx).unwrap();
            let (d2, r2) = inject_single_fault(&sim, PauliKind::X, &x).unwrap();
            assert_eq!(d1, d2);
            assert_eq!(r1, r2);
            checked += 1;
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn invalid_fault_locations_are_rejected() {
    let code = build(3, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let sim = CircuitSim::new(&program, 2, Tracking::X).unwrap();
    let (_, end) = sim.window();
    let bad_round = Fault {
        kind: FaultKind::Gate,
        round: end,
        op: 0,
        pauli: 1,
    };
    assert!(inject_single_fault(&sim, PauliKind::X, &bad_round).is_err());
    let bad_op = Fault {
        kind: FaultKind::Gate,
        round: end - 1,
        op: 100_000,
        pauli: 1,
    };
    assert!(inject_single_fault(&sim, PauliKind::X, &bad_op).is_err());
    let untracked = Fault {
        kind: FaultKind::Measurement,
        round: end - 1,
        op: 0,
        pauli: 0,
    };
    assert!(inject_single_fault(&sim, PauliKind::Z, &untracked).is_err());
}

#[test]
fn found_schedule_is_consistent_on_full_lattices() {
    let s = find_schedule().unwrap();
    for l in 2..=6 {
        assert!(check_consistent(&s, &build(l, Geometry::Toric).unwrap()), "L={l}");
    }
}

#[test]
fn identical_seeds_give_identical_records() {
    let code = build(4, Geometry::Toric).unwrap();
    let program = circuit_program(&code);
    let sim = CircuitSim::new(&program, 4, Tracking::Both).unwrap();
    let a = sim.simulate(0.01, &mut ChaCha8Rng::seed_from_u64(99));
    let b = sim.simulate(0.01, &mut ChaCha8Rng::seed_from_u64(99));
    let c = sim.simulate(0.01, &mut ChaCha8Rng::seed_from_u64(100));
    assert_eq!(a, b);
    assert_eq!(a.accumulated, b.accumulated);
    assert_ne!(a, c);
}
