use std::collections::{HashMap, HashSet};

use rainbow_decomp::generate::{circulant_colouring, round_robin_kn, split_colouring_kn};
use rainbow_decomp::graph::{cycles_from_edges, verify, verify_pairwise_disjoint, CycleFactor, Edge, Graph, StructureKind, Vertex};
use rainbow_decomp::hamilton::*;
use rainbow_decomp::rng::rng_from_seed;
use rainbow_decomp::Error;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn cycle_edges(c: &[Vertex]) -> Vec<Edge> {
    (0..c.len()).map(|i| Edge::new(c[i], c[(i + 1) % c.len()])).collect()
}

/// Rainbow `K_n` with the vertices cut into cycles of the given lengths;
/// every other edge goes to one of the reserves `E1, E2, E3, D_X, D_Y`
/// listed in `to`, uniformly.
fn instance(n: usize, lens: &[usize], to: &[usize], seed: u64) -> (Graph, CycleFactor, HamiltonReserves, Vec<(Vertex, Vertex)>) {
    let mut rng = rng_from_seed(seed);
    let host = split_colouring_kn(n, n * (n - 1) / 2, &mut rng).unwrap();
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cycles = Vec::new();
    let mut start = 0;
    for &l in lens {
        cycles.push(order[start..start + l].to_vec());
        start += l;
    }
    let factor = CycleFactor { cycles };
    let used: HashSet<Edge> = factor.cycles.iter().flat_map(|c| cycle_edges(c)).collect();
    let side: HashMap<Edge, usize> = host.edges().into_iter().map(|(e, _)| (e, to[rng.gen_range(0..to.len())])).collect();
    let part = |i: usize| host.filter_edges(|e, _| !used.contains(&e) && side[&e] == i);
    let reserves = HamiltonReserves {
        e1: part(0),
        e2: part(1),
        e3: part(2),
        dx: DirectedReserve::orient(part(3), &mut rng).unwrap(),
        dy: DirectedReserve::orient(part(4), &mut rng).unwrap(),
    };
    let anchors = random_anchors(&factor, &mut rng);
    (host, factor, reserves, anchors)
}

#[test]
fn circulant_exact_for_primes_up_to_101() {
    for p in (3..=101).filter(|&p| is_prime(p)) {
        let d = circulant_decomposition(p).unwrap();
        assert_eq!(d.cycles.len(), (p - 1) / 2);
        for c in &d.cycles {
            assert!(verify(c, &d.colouring, StructureKind::HamiltonianCycle).is_valid(), "p = {p}");
        }
        assert!(verify_pairwise_disjoint(&d.cycles).is_valid());
        let covered: usize = d.cycles.iter().map(|c| c.cycles[0].len()).sum();
        assert_eq!(covered, p * (p - 1) / 2);
    }
}

#[test]
fn two_long_cycles_complete_on_k30() {
    let mut ok = 0;
    for seed in 0..50 {
        let (host, factor, reserves, anchors) = instance(30, &[12, 18], &[0, 1, 2, 3, 4], seed);
        let mut rng = rng_from_seed(1000 + seed);
        let done = complete_hamiltonian(&host, &factor, &reserves, &anchors, 0.1, &HashSet::new(), &mut rng).unwrap();
        if let Ok(done) = done {
            assert!(verify(&done.cycle, &host, StructureKind::HamiltonianCycle).is_valid());
            assert_eq!(done.joins, 1);
            ok += 1;
        }
    }
    assert!(ok >= 45, "{ok} of 50");
}

#[test]
fn small_cycle_absorbed_on_k30() {
    let mut ok = 0;
    for seed in 0..50 {
        let (host, factor, reserves, anchors) = instance(30, &[5, 25], &[0, 3, 4], seed);
        let mut rng = rng_from_seed(2000 + seed);
        let done = complete_hamiltonian(&host, &factor, &reserves, &anchors, 0.2, &HashSet::new(), &mut rng).unwrap();
        if let Ok(done) = done {
            assert!(verify(&done.cycle, &host, StructureKind::HamiltonianCycle).is_valid());
            assert!(done.absorptions >= 1);
            ok += 1;
        }
    }
    assert!(ok >= 45, "{ok} of 50");
}

#[test]
fn hamiltonian_input_is_unchanged() {
    let mut rng = rng_from_seed(1);
    let host = split_colouring_kn(12, 66, &mut rng).unwrap();
    let factor = CycleFactor { cycles: vec![(0..12).collect()] };
    let empty = || Graph::new(12);
    let reserves = HamiltonReserves {
        e1: empty(),
        e2: empty(),
        e3: empty(),
        dx: DirectedReserve::symmetric(empty()),
        dy: DirectedReserve::symmetric(empty()),
    };
    let done = complete_hamiltonian(&host, &factor, &reserves, &[(0, 1)], 0.1, &HashSet::new(), &mut rng)
        .unwrap()
        .unwrap();
    assert_eq!(done.cycle, factor);
    assert!(done.used.is_empty());
}

#[test]
fn reserve_sharing_a_factor_colour_is_rejected() {
    let (host, factor, mut reserves, anchors) = instance(20, &[10, 10], &[0, 1, 2, 3, 4], 3);
    let e = cycle_edges(&factor.cycles[0])[0];
    let c = host.edge_colour(e).unwrap();
    // a reserve edge recoloured would leave the host; reuse the factor edge itself
    reserves.e1.add_edge(e.0, e.1, c).unwrap();
    let mut rng = rng_from_seed(3);
    assert!(matches!(
        complete_hamiltonian(&host, &factor, &reserves, &anchors, 0.1, &HashSet::new(), &mut rng),
        Err(Error::Precondition(_))
    ));
}

/// Every single cycle on `V(C1) ∪ V(C2)` obtained by deleting three cycle
/// edges other than `anchor` and adding one edge from each of `e`, `f`, `g`.
fn all_rotations(n: usize, c1: &[Vertex], c2: &[Vertex], e: &Graph, f: &Graph, g: &Graph, anchor: Edge) -> HashSet<Vec<Edge>> {
    let base: Vec<Edge> = cycle_edges(c1).into_iter().chain(cycle_edges(c2)).collect();
    let removable: Vec<Edge> = base.iter().copied().filter(|&x| x != anchor).collect();
    let mut out = HashSet::new();
    for (a, ca) in e.edges() {
        for (b, cb) in f.edges() {
            for (c, cc) in g.edges() {
                if ca == cb || cb == cc || ca == cc || a == b || b == c || a == c {
                    continue;
                }
                for i in 0..removable.len() {
                    for j in i + 1..removable.len() {
                        for k in j + 1..removable.len() {
                            let gone = [removable[i], removable[j], removable[k]];
                            let mut edges: Vec<Edge> = base.iter().copied().filter(|x| !gone.contains(x)).collect();
                            edges.extend([a, b, c]);
                            if let Some(cs) = cycles_from_edges(n, &edges) {
                                if cs.len() == 1 && cs[0].len() == c1.len() + c2.len() {
                                    let mut key = edges.clone();
                                    key.sort_unstable();
                                    out.insert(key);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn join_output_is_an_exhaustive_rotation() {
    let mut successes = 0;
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let c1: Vec<Vertex> = vec![0, 1, 2, 3];
        let c2: Vec<Vertex> = vec![4, 5, 6, 7, 8, 9];
        let cyc: HashSet<Edge> = cycle_edges(&c1).into_iter().chain(cycle_edges(&c2)).collect();
        let (mut e, mut f, mut g) = (Graph::new(10), Graph::new(10), Graph::new(10));
        let mut colour = 0;
        for u in 0..10 {
            for v in u + 1..10 {
                if cyc.contains(&Edge::new(u, v)) {
                    continue;
                }
                let target = match rng.gen_range(0..10) {
                    0..=2 => &mut e,
                    3..=5 => &mut f,
                    6..=8 => &mut g,
                    _ => continue,
                };
                target.add_edge(u, v, colour).unwrap();
                colour += 1;
            }
        }
        let anchor = Edge::new(0, 1);
        let exhaustive = all_rotations(10, &c1, &c2, &e, &f, &g, anchor);
        if let Ok(rot) = join_two_cycles(&c1, &c2, &e, &f, &g, anchor, &mut rng) {
            let mut key = cycle_edges(&rot.cycles[0]);
            key.sort_unstable();
            assert!(exhaustive.contains(&key), "seed {seed}");
            assert!(key.contains(&anchor));
            successes += 1;
        }
    }
    assert!(successes > 0);
}

#[test]
fn absorb_on_complete_reserves_and_empty_dx() {
    let mut rng = rng_from_seed(8);
    let factor = CycleFactor { cycles: vec![vec![0, 1, 2], vec![3, 4, 5, 6, 7, 8, 9, 10, 11]] };
    let cyc: HashSet<Edge> = factor.cycles.iter().flat_map(|c| cycle_edges(c)).collect();
    let mut colour = 0;
    let mut complete = || {
        let mut g = Graph::new(12);
        for u in 0..12 {
            for v in u + 1..12 {
                if !cyc.contains(&Edge::new(u, v)) {
                    g.add_edge(u, v, colour).unwrap();
                    colour += 1;
                }
            }
        }
        g
    };
    let (e, dx, dy) = (complete(), complete(), complete());
    let anchors = vec![(0, 1), (3, 4)];
    let dx = DirectedReserve::symmetric(dx);
    let dy = DirectedReserve::symmetric(dy);
    let merged = absorb_small_cycle(&factor, 0, &anchors, &e, &dx, &dy, &mut rng).unwrap();
    assert_eq!(merged.cycles.len(), 1);
    assert_eq!(merged.cycles[0].len(), 12);
    let edges: HashSet<Edge> = cycle_edges(&merged.cycles[0]).into_iter().collect();
    assert!(edges.contains(&Edge::new(3, 4)), "other anchors survive");
    let empty = DirectedReserve::symmetric(Graph::new(12));
    assert!(matches!(
        absorb_small_cycle(&factor, 0, &anchors, &e, &empty, &dy, &mut rng),
        Err(Error::SearchFailed(_))
    ));
}

#[test]
fn near_design_at_120() {
    let mut rng = rng_from_seed(11);
    let d = near_design(120, 4, 5, 0.05, &mut rng).unwrap();
    assert_eq!(d.s, 4);
    for _ in 0..20 {
        let x = rng.gen_range(0..120);
        let y = (x + rng.gen_range(1..120)) % 120;
        let c = d.cooccurrence(x, y) as f64;
        assert!((c - d.expected_cooccurrence).abs() <= 0.5 * d.expected_cooccurrence, "{c} vs {}", d.expected_cooccurrence);
    }
    assert!(near_design(120, 4, 24, 0.01, &mut rng).is_err());
}

#[test]
fn two_factor_empty_and_preconditions() {
    let mut rng = rng_from_seed(1);
    let out = two_factor_decomposition(&Graph::new(15), &Graph::new(15), &TwoFactorConfig::default(), &mut rng).unwrap();
    assert!(out.factors.is_empty());
    let cfg = TwoFactorConfig { k: 4, ..TwoFactorConfig::default() };
    let g = round_robin_kn(8).unwrap();
    assert!(two_factor_decomposition(&g, &Graph::new(8), &cfg, &mut rng).is_err());
}

#[test]
fn pipeline_gate_and_triangle() {
    let mut rng = rng_from_seed(2);
    let cfg = HamiltonConfig { eps: 0.1, ..HamiltonConfig::default() };
    assert!(matches!(
        hamiltonian_decomposition(&round_robin_kn(20).unwrap(), &cfg, &mut rng),
        Err(Error::Precondition(_))
    ));
    let tri = circulant_colouring(3).unwrap();
    let out = hamiltonian_decomposition(&tri, &HamiltonConfig { enforce_gate: false, ..cfg }, &mut rng).unwrap();
    assert_eq!(out.cycles, vec![CycleFactor { cycles: vec![vec![0, 1, 2]] }]);
}

#[test]
fn circulant_31_through_the_pipeline_emits_only_verified_cycles() {
    // K_31 has 31 colours and a spanning rainbow factor needs all of them,
    // so once reserves take their colour share no factor can exist
    let host = circulant_colouring(31).unwrap();
    let mut rng = rng_from_seed(31);
    let cfg = HamiltonConfig {
        enforce_gate: false,
        two_factor: TwoFactorConfig { k: 31, ..TwoFactorConfig::default() },
        ..HamiltonConfig::default()
    };
    let out = hamiltonian_decomposition(&host, &cfg, &mut rng).unwrap();
    assert!(out.notes.iter().any(|s| s.starts_with("gate bypassed")));
    assert!(out.factors.is_empty());
    assert!(out.cycles.is_empty());
}

#[test]
fn pipeline_on_a_many_coloured_k240() {
    let mut total = 0;
    for seed in 1..=3 {
        let mut rng = rng_from_seed(seed);
        let host = split_colouring_kn(240, 12_000, &mut rng).unwrap();
        let cfg = HamiltonConfig { two_factor: TwoFactorConfig { k: 3, ..TwoFactorConfig::default() }, ..HamiltonConfig::default() };
        let out = hamiltonian_decomposition(&host, &cfg, &mut rng).unwrap();
        assert!(!out.factors.is_empty(), "seed {seed}");
        for f in &out.factors {
            assert!(verify(f, &host, StructureKind::TwoFactor { min_cycle: 3 }).is_valid());
        }
        assert!(verify_pairwise_disjoint(&out.factors).is_valid());
        for c in &out.cycles {
            assert!(verify(c, &host, StructureKind::HamiltonianCycle).is_valid());
        }
        assert!(verify_pairwise_disjoint(&out.cycles).is_valid());
        total += out.cycles.len();
    }
    assert!(total >= 1);
}
