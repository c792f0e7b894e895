use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rainbow_decomp::config::PipelineConfig;
use rainbow_decomp::generate::{generalized_square, round_robin_kn, split_colouring_kn};
use rainbow_decomp::graph::{verify, verify_pairwise_disjoint, Edge, GeneralizedLatinSquare, Graph, RainbowMatching, StructureKind, Vertex};
use rainbow_decomp::nibble::{near_perfect_rainbow_matching, NibbleConfig};
use rainbow_decomp::regularize::{gale_ryser_realize, gale_ryser_violation, ore_ryser_violated, regular_bipartite_subgraph, DegreeSequencePair, GaleRyser, RegularSubgraph};
use rainbow_decomp::rng::rng_from_seed;
use rainbow_decomp::trees::{merge_forest_into_tree, spanning_tree_decomposition, tree_edge_swap, TreeConfig};

/// Random properly coloured bipartite graph on `h + h` vertices, greedy
/// colours from a palette of `palette` colours.
fn random_bipartite(h: usize, density: f64, palette: usize, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let mut g = Graph::new_bipartite(h);
    for x in 0..h {
        for y in h..2 * h {
            if !rng.gen_bool(density) {
                continue;
            }
            let start = rng.gen_range(0..palette);
            let free = (0..palette).map(|i| (start + i) % palette).find(|&c| !g.adj(x).iter().chain(g.adj(y)).any(|&(_, d)| d == c));
            if let Some(c) = free {
                g.add_edge(x, y, c).unwrap();
            }
        }
    }
    g
}

fn is_spanning_tree(edges: &[Edge], n: usize) -> bool {
    if edges.len() + 1 != n {
        return false;
    }
    let mut comp: Vec<usize> = (0..n).collect();
    fn root(c: &mut [usize], v: usize) -> usize {
        if c[v] == v {
            v
        } else {
            let r = root(c, c[v]);
            c[v] = r;
            r
        }
    }
    for e in edges {
        let (a, b) = (root(&mut comp, e.0), root(&mut comp, e.1));
        if a == b {
            return false;
        }
        comp[a] = b;
    }
    true
}

/// Random labelled tree: each vertex `v > 0` hangs off a random earlier
/// vertex of a shuffled order.
fn random_tree(n: usize, seed: u64) -> Vec<Edge> {
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(&mut rng);
    (1..n).map(|i| Edge::new(order[i], order[rng.gen_range(0..i)])).collect()
}

/// Random forest on `0..n`: random pairs kept while acyclic.
fn random_forest(n: usize, tries: usize, seed: u64) -> Vec<Edge> {
    let mut rng = rng_from_seed(seed);
    let mut forest: Vec<Edge> = Vec::new();
    for _ in 0..tries {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b {
            continue;
        }
        let e = Edge::new(a, b);
        let mut with = forest.clone();
        with.push(e);
        // acyclic iff a spanning tree of the touched vertices plus isolated ones
        let comps = n - with.len();
        if !forest.contains(&e) && components(&with, n) == comps {
            forest = with;
        }
    }
    forest
}

fn components(edges: &[Edge], n: usize) -> usize {
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for e in edges.iter().filter(|e| e.touches(v)) {
                let w = e.other(v);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_are_normalized(a in 0usize..1000, b in 0usize..1000) {
        let e = Edge::new(a, b);
        prop_assert_eq!(e, Edge::new(b, a));
        prop_assert!(e.0 <= e.1);
    }

    #[test]
    fn graph_text_round_trip(h in 1usize..12, density in 0.0f64..1.0, seed: u64) {
        let g = random_bipartite(h, density, 3 * h, seed);
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let back = Graph::read_text(buf.as_slice()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn square_csv_round_trip(n in 1usize..9, extra in 0usize..50, seed: u64) {
        let symbols = (n + extra).min(n * n);
        let sq = generalized_square(n, symbols, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(sq.symbol_count(), symbols);
        let mut buf = Vec::new();
        sq.write_csv(&mut buf).unwrap();
        prop_assert_eq!(GeneralizedLatinSquare::read_csv(buf.as_slice()).unwrap(), sq);
    }

    #[test]
    fn config_kv_round_trip(alpha in 0.001f64..1.0, p in 0.001f64..0.999, k in 1usize..50, seed: u64) {
        let c = PipelineConfig { alpha, p, k, seed, ..PipelineConfig::default() };
        prop_assert_eq!(PipelineConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn split_colourings_are_proper_and_exact(half in 2usize..12, extra in 0usize..60, seed: u64) {
        let n = 2 * half;
        let colours = (n - 1 + extra).min(n * (n - 1) / 2);
        let g = split_colouring_kn(n, colours, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(g.is_proper() && g.is_complete());
        prop_assert_eq!(g.colour_count(), colours);
    }

    #[test]
    fn degree_sequences_of_graphs_are_realized(a in 1usize..20, b in 1usize..20, density in 0.0f64..1.0, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let mut pair = DegreeSequencePair { x_degrees: vec![0; a], y_degrees: vec![0; b] };
        for i in 0..a {
            for j in 0..b {
                if rng.gen_bool(density) {
                    pair.x_degrees[i] += 1;
                    pair.y_degrees[j] += 1;
                }
            }
        }
        let GaleRyser::Realized(edges) = gale_ryser_realize(&pair) else {
            return Err(TestCaseError::fail("feasible pair rejected"));
        };
        let distinct: HashSet<_> = edges.iter().collect();
        prop_assert_eq!(distinct.len(), edges.len());
        let mut dx = vec![0; a];
        let mut dy = vec![0; b];
        for &(i, j) in &edges {
            dx[i] += 1;
            dy[j] += 1;
        }
        prop_assert_eq!(dx, pair.x_degrees);
        prop_assert_eq!(dy, pair.y_degrees);
    }

    #[test]
    fn gale_ryser_matches_exhaustive_search(x in prop::collection::vec(0usize..5, 1..5), y in prop::collection::vec(0usize..5, 1..5)) {
        let (a, b) = (x.len(), y.len());
        // every 0/1 matrix with a rows and b columns
        let exists = (0u32..1 << (a * b)).any(|bits| {
            let row = |i: usize| (0..b).filter(|&j| bits >> (i * b + j) & 1 == 1).count();
            let col = |j: usize| (0..a).filter(|&i| bits >> (i * b + j) & 1 == 1).count();
            (0..a).all(|i| row(i) == x[i]) && (0..b).all(|j| col(j) == y[j])
        });
        let pair = DegreeSequencePair { x_degrees: x, y_degrees: y };
        prop_assert_eq!(matches!(gale_ryser_realize(&pair), GaleRyser::Realized(_)), exists);
        prop_assert_eq!(gale_ryser_violation(&pair).is_none(), exists);
    }

    #[test]
    fn regular_subgraphs_or_witnesses(h in 2usize..10, density in 0.3f64..1.0, d in 1usize..6, seed: u64) {
        let g = random_bipartite(h, density, 4 * h, seed);
        match regular_bipartite_subgraph(&g, d).unwrap() {
            RegularSubgraph::Found(r) => {
                prop_assert!((0..2 * h).all(|v| r.degree(v) == d));
                prop_assert!(r.edges().iter().all(|&(e, c)| g.edge_colour(e) == Some(c)));
            }
            RegularSubgraph::Infeasible { witness } => prop_assert!(ore_ryser_violated(&g, d, &witness)),
        }
    }

    #[test]
    fn nibble_outputs_valid_conserving_matchings(h in 2usize..24, density in 0.2f64..1.0, alpha in 0.02f64..0.5, seed: u64) {
        let g = random_bipartite(h, density, 2 * h, seed);
        let config = NibbleConfig { alpha, ..NibbleConfig::default() };
        let out = near_perfect_rainbow_matching(&g, &config, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(verify(&out.matching, &g, StructureKind::Matching).is_valid());
        prop_assert!(out.conserves(g.n()));
        let again = near_perfect_rainbow_matching(&g, &config, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(again.matching, out.matching);
    }

    #[test]
    fn verify_flags_foreign_edges_and_repeated_colours(h in 3usize..10, seed: u64) {
        let g = random_bipartite(h, 1.0, 3 * h, seed);
        let classes = g.colour_classes();
        // two disjoint edges of one colour, when some class has them
        if let Some(pair) = classes.values().find(|es| es.len() >= 2) {
            let m = RainbowMatching { edges: pair[..2].to_vec() };
            let report = verify(&m, &g, StructureKind::Matching);
            prop_assert!(!report.is_valid());
        }
        let missing = g.empty_like();
        let (e, _) = g.edges()[0];
        let lone = RainbowMatching { edges: vec![e] };
        prop_assert!(!verify(&lone, &missing, StructureKind::Matching).is_valid());
    }

    #[test]
    fn merged_forest_is_kept_inside_a_spanning_tree(n in 3usize..14, tries in 0usize..20, seed: u64) {
        let tree = random_tree(n, seed);
        let forest = random_forest(n, tries, seed ^ 0x5eed);
        let merged = merge_forest_into_tree(&tree, &forest).unwrap();
        prop_assert!(is_spanning_tree(&merged, n));
        prop_assert!(forest.iter().all(|f| merged.contains(f)));
        prop_assert!(merged.iter().all(|e| tree.contains(e) || forest.contains(e)));
    }

    #[test]
    fn swapping_in_a_chord_keeps_a_tree(n in 3usize..14, seed: u64) {
        let tree = random_tree(n, seed);
        let mut rng = rng_from_seed(seed);
        let chords: Vec<Edge> = (0..n).flat_map(|a| (a + 1..n).map(move |b| Edge(a, b))).filter(|e| !tree.contains(e)).collect();
        prop_assume!(!chords.is_empty());
        let chord = *chords.choose(&mut rng).unwrap();
        let attach = Graph::from_edges(n, &[(chord.0, chord.1, 0)]).unwrap();
        let v = if rng.gen_bool(0.5) { chord.0 } else { chord.1 };
        let (out, inn) = tree_edge_swap(&tree, &attach, v).unwrap();
        prop_assert_eq!(inn, chord);
        prop_assert!(tree.contains(&out) && out.touches(v));
        let swapped: Vec<Edge> = tree.iter().copied().filter(|&e| e != out).chain([inn]).collect();
        prop_assert!(is_spanning_tree(&swapped, n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn round_robin_trees_verified_without_violations(half in 3usize..11, seed: u64) {
        let n = 2 * half;
        let host = round_robin_kn(n).unwrap();
        let out = spanning_tree_decomposition(&host, &TreeConfig::default(), &mut rng_from_seed(seed)).unwrap();
        prop_assert!(out.invariant_violations.is_empty());
        prop_assert!(out.trees.iter().all(|t| verify(t, &host, StructureKind::SpanningTree).is_valid()));
        prop_assert!(verify_pairwise_disjoint(&out.trees).is_valid());
        let colours: Vec<BTreeSet<_>> = out.trees.iter().map(|t| t.edges.iter().map(|&e| host.edge_colour(e).unwrap()).collect()).collect();
        prop_assert!(colours.iter().zip(&out.trees).all(|(c, t)| c.len() == t.edges.len()));
    }
}
