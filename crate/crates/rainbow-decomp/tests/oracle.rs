//! Exhaustive oracles checked against independent brute force, and the
//! heuristics checked against the oracles.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rainbow_decomp::generate::{circulant_colouring, generalized_square};
use rainbow_decomp::graph::{square_to_bipartite, verify, Colour, Edge, GeneralizedLatinSquare, Graph, StructureKind};
use rainbow_decomp::nibble::{near_perfect_rainbow_matching, NibbleConfig};
use rainbow_decomp::oracle::{enumerate_transversals, max_disjoint_transversals, max_rainbow_matching, normalize_cycle, rainbow_hamiltonian_exists};
use rainbow_decomp::rng::rng_from_seed;

/// Random proper colouring of a random graph, with few colours so that
/// rainbow constraints bite.
fn random_coloured(n: usize, bipartite_half: Option<usize>, density: f64, palette: usize, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let mut g = match bipartite_half {
        Some(h) => Graph::new_bipartite(h),
        None => Graph::new(n),
    };
    let mut pairs: Vec<(usize, usize)> = match bipartite_half {
        Some(h) => (0..h).flat_map(|x| (h..2 * h).map(move |y| (x, y))).collect(),
        None => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
    };
    pairs.shuffle(&mut rng);
    for (a, b) in pairs {
        if !rng.gen_bool(density) {
            continue;
        }
        let free: Vec<Colour> = (0..palette).filter(|&c| !g.adj(a).iter().chain(g.adj(b)).any(|&(_, d)| d == c)).collect();
        if let Some(&c) = free.choose(&mut rng) {
            g.add_edge(a, b, c).unwrap();
        }
    }
    g
}

/// Largest rainbow matching by trying every edge subset.
fn brute_max_matching(g: &Graph) -> usize {
    let edges = g.edges();
    assert!(edges.len() <= 20);
    let mut best = 0;
    for mask in 0u32..1 << edges.len() {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let chosen: Vec<&(Edge, Colour)> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| &edges[i]).collect();
        let vs: HashSet<usize> = chosen.iter().flat_map(|(e, _)| [e.0, e.1]).collect();
        let cs: HashSet<Colour> = chosen.iter().map(|(_, c)| *c).collect();
        if vs.len() == 2 * size && cs.len() == size {
            best = size;
        }
    }
    best
}

/// Rainbow Hamiltonian cycles as normalized vertex sequences, by permutations
/// fixing vertex 0.
fn brute_hamiltonian(g: &Graph) -> HashSet<Vec<usize>> {
    let n = g.n();
    let mut out = HashSet::new();
    let mut rest: Vec<usize> = (1..n).collect();
    fn permute(k: usize, rest: &mut Vec<usize>, g: &Graph, out: &mut HashSet<Vec<usize>>) {
        if k == rest.len() {
            let cycle: Vec<usize> = std::iter::once(0).chain(rest.iter().copied()).collect();
            let n = cycle.len();
            let colours: Option<HashSet<Colour>> = (0..n).map(|i| g.colour(cycle[i], cycle[(i + 1) % n])).collect();
            if colours.is_some_and(|cs| cs.len() == n) {
                out.insert(normalize_cycle(&cycle));
            }
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            permute(k + 1, rest, g, out);
            rest.swap(k, i);
        }
    }
    permute(0, &mut rest, g, &mut out);
    out
}

#[test]
fn max_matching_agrees_with_subset_search() {
    for seed in 0..60 {
        let bip = random_coloured(0, Some(4), 0.7, 3, seed);
        assert_eq!(max_rainbow_matching(&bip).unwrap().optimum, brute_max_matching(&bip), "bipartite seed {seed}");
        let gen = random_coloured(6, None, 0.6, 4, seed);
        assert_eq!(max_rainbow_matching(&gen).unwrap().optimum, brute_max_matching(&gen), "general seed {seed}");
    }
}

#[test]
fn hamiltonian_cycles_agree_with_permutation_search() {
    for seed in 0..30 {
        let g = random_coloured(7, None, 0.8, 8, seed);
        let expected = brute_hamiltonian(&g);
        let got = rainbow_hamiltonian_exists(&g).unwrap();
        let found: HashSet<Vec<usize>> = got.witnesses.iter().map(|f| f.cycles[0].clone()).collect();
        assert_eq!(found, expected, "seed {seed}");
        assert_eq!(got.optimum, usize::from(!expected.is_empty()));
    }
    // structured input: the circulant colouring of K_7
    let k7 = circulant_colouring(7).unwrap();
    assert_eq!(rainbow_hamiltonian_exists(&k7).unwrap().witnesses.len(), brute_hamiltonian(&k7).len());
}

#[test]
fn transversals_agree_with_permutation_search() {
    let mut rng = rng_from_seed(11);
    for _ in 0..40 {
        let n = rng.gen_range(2..=5);
        let symbols = rng.gen_range(n..=n * n);
        let sq = generalized_square(n, symbols, &mut rng).unwrap();
        let mut count = 0;
        let mut perm: Vec<usize> = (0..n).collect();
        // Heap's algorithm over column permutations
        let mut c = vec![0; n];
        let check = |p: &[usize]| (0..n).map(|i| sq.cell[i][p[i]]).collect::<HashSet<_>>().len() == n;
        count += usize::from(check(&perm));
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                count += usize::from(check(&perm));
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        let oracle = enumerate_transversals(&sq).unwrap();
        assert_eq!(oracle.optimum, count);
        let packing = max_disjoint_transversals(&sq).unwrap();
        assert!(packing.optimum <= n && packing.optimum <= count);
        let cells: Vec<Edge> = packing.witnesses.iter().flatten().flat_map(|m| m.edges.clone()).collect();
        assert_eq!(cells.iter().collect::<HashSet<_>>().len(), cells.len());
    }
}

#[test]
fn cyclic_square_tables() {
    // frozen from the permutation search above: Z_n transversals, n = 1..7
    let counts = [1, 0, 3, 0, 15, 0, 133];
    for (i, &expected) in counts.iter().enumerate() {
        assert_eq!(enumerate_transversals(&GeneralizedLatinSquare::cyclic(i + 1)).unwrap().optimum, expected);
    }
}

#[test]
fn nibble_never_beats_the_optimum() {
    for seed in 0..40 {
        let g = random_coloured(0, Some(6), 0.8, 5, seed);
        let best = max_rainbow_matching(&g).unwrap().optimum;
        let out = near_perfect_rainbow_matching(&g, &NibbleConfig::default(), &mut rng_from_seed(seed)).unwrap();
        assert!(verify(&out.matching, &g, StructureKind::Matching).is_valid());
        assert!(out.matching.len() <= best, "seed {seed}: {} > {best}", out.matching.len());
    }
    let sq = square_to_bipartite(&GeneralizedLatinSquare::cyclic(4)).unwrap();
    assert_eq!(max_rainbow_matching(&sq).unwrap().optimum, 3);
}
