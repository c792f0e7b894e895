//! Completing a near-perfect rainbow matching to a perfect one through
//! three colour-disjoint reserves.
//!
//! `cargo run --release --example completion -- [n] [seeds]`

use rand::seq::SliceRandom;
use rainbow_decomp::graph::{verify, Graph, RainbowMatching, StructureKind};
use rainbow_decomp::matchings::{complete_matching, split_reserves};
use rainbow_decomp::pseudorandom::sample_colour_subgraph;
use rainbow_decomp::rng::{rng_from_seed, trial_seed};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(200);
    let seeds = args.get(1).copied().unwrap_or(10);
    let mut successes = 0;
    for s in 0..seeds as u64 {
        let mut rng = rng_from_seed(trial_seed(3, s));
        // rainbow K_{n,n}; M0 is a random perfect matching minus 2% of its edges
        let mut g = Graph::new_bipartite(n);
        for x in 0..n {
            for y in 0..n {
                g.add_edge(x, n + y, x * n + y).unwrap();
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let keep = n - n / 50;
        let m0 = RainbowMatching { edges: (0..keep).map(|x| rainbow_decomp::Edge(x, n + perm[x])).collect() };
        let on_m0: std::collections::HashSet<_> = m0.edges.iter().copied().collect();
        let rest = g.filter_edges(|e, _| !on_m0.contains(&e));
        let (h, _) = sample_colour_subgraph(&rest, 0.3, &mut rng);
        let reserves = split_reserves(&h, [1.0, 1.0, 1.0], &mut rng);
        match complete_matching(&g, &m0, &reserves, &mut rng).unwrap() {
            Ok(done) => {
                assert!(verify(&done.matching, &g, StructureKind::PerfectMatching).is_valid());
                successes += 1;
                println!("seed {s}: perfect, reserve edges used E {} D_X {} D_Y {}", done.used_e.len(), done.used_dx.len(), done.used_dy.len());
            }
            Err(f) => println!("seed {s}: stuck at round {} ({})", f.round, f.reason),
        }
    }
    println!("{successes}/{seeds} completed");
}
