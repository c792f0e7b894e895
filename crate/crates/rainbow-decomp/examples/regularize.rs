//! Degree-exact subgraphs: Gale–Ryser realization, a regular spanning
//! subgraph of a dense random bipartite graph, and an infeasibility witness.
//!
//! `cargo run --example regularize -- [n] [seed]`

use rand::Rng as _;
use rainbow_decomp::graph::Graph;
use rainbow_decomp::regularize::{gale_ryser_realize, regular_bipartite_subgraph, DegreeSequencePair, GaleRyser, RegularSubgraph};
use rainbow_decomp::rng::rng_from_seed;

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(100) as usize;
    let mut rng = rng_from_seed(args.get(1).copied().unwrap_or(1));

    let pair = DegreeSequencePair { x_degrees: vec![3, 2, 2, 1], y_degrees: vec![3, 2, 2, 1] };
    match gale_ryser_realize(&pair) {
        GaleRyser::Realized(edges) => println!("(3,2,2,1)^2 realized by {} edges: {edges:?}", edges.len()),
        GaleRyser::Infeasible { t } => println!("unexpected: infeasible at t = {t}"),
    }
    let bad = DegreeSequencePair { x_degrees: vec![3, 3, 0], y_degrees: vec![3, 2, 1] };
    println!("(3,3,0) against (3,2,1): {:?}", gale_ryser_realize(&bad));

    // each edge of K_{n,n} kept with probability 0.98, colour irrelevant here
    let mut g = Graph::new_bipartite(n);
    let mut c = 0;
    for x in 0..n {
        for y in n..2 * n {
            if rng.gen_bool(0.98) {
                g.add_edge(x, y, c).unwrap();
                c += 1;
            }
        }
    }
    let d = 9 * n / 10;
    println!("random G: n = {n}, min degree {}", g.min_degree());
    match regular_bipartite_subgraph(&g, d).unwrap() {
        RegularSubgraph::Found(h) => println!("{d}-regular subgraph: min {} max {} degree", h.min_degree(), h.max_degree()),
        RegularSubgraph::Infeasible { witness } => println!("no {d}-regular subgraph, witness of size {}", witness.len()),
    }
    let star = Graph::bipartite_from_edges(3, &[(0, 3, 0), (1, 3, 1), (2, 3, 2)]).unwrap();
    if let RegularSubgraph::Infeasible { witness } = regular_bipartite_subgraph(&star, 1).unwrap() {
        println!("star has no perfect matching; witness {witness:?}");
    }
}
