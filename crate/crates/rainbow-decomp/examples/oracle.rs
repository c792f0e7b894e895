//! Exhaustive baselines on small squares: transversal counts, the largest
//! family of disjoint transversals, and the maximum rainbow matching.
//!
//! `cargo run --release --example oracle -- [max n]`

use rainbow_decomp::graph::{square_to_bipartite, GeneralizedLatinSquare};
use rainbow_decomp::oracle::{enumerate_transversals, max_disjoint_transversals, max_rainbow_matching};

fn main() {
    let top = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5usize);
    println!("{:>2} {:>12} {:>20} {:>22}", "n", "transversals", "disjoint transversals", "max rainbow matching");
    for n in 1..=top {
        let z = GeneralizedLatinSquare::cyclic(n);
        let count = enumerate_transversals(&z).map(|r| r.optimum.to_string()).unwrap_or_else(|_| "-".into());
        let family = max_disjoint_transversals(&z).map(|r| r.optimum.to_string()).unwrap_or_else(|_| "-".into());
        let matching = max_rainbow_matching(&square_to_bipartite(&z).unwrap())
            .map(|r| r.optimum.to_string())
            .unwrap_or_else(|_| "-".into());
        println!("{n:>2} {count:>12} {family:>20} {matching:>22}");
    }
}
