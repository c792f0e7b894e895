//! Exact rainbow Hamiltonian decomposition of `K_p` coloured by `i + j mod p`.
//!
//! `cargo run --example circulant -- [p]`

use rainbow_decomp::graph::{verify, verify_pairwise_disjoint, StructureKind};
use rainbow_decomp::hamilton::circulant_decomposition;

fn main() {
    let p = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(13);
    let d = match circulant_decomposition(p) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for (i, c) in d.cycles.iter().enumerate() {
        assert!(verify(c, &d.colouring, StructureKind::HamiltonianCycle).is_valid());
        let shown: Vec<String> = c.cycles[0].iter().take(12).map(|v| v.to_string()).collect();
        println!("cycle {}: {}{}", i + 1, shown.join(" "), if p > 12 { " ..." } else { "" });
    }
    assert!(verify_pairwise_disjoint(&d.cycles).is_valid());
    println!("{} edge-disjoint rainbow Hamiltonian cycles cover all {} edges of K_{p}", d.cycles.len(), d.colouring.edge_count());
}
