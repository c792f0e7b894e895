//! Edge-disjoint spanning rainbow trees of a properly coloured `K_n`.
//!
//! `cargo run --release --example trees -- [n] [colours] [seed] [key=value ...]`
//!
//! `colours = 0` keeps the round-robin (even `n`) or circulant (odd `n`)
//! colouring; larger values split its classes.

use std::time::Instant;

use rainbow_decomp::config::PipelineConfig;
use rainbow_decomp::generate::split_colouring_kn;
use rainbow_decomp::graph::{verify, verify_pairwise_disjoint, StructureKind};
use rainbow_decomp::rng::rng_from_seed;
use rainbow_decomp::trees::spanning_tree_decomposition;

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let (kv, pos): (Vec<&String>, Vec<&String>) = raw.iter().partition(|a| a.contains('='));
    let args: Vec<usize> = pos.iter().filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(50);
    let colours = args.get(1).copied().unwrap_or(0);
    let seed = args.get(2).copied().unwrap_or(1) as u64;
    let overrides: String = kv.iter().map(|s| format!("{s}\n")).collect();
    let config = PipelineConfig::from_kv(&overrides).expect("valid overrides");

    let mut rng = rng_from_seed(seed);
    let base = if n % 2 == 0 { n - 1 } else { n };
    let host = split_colouring_kn(n, colours.max(base), &mut rng).expect("colour count in range");
    println!("K_{n} with {} colours", host.colour_count());
    let start = Instant::now();
    match spanning_tree_decomposition(&host, &config.trees(), &mut rng) {
        Ok(out) => {
            assert!(out.trees.iter().all(|t| verify(t, &host, StructureKind::SpanningTree).is_valid()));
            assert!(verify_pairwise_disjoint(&out.trees).is_valid());
            println!(
                "{:?} branch: {} spanning rainbow trees ({:.2} n/2), {} quarantined, in {:.2?}",
                out.branch,
                out.trees.len(),
                out.trees.len() as f64 / (n as f64 / 2.0),
                out.quarantined.len(),
                start.elapsed()
            );
            println!(
                "core {} | paths {} from cycles, {} searched | {} forest edges | {} extensions, {} invariant violations",
                out.core_size,
                out.paths_from_cycles,
                out.paths_searched,
                out.forest_edges,
                out.extensions,
                out.invariant_violations.len()
            );
            for q in out.quarantined.iter().take(4) {
                println!("  quarantined tree {} at vertex {}: {}", q.index, q.vertex, q.reason);
            }
            for note in out.notes.iter().take(8) {
                println!("  note: {note}");
            }
        }
        Err(e) => println!("rejected: {e}"),
    }
}
