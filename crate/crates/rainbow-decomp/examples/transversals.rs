//! Disjoint transversals of a random generalized Latin square.
//!
//! `cargo run --example transversals -- [n] [symbols] [seed] [key=value ...]`

use std::time::Instant;

use rainbow_decomp::config::PipelineConfig;
use rainbow_decomp::generate::generalized_square;
use rainbow_decomp::graph::{square_to_bipartite, StructureKind};
use rainbow_decomp::matchings::knn_transversal_pipeline;
use rainbow_decomp::rng::rng_from_seed;

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let (kv, pos): (Vec<&String>, Vec<&String>) = raw.iter().partition(|a| a.contains('='));
    let args: Vec<usize> = pos.iter().filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(100);
    let symbols = args.get(1).copied().unwrap_or(n * n / 2);
    let seed = args.get(2).copied().unwrap_or(1) as u64;
    let overrides: String = kv.iter().map(|s| format!("{s}\n")).collect();
    let config = PipelineConfig::from_kv(&overrides).expect("valid overrides");

    let mut rng = rng_from_seed(seed);
    let square = generalized_square(n, symbols, &mut rng).expect("feasible symbol count");
    let host = square_to_bipartite(&square).expect("valid square");
    let start = Instant::now();
    let family = knn_transversal_pipeline(&host, &config.transversal(), &mut rng).expect("gate passes");
    assert!(family.verify(&host, StructureKind::PerfectMatching));
    println!(
        "n = {n}, symbols = {symbols}: {} disjoint transversals ({:.2} n) in {:.2?}",
        family.len(),
        family.len() as f64 / n as f64,
        start.elapsed()
    );
    let failed = family.notes.iter().filter(|s| s.contains("completion failed")).count();
    println!("  completion failures: {failed}");
}
