//! Near-perfect rainbow matchings of a 1-factorized `K_{n,n}` by the nibble.
//!
//! `cargo run --example nibble_matching -- [n] [seeds]`

use std::time::Instant;

use rainbow_decomp::generate::onefactorization_knn;
use rainbow_decomp::graph::{verify, StructureKind};
use rainbow_decomp::nibble::{near_perfect_rainbow_matching, NibbleConfig};
use rainbow_decomp::rng::{rng_from_seed, trial_seed};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(256);
    let seeds = args.get(1).copied().unwrap_or(10);
    let g = onefactorization_knn(n);
    let cfg = NibbleConfig::default();
    let start = Instant::now();
    let mut sizes = Vec::new();
    for s in 0..seeds as u64 {
        let out = near_perfect_rainbow_matching(&g, &cfg, &mut rng_from_seed(trial_seed(7, s))).unwrap();
        assert!(verify(&out.matching, &g, StructureKind::Matching).is_valid());
        assert!(out.conserves(2 * n));
        sizes.push(out.matching.len());
    }
    let mean = sizes.iter().sum::<usize>() as f64 / seeds as f64;
    println!("n = {n}, rounds = {}, seeds = {seeds}", cfg.round_count());
    println!("mean size {mean:.1} ({:.3} n), min {}, max {}", mean / n as f64, sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    println!("elapsed {:.2?}", start.elapsed());
}
