//! Rainbow 2-factors and Hamiltonian cycles of a properly coloured `K_n`.
//!
//! `cargo run --release --example hamilton -- [n] [colours] [seed] [key=value ...]`
//!
//! `colours = 0` uses the round-robin (even `n`) or circulant (odd `n`)
//! colouring as is; otherwise its classes are split up to `colours` colours.

use std::time::Instant;

use rainbow_decomp::config::PipelineConfig;
use rainbow_decomp::generate::split_colouring_kn;
use rainbow_decomp::graph::{verify, verify_pairwise_disjoint, StructureKind};
use rainbow_decomp::hamilton::hamiltonian_decomposition;
use rainbow_decomp::rng::rng_from_seed;

fn main() {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let (kv, pos): (Vec<&String>, Vec<&String>) = raw.iter().partition(|a| a.contains('='));
    let args: Vec<usize> = pos.iter().filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(60);
    let colours = args.get(1).copied().unwrap_or(n * n / 4);
    let seed = args.get(2).copied().unwrap_or(1) as u64;
    let overrides: String = kv.iter().map(|s| format!("{s}\n")).collect();
    let config = PipelineConfig::from_kv(&overrides).expect("valid overrides");

    let mut rng = rng_from_seed(seed);
    let base = if n % 2 == 0 { n - 1 } else { n };
    let host = split_colouring_kn(n, colours.max(base), &mut rng).expect("colour count in range");
    println!("K_{n} with {} colours", host.colour_count());
    let start = Instant::now();
    match hamiltonian_decomposition(&host, &config.hamilton(), &mut rng) {
        Ok(out) => {
            let k = config.cycle_k;
            assert!(out.factors.iter().all(|f| verify(f, &host, StructureKind::TwoFactor { min_cycle: k }).is_valid()));
            assert!(out.cycles.iter().all(|c| verify(c, &host, StructureKind::HamiltonianCycle).is_valid()));
            assert!(verify_pairwise_disjoint(&out.cycles).is_valid());
            println!(
                "{} rainbow 2-factors, {} rainbow Hamiltonian cycles ({:.2} n/2) in {:.2?}",
                out.factors.len(),
                out.cycles.len(),
                out.cycles.len() as f64 / (n as f64 / 2.0),
                start.elapsed()
            );
            for note in out.notes.iter().take(8) {
                println!("  note: {note}");
            }
        }
        Err(e) => println!("rejected: {e}"),
    }
}
