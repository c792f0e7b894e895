//! Typicality, boundedness and colour-cover diagnostics: a random
//! generalized square and colour samples of a 1-factorized `K_{n,n}`.
//!
//! `cargo run --release --example pseudorandom -- [n] [symbols] [seed]`

use rainbow_decomp::generate::{generalized_square, onefactorization_knn};
use rainbow_decomp::graph::square_to_bipartite;
use rainbow_decomp::pseudorandom::{boundedness, check_typical, colour_cover_check, sample_colour_subgraph};
use rainbow_decomp::rng::rng_from_seed;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(60);
    let symbols = args.get(1).copied().unwrap_or(n * n / 2);
    let mut rng = rng_from_seed(args.get(2).copied().unwrap_or(1) as u64);
    let g = square_to_bipartite(&generalized_square(n, symbols, &mut rng).unwrap()).unwrap();
    let b = boundedness(&g);
    println!("square, n = {n}, {} symbols: globally {}-bounded, locally {}-bounded", g.colour_count(), b.global_bound, b.local_bound);

    let knn = onefactorization_knn(n);
    for p in [0.5, 0.25] {
        let (sample, _) = sample_colour_subgraph(&knn, p, &mut rng);
        let (_, r) = check_typical(&sample, 1.0, p, n);
        let cover = colour_cover_check(&sample, 8, 0.1);
        println!(
            "K_{{n,n}} colour sample p = {p}: {} colours, density {:.3}, worst relative deviation {:.3}; any 8 colours cover >= {:.0} vertices: {}",
            sample.colour_count(),
            r.delta_estimate,
            r.gamma_achieved,
            cover.required,
            cover.holds
        );
    }
}
