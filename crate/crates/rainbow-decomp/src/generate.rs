//! Instance generators: 1-factorizations, circulant colourings and random
//! generalized Latin squares with a prescribed number of symbols.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{square_to_bipartite, GeneralizedLatinSquare, Graph};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    OnefactorizationKnn,
    OnefactorizationKn,
    GeneralizedSquare,
    Circulant,
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "onefactorization-knn" => InstanceKind::OnefactorizationKnn,
            "onefactorization-kn" => InstanceKind::OnefactorizationKn,
            "generalized-square" => InstanceKind::GeneralizedSquare,
            "circulant" => InstanceKind::Circulant,
            _ => return Err(Error::Parse(format!("unknown instance kind `{s}`"))),
        })
    }
}

/// Builds an instance of `kind` on `n` vertices (per side for `K_{n,n}`).
/// `symbols` is the target symbol count of a generalized square, default
/// `n^2 / 2`.
pub fn generate(kind: InstanceKind, n: usize, symbols: Option<usize>, rng: &mut Rng) -> Result<Graph> {
    match kind {
        InstanceKind::OnefactorizationKnn => Ok(onefactorization_knn(n)),
        InstanceKind::OnefactorizationKn => round_robin_kn(n),
        InstanceKind::Circulant => circulant_colouring(n),
        InstanceKind::GeneralizedSquare => {
            square_to_bipartite(&generalized_square(n, symbols.unwrap_or(n * n / 2), rng)?)
        }
    }
}

/// `K_{n,n}` coloured by `x_i y_j -> i + j mod n`.
pub fn onefactorization_knn(n: usize) -> Graph {
    square_to_bipartite(&GeneralizedLatinSquare::cyclic(n)).expect("cyclic square is valid")
}

/// Round-robin 1-factorization of `K_n`, `n` even: `n - 1` perfect matchings.
pub fn round_robin_kn(n: usize) -> Result<Graph> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::Precondition(format!("round robin needs even n, got {n}")));
    }
    let m = n - 1;
    let mut g = Graph::new(n);
    for i in 0..m {
        for j in i + 1..m {
            g.add_edge(i, j, (i + j) % m)?;
        }
        g.add_edge(i, m, (2 * i) % m)?;
    }
    Ok(g)
}

/// `K_n` on `Z_n` with `ij -> i + j mod n`; proper for odd `n`.
pub fn circulant_colouring(n: usize) -> Result<Graph> {
    if n % 2 == 0 {
        return Err(Error::Precondition(format!("circulant colouring needs odd n, got {n}")));
    }
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            g.add_edge(i, j, (i + j) % n)?;
        }
    }
    Ok(g)
}

/// Cyclic square with rows, columns and symbols shuffled.
pub fn random_latin_square(n: usize, rng: &mut Rng) -> GeneralizedLatinSquare {
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut syms: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    syms.shuffle(rng);
    let cell = (0..n).map(|i| (0..n).map(|j| syms[(rows[i] + cols[j]) % n]).collect()).collect();
    GeneralizedLatinSquare { n, cell }
}

/// Random generalized square with exactly `symbols` symbols, made by
/// splitting each symbol class of a random Latin square into near-equal
/// random pieces. Needs `n <= symbols <= n^2`.
pub fn generalized_square(n: usize, symbols: usize, rng: &mut Rng) -> Result<GeneralizedLatinSquare> {
    if symbols < n || symbols > n * n {
        return Err(Error::Infeasible(format!("{symbols} symbols impossible for n={n} (need n..=n^2)")));
    }
    let base = random_latin_square(n, rng);
    let mut cells_of: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            cells_of[base.cell[i][j]].push((i, j));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parts = vec![symbols / n; n];
    for &s in order.iter().take(symbols % n) {
        parts[s] += 1;
    }
    let mut cell = vec![vec![0usize; n]; n];
    let mut next = 0;
    for s in 0..n {
        let mut cells = cells_of[s].clone();
        cells.shuffle(rng);
        let q = parts[s];
        for (idx, (i, j)) in cells.into_iter().enumerate() {
            cell[i][j] = next + idx % q;
        }
        next += q;
    }
    GeneralizedLatinSquare::new(cell)
}

/// Proper colouring of `K_n` with exactly `colours` colours: the round
/// robin (even `n`) or circulant (odd `n`) classes, each split into
/// near-equal random pieces.
pub fn split_colouring_kn(n: usize, colours: usize, rng: &mut Rng) -> Result<Graph> {
    let base = if n % 2 == 0 { round_robin_kn(n)? } else { circulant_colouring(n)? };
    let classes: Vec<Vec<crate::graph::Edge>> = base.colour_classes().into_values().collect();
    let total = base.edge_count();
    if colours < classes.len() || colours > total {
        return Err(Error::Infeasible(format!("{colours} colours impossible for K_{n}")));
    }
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.shuffle(rng);
    let mut parts = vec![colours / classes.len(); classes.len()];
    let mut extra = colours % classes.len();
    // pieces cannot outnumber edges; pour the surplus into roomy classes
    for (i, p) in parts.iter_mut().enumerate() {
        if *p > classes[i].len() {
            extra += *p - classes[i].len();
            *p = classes[i].len();
        }
    }
    for &i in order.iter().cycle().take(classes.len() * 2) {
        if extra == 0 {
            break;
        }
        if parts[i] < classes[i].len() {
            parts[i] += 1;
            extra -= 1;
        }
    }
    let mut g = Graph::new(n);
    let mut next = 0;
    for (i, class) in classes.iter().enumerate() {
        let mut edges = class.clone();
        edges.shuffle(rng);
        for (idx, e) in edges.into_iter().enumerate() {
            g.add_edge(e.0, e.1, next + idx % parts[i])?;
        }
        next += parts[i];
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn knn_factorization_classes() {
        let g = onefactorization_knn(4);
        let sizes = g.colour_class_sizes();
        assert_eq!(sizes.len(), 4);
        assert!(sizes.values().all(|&s| s == 4));
        assert!(g.is_proper());
    }

    #[test]
    fn round_robin_is_one_factorization() {
        for n in [2, 4, 6, 10, 50, 120] {
            let g = round_robin_kn(n).unwrap();
            assert!(g.is_complete());
            assert!(g.is_proper());
            let sizes = g.colour_class_sizes();
            assert_eq!(sizes.len(), n - 1);
            assert!(sizes.values().all(|&s| s == n / 2));
        }
        assert!(round_robin_kn(5).is_err());
    }

    #[test]
    fn circulant_n5() {
        let g = circulant_colouring(5).unwrap();
        assert_eq!(g.colour(1, 2), Some(3));
        assert_eq!(g.colour(4, 0), Some(4));
        assert!(g.is_proper());
    }

    #[test]
    fn generalized_square_hits_target() {
        let mut rng = rng_from_seed(1);
        for (n, t) in [(5, 5), (5, 25), (10, 37), (20, 200)] {
            let sq = generalized_square(n, t, &mut rng).unwrap();
            assert_eq!(sq.symbol_count(), t);
        }
        assert!(generalized_square(5, 4, &mut rng).is_err());
        assert!(generalized_square(5, 26, &mut rng).is_err());
    }

    #[test]
    fn split_kn_hits_target() {
        let mut rng = rng_from_seed(2);
        for (n, t) in [(6, 5), (6, 15), (7, 7), (7, 20), (30, 300)] {
            let g = split_colouring_kn(n, t, &mut rng).unwrap();
            assert!(g.is_complete() && g.is_proper());
            assert_eq!(g.colour_count(), t);
        }
        assert!(split_colouring_kn(6, 4, &mut rng).is_err());
    }
}
