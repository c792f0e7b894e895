//! Regularity, typicality and boundedness checkers, plus the random
//! subgraph samplers used by the pipelines.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Colour, Graph, Vertex};
use crate::rng::{fork, rng_from_seed, Rng};

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub holds: bool,
    /// Smallest gamma for which the measured quantities fit (part sizes for
    /// general graphs must match `n` exactly and are not folded in).
    pub gamma_achieved: f64,
    pub delta_estimate: f64,
    pub worst_vertex: Option<Vertex>,
    pub worst_pair: Option<(Vertex, Vertex)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub global_bound: usize,
    pub local_bound: usize,
    pub largest_colours: Vec<usize>,
}

fn rel_dev(value: f64, target: f64) -> f64 {
    if target <= 0.0 {
        if value <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (value / target - 1.0).abs()
    }
}

fn regular_core(graph: &Graph, gamma: f64, delta: f64, n: usize) -> TypicalityReport {
    let nf = n as f64;
    let mut worst = 0.0f64;
    let mut worst_vertex = None;
    let mut holds = true;
    match graph.part_size() {
        Some(h) => {
            let dev = rel_dev(h as f64, nf);
            worst = worst.max(dev);
            if dev > gamma + EPS {
                holds = false;
            }
        }
        None => {
            if graph.n() != n {
                holds = false;
            }
        }
    }
    let target = delta * nf;
    for v in 0..graph.n() {
        let dev = rel_dev(graph.degree(v) as f64, target);
        if dev > worst || worst_vertex.is_none() && dev >= worst {
            worst = worst.max(dev);
            worst_vertex = Some(v);
        }
        if dev > gamma + EPS {
            holds = false;
        }
    }
    let total: usize = (0..graph.n()).map(|v| graph.degree(v)).sum();
    let delta_estimate = if graph.n() == 0 || n == 0 { 0.0 } else { total as f64 / graph.n() as f64 / nf };
    TypicalityReport { holds, gamma_achieved: worst, delta_estimate, worst_vertex, worst_pair: None }
}

pub fn check_regular(graph: &Graph, gamma: f64, delta: f64, n: usize) -> (bool, TypicalityReport) {
    let r = regular_core(graph, gamma, delta, n);
    (r.holds, r)
}

/// Adjacency bitsets, one `Vec<u64>` per vertex.
pub(crate) fn bitsets(graph: &Graph) -> Vec<Vec<u64>> {
    let words = graph.n().div_ceil(64);
    let mut out = vec![vec![0u64; words]; graph.n()];
    for (v, row) in out.iter_mut().enumerate() {
        for w in graph.neighbours(v) {
            row[w / 64] |= 1 << (w % 64);
        }
    }
    out
}

fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

pub fn check_typical(graph: &Graph, gamma: f64, delta: f64, n: usize) -> (bool, TypicalityReport) {
    let mut r = regular_core(graph, gamma, delta, n);
    let target = delta * delta * n as f64;
    let bits = bitsets(graph);
    let groups: Vec<Vec<Vertex>> = if graph.is_bipartite() {
        vec![graph.x_vertices().collect(), graph.y_vertices().collect()]
    } else {
        vec![(0..graph.n()).collect()]
    };
    let mut worst_pair_dev = -1.0;
    for grp in groups {
        for (i, &a) in grp.iter().enumerate() {
            for &b in &grp[i + 1..] {
                let dev = rel_dev(and_count(&bits[a], &bits[b]) as f64, target);
                if dev > worst_pair_dev {
                    worst_pair_dev = dev;
                    r.worst_pair = Some((a, b));
                }
                if dev > gamma + EPS {
                    r.holds = false;
                }
            }
        }
    }
    r.gamma_achieved = r.gamma_achieved.max(worst_pair_dev);
    (r.holds, r)
}

pub fn boundedness(graph: &Graph) -> BoundednessReport {
    let mut largest: Vec<usize> = graph.colour_class_sizes().into_values().collect();
    largest.sort_unstable_by(|a, b| b.cmp(a));
    let mut local = 0;
    for v in 0..graph.n() {
        let mut count: BTreeMap<Colour, usize> = BTreeMap::new();
        for &(_, c) in graph.adj(v) {
            let e = count.entry(c).or_insert(0);
            *e += 1;
            local = local.max(*e);
        }
    }
    BoundednessReport { global_bound: largest.first().copied().unwrap_or(0), local_bound: local, largest_colours: largest }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub edges_between: usize,
    pub expected: f64,
    pub discrepancy: f64,
    pub bound: f64,
    pub passes: bool,
    /// Set when the size precondition fails; the check is then not performed.
    pub skipped: Option<String>,
}

/// Compares `e(A,B)` with `p|A||B|` against `2 |A|^(1/2) |B| gamma^(1/2) n^(1/2) p`.
pub fn density_discrepancy(graph: &Graph, a: &[Vertex], b: &[Vertex], p: f64, gamma: f64) -> DiscrepancyReport {
    let mut in_b = vec![false; graph.n()];
    for &v in b {
        in_b[v] = true;
    }
    let e_ab = a.iter().map(|&v| graph.neighbours(v).filter(|&w| in_b[w]).count()).sum::<usize>();
    let expected = p * a.len() as f64 * b.len() as f64;
    let discrepancy = (e_ab as f64 - expected).abs();
    let n = graph.scale() as f64;
    let bound = 2.0 * (a.len() as f64).sqrt() * b.len() as f64 * gamma.sqrt() * n.sqrt() * p;
    let need = 1.0 / (gamma * p * p);
    let disjoint = a.iter().all(|&v| !in_b[v]);
    let skipped = if (b.len() as f64) + EPS < need {
        Some(format!("|B| = {} < 1/(gamma p^2) = {need:.2}", b.len()))
    } else if !disjoint {
        Some("A and B intersect".to_string())
    } else {
        None
    };
    let passes = skipped.is_none() && discrepancy <= bound + EPS;
    DiscrepancyReport { edges_between: e_ab, expected, discrepancy, bound, passes, skipped }
}

/// Each colour class goes to `chosen` with probability `prob`, independently.
pub fn sample_colour_subgraph(graph: &Graph, prob: f64, rng: &mut Rng) -> (Graph, Graph) {
    let picked: BTreeMap<Colour, bool> = graph.colours().into_iter().map(|c| (c, rng.gen_bool(prob))).collect();
    let mut chosen = graph.empty_like();
    let mut rest = graph.empty_like();
    for (e, c) in graph.edges() {
        let target = if picked[&c] { &mut chosen } else { &mut rest };
        target.add_edge(e.0, e.1, c).expect("partition of a valid graph");
    }
    (chosen, rest)
}

/// Like [`sample_colour_subgraph`] but with a separate coin per edge.
pub fn sample_edge_subgraph(graph: &Graph, prob: f64, rng: &mut Rng) -> (Graph, Graph) {
    let mut chosen = graph.empty_like();
    let mut rest = graph.empty_like();
    for (e, c) in graph.edges() {
        let target = if rng.gen_bool(prob) { &mut chosen } else { &mut rest };
        target.add_edge(e.0, e.1, c).expect("partition of a valid graph");
    }
    (chosen, rest)
}

#[derive(Clone, Debug)]
pub struct VertexSample {
    /// `G[A]` for one size, `G[A,B]` (bipartite, `A` first) for two.
    pub graph: Graph,
    /// The sampled sets in host ids; new vertex `i` is the `i`-th listed.
    pub sets: Vec<Vec<Vertex>>,
}

/// One size: uniform `A` and the induced `G[A]`. Two equal sizes: disjoint
/// uniform `A`, `B` (drawn from `X` and `Y` when the host is bipartite) and
/// the bipartite `G[A,B]`.
pub fn sample_vertex_subsets(graph: &Graph, sizes: &[usize], rng: &mut Rng) -> Result<VertexSample> {
    match *sizes {
        [k] => {
            if k > graph.n() {
                return Err(Error::Precondition(format!("sample of {k} from {} vertices", graph.n())));
            }
            let mut all: Vec<Vertex> = (0..graph.n()).collect();
            all.shuffle(rng);
            all.truncate(k);
            all.sort_unstable();
            let mut g = graph.induced(&all);
            if let Some(h) = graph.part_size() {
                // keep the bipartition when every sampled vertex stays on its side
                let xs: Vec<Vertex> = all.iter().copied().filter(|&v| v < h).collect();
                let ys: Vec<Vertex> = all.iter().copied().filter(|&v| v >= h).collect();
                if xs.len() == ys.len() {
                    g = graph.bipartite_between(&xs, &ys)?;
                    let mut order = xs;
                    order.extend(ys);
                    all = order;
                }
            }
            Ok(VertexSample { graph: g, sets: vec![all] })
        }
        [ka, kb] => {
            if ka != kb {
                return Err(Error::Precondition("two-set samples must have equal sizes".into()));
            }
            let (mut a, mut b) = match graph.part_size() {
                Some(h) => {
                    if ka > h {
                        return Err(Error::Precondition(format!("sample of {ka} from a part of size {h}")));
                    }
                    let mut xs: Vec<Vertex> = graph.x_vertices().collect();
                    let mut ys: Vec<Vertex> = graph.y_vertices().collect();
                    xs.shuffle(rng);
                    ys.shuffle(rng);
                    (xs[..ka].to_vec(), ys[..kb].to_vec())
                }
                None => {
                    if ka + kb > graph.n() {
                        return Err(Error::Precondition(format!("samples of {ka}+{kb} from {} vertices", graph.n())));
                    }
                    let mut all: Vec<Vertex> = (0..graph.n()).collect();
                    all.shuffle(rng);
                    (all[..ka].to_vec(), all[ka..ka + kb].to_vec())
                }
            };
            a.sort_unstable();
            b.sort_unstable();
            let g = graph.bipartite_between(&a, &b)?;
            Ok(VertexSample { graph: g, sets: vec![a, b] })
        }
        _ => Err(Error::Precondition("sizes must have one or two entries".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub holds: bool,
    pub exhaustive: bool,
    pub subsets_checked: usize,
    pub worst_cover: usize,
    pub required: f64,
}

pub const COVER_EXHAUSTIVE_MAX_COLOURS: usize = 20;
pub const COVER_SAMPLES: usize = 10_000;
const COVER_SEED: u64 = 0x0063_6f76_6572;

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Does every set of `k` colours touch at least `(1 - eps) |V|` vertices?
/// Exhaustive up to 20 colours; beyond that, 10^4 random `k`-sets from a
/// fixed seed plus the `k` colours with the smallest classes.
pub fn colour_cover_check(graph: &Graph, k: usize, eps: f64) -> CoverReport {
    let classes = graph.colour_classes();
    let words = graph.n().div_ceil(64);
    let covers: Vec<Vec<u64>> = classes
        .values()
        .map(|es| {
            let mut b = vec![0u64; words];
            for e in es {
                b[e.0 / 64] |= 1 << (e.0 % 64);
                b[e.1 / 64] |= 1 << (e.1 % 64);
            }
            b
        })
        .collect();
    let m = covers.len();
    let required = (1.0 - eps) * graph.n() as f64;
    let k = k.max(1).min(m.max(1));
    let cover_of = |idx: &[usize]| -> usize {
        let mut acc = vec![0u64; words];
        for &i in idx {
            for (a, b) in acc.iter_mut().zip(&covers[i]) {
                *a |= b;
            }
        }
        acc.iter().map(|w| w.count_ones() as usize).sum()
    };
    if m == 0 {
        return CoverReport { holds: required <= EPS, exhaustive: true, subsets_checked: 0, worst_cover: 0, required };
    }
    let mut worst = usize::MAX;
    let mut checked = 0;
    let exhaustive = m <= COVER_EXHAUSTIVE_MAX_COLOURS;
    if exhaustive {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            worst = worst.min(cover_of(&idx));
            checked += 1;
            if !next_combination(&mut idx, m) {
                break;
            }
        }
    } else {
        let mut rng = rng_from_seed(COVER_SEED);
        let all: Vec<usize> = (0..m).collect();
        for _ in 0..COVER_SAMPLES {
            let pick: Vec<usize> = all.choose_multiple(&mut rng, k).copied().collect();
            worst = worst.min(cover_of(&pick));
            checked += 1;
        }
        let mut by_size: Vec<usize> = (0..m).collect();
        by_size.sort_by_key(|&i| (covers[i].iter().map(|w| w.count_ones()).sum::<u32>(), i));
        worst = worst.min(cover_of(&by_size[..k]));
        checked += 1;
    }
    CoverReport { holds: worst as f64 + EPS >= required, exhaustive, subsets_checked: checked, worst_cover: worst, required }
}

/// Orientation of a graph: `out[v]` lists the heads of arcs leaving `v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub out: Vec<Vec<Vertex>>,
    pub min_out_degree: usize,
    pub attempts: usize,
}

impl Orientation {
    pub fn has_arc(&self, from: Vertex, to: Vertex) -> bool {
        self.out[from].contains(&to)
    }
}

pub const ORIENTATION_RETRY_CAP: usize = 20;

/// Uniform random orientation, redrawn from a fresh stream until the
/// minimum out-degree reaches `floor(delta(G) / 3)`.
pub fn random_orientation(graph: &Graph, rng: &mut Rng) -> Result<Orientation> {
    random_orientation_capped(graph, ORIENTATION_RETRY_CAP, rng)
}

pub fn random_orientation_capped(graph: &Graph, cap: usize, rng: &mut Rng) -> Result<Orientation> {
    let target = graph.min_degree() / 3;
    let edges = graph.edges();
    for attempt in 1..=cap.max(1) {
        let mut stream = fork(rng);
        let mut out = vec![Vec::new(); graph.n()];
        for (e, _) in &edges {
            if stream.gen_bool(0.5) {
                out[e.0].push(e.1);
            } else {
                out[e.1].push(e.0);
            }
        }
        let min_out = out.iter().map(|o| o.len()).min().unwrap_or(0);
        if min_out >= target {
            return Ok(Orientation { out, min_out_degree: min_out, attempts: attempt });
        }
    }
    Err(Error::RetryCap { what: "random orientation".into(), attempts: cap })
}

#[derive(Clone, Debug)]
pub struct CoreReport {
    pub graph: Graph,
    /// Host ids of the kept vertices; new vertex `i` is `vertices[i]`.
    pub vertices: Vec<Vertex>,
    /// Set when the edge-count precondition fails or the degree guarantee
    /// is missed.
    pub warning: Option<String>,
}

/// Repeatedly deletes a lowest-degree vertex while its degree is below
/// `(1 - eps/2)(n - 1)`; with `e(G) >= (1 - (eps/2)^2) n(n-1)/2` the result
/// has minimum degree at least `(1 - eps)(n - 1)`.
pub fn high_min_degree_core(graph: &Graph, eps: f64) -> CoreReport {
    let n = graph.n();
    let full = (n * n.saturating_sub(1)) as f64 / 2.0;
    let mut warning = None;
    if (graph.edge_count() as f64) + EPS < (1.0 - (eps / 2.0).powi(2)) * full {
        warning = Some("edge count below the core precondition".to_string());
    }
    let threshold = (1.0 - eps / 2.0) * n.saturating_sub(1) as f64;
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    loop {
        let pick = (0..n).filter(|&v| alive[v]).min_by_key(|&v| (deg[v], v));
        match pick {
            Some(v) if (deg[v] as f64) + EPS < threshold => {
                alive[v] = false;
                for w in graph.neighbours(v) {
                    if alive[w] {
                        deg[w] -= 1;
                    }
                }
            }
            _ => break,
        }
    }
    let vertices: Vec<Vertex> = (0..n).filter(|&v| alive[v]).collect();
    let core = graph.induced(&vertices);
    if warning.is_none() && (core.min_degree() as f64) + EPS < (1.0 - eps) * n.saturating_sub(1) as f64 && !vertices.is_empty() {
        warning = Some("core misses the minimum degree guarantee".to_string());
    }
    CoreReport { graph: core, vertices, warning }
}

/// Diagnostic only: the smallest `e(A,B)` over `samples` random pairs of
/// `m`-sets (opposite sides when bipartite).
pub fn sampled_min_density(graph: &Graph, m: usize, samples: usize, rng: &mut Rng) -> Option<usize> {
    let mut best = None;
    for _ in 0..samples {
        let s = sample_vertex_subsets(graph, &[m, m], rng).ok()?;
        let e = s.graph.edge_count();
        best = Some(best.map_or(e, |b: usize| b.min(e)));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{onefactorization_knn, round_robin_kn};
    use crate::rng::rng_from_seed;

    fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        let mut c = 0;
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j, c).unwrap();
                c += 1;
            }
        }
        g
    }

    #[test]
    fn regular_and_typical_examples() {
        let k10 = complete(10);
        assert!(check_regular(&k10, 0.2, 1.0, 10).0);
        assert!(check_typical(&k10, 0.2, 1.0, 10).0);
        let k55 = onefactorization_knn(5);
        assert!(check_regular(&k55, 0.0, 1.0, 5).0);
        assert!(check_typical(&k55, 0.0, 1.0, 5).0);
        let mut star = Graph::new(10);
        for v in 1..10 {
            star.add_edge(0, v, v).unwrap();
        }
        assert!(!check_regular(&star, 0.1, 0.5, 10).0);
        let mut two = Graph::new(10);
        let mut c = 0;
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    two.add_edge(base + i, base + j, c).unwrap();
                    c += 1;
                }
            }
        }
        let (ok, rep) = check_typical(&two, 0.3, 0.4, 10);
        assert!(!ok);
        assert!(rep.worst_pair.is_some());
    }

    #[test]
    fn boundedness_examples() {
        let r = boundedness(&onefactorization_knn(6));
        assert_eq!((r.global_bound, r.local_bound), (6, 1));
        assert_eq!(boundedness(&complete(5)).global_bound, 1);
        let e = boundedness(&Graph::new(4));
        assert_eq!((e.global_bound, e.local_bound), (0, 0));
    }

    #[test]
    fn discrepancy_halves_of_k10() {
        let k10 = complete(10);
        let r = density_discrepancy(&k10, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], 1.0, 0.2);
        assert_eq!(r.edges_between, 25);
        assert_eq!(r.discrepancy, 0.0);
        assert!(r.passes);
        let small = density_discrepancy(&k10, &[0], &[1], 0.5, 0.1);
        assert!(small.skipped.is_some());
    }

    #[test]
    fn samplers_partition_and_extremes() {
        let g = onefactorization_knn(8);
        let mut rng = rng_from_seed(3);
        let (a, b) = sample_colour_subgraph(&g, 0.0, &mut rng);
        assert_eq!((a.edge_count(), b.edge_count()), (0, 64));
        let (a, b) = sample_colour_subgraph(&g, 1.0, &mut rng);
        assert_eq!((a.edge_count(), b.edge_count()), (64, 0));
        let (a, b) = sample_edge_subgraph(&g, 0.5, &mut rng);
        assert_eq!(a.edge_count() + b.edge_count(), 64);
        assert_eq!(a.union(&b).unwrap(), g);
    }

    #[test]
    fn vertex_samples() {
        let g = round_robin_kn(10).unwrap();
        let mut rng = rng_from_seed(5);
        let full = sample_vertex_subsets(&g, &[10], &mut rng).unwrap();
        assert_eq!(full.graph.edge_count(), 45);
        let none = sample_vertex_subsets(&g, &[0], &mut rng).unwrap();
        assert_eq!(none.graph.n(), 0);
        let pair = sample_vertex_subsets(&g, &[4, 4], &mut rng).unwrap();
        assert_eq!(pair.graph.edge_count(), 16);
        assert!(sample_vertex_subsets(&g, &[11], &mut rng).is_err());
    }

    #[test]
    fn cover_examples() {
        let g = round_robin_kn(10).unwrap();
        assert!(colour_cover_check(&g, 9, 0.0).holds);
        let mut single = Graph::new(6);
        single.add_edge(0, 1, 0).unwrap();
        single.add_edge(2, 3, 1).unwrap();
        single.add_edge(3, 4, 2).unwrap();
        single.add_edge(4, 5, 3).unwrap();
        assert!(!colour_cover_check(&single, 1, 0.0).holds);
    }

    #[test]
    fn orientation_basics() {
        let mut rng = rng_from_seed(9);
        let mut e = Graph::new(2);
        e.add_edge(0, 1, 0).unwrap();
        let o = random_orientation(&e, &mut rng).unwrap();
        assert_eq!(o.out[0].len() + o.out[1].len(), 1);
        let empty = random_orientation(&Graph::new(3), &mut rng).unwrap();
        assert!(empty.out.iter().all(|o| o.is_empty()));
    }

    #[test]
    fn core_examples() {
        let k10 = complete(10);
        let mut minus = k10.clone();
        for v in 0..9 {
            minus.remove_edge(v, 9);
        }
        let r = high_min_degree_core(&minus, 0.4);
        assert_eq!(r.vertices, (0..9).collect::<Vec<_>>());
        assert!(r.graph.is_complete());
        for eps in [0.01, 0.1, 0.5] {
            let r = high_min_degree_core(&k10, eps);
            assert_eq!(r.vertices.len(), 10);
            assert!(r.warning.is_none());
        }
        let mut sparse = Graph::new(10);
        sparse.add_edge(0, 1, 0).unwrap();
        assert!(high_min_degree_core(&sparse, 0.1).warning.is_some());
    }
}
