//! Rainbow 2-factors and Hamiltonian cycles in properly coloured `K_n`.
//!
//! Factors are tiled out of perfect rainbow matchings between the parts of
//! a random vertex partition, threaded along the circulant Hamiltonian
//! decomposition of `K_k`; cycles are then merged by local rotations
//! through colour-disjoint reserve graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::circulant_colouring;
use crate::graph::{cycles_from_edges, verify, verify_pairwise_disjoint, Colour, CycleFactor, Edge, Graph, StructureKind, Vertex};
use crate::matchings::{large_colour_count, perfect_matching_decomposition, PerfectConfig};
use crate::pseudorandom::{random_orientation, sample_colour_subgraph, Orientation};
use crate::regularize::{cko_bound, regular_general_subgraph, thin_large_colours};
use crate::rng::Rng;

/// Resampling cap for [`near_design`].
pub const DESIGN_RESAMPLE_CAP: usize = 5;
/// Vertex pairs sampled for the co-occurrence check.
pub const DESIGN_PAIR_SAMPLES: usize = 50;
/// Global regularization is applied only if it keeps this share of the minimum degree.
pub const REGULARIZE_KEEP: f64 = 0.9;

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Properly coloured `K_p` (`ij -> i + j mod p`) and its decomposition into
/// the `(p - 1) / 2` rainbow Hamiltonian cycles `{a, a + i}`.
#[derive(Clone, Debug)]
pub struct CirculantDecomposition {
    pub colouring: Graph,
    pub cycles: Vec<CycleFactor>,
}

pub fn circulant_decomposition(p: usize) -> Result<CirculantDecomposition> {
    if p < 3 || !is_prime(p) {
        return Err(Error::Precondition(format!("circulant decomposition needs an odd prime, got {p}")));
    }
    let colouring = circulant_colouring(p)?;
    let cycles = (1..=(p - 1) / 2)
        .map(|i| CycleFactor { cycles: vec![(0..p).map(|a| a * i % p).collect()] })
        .collect();
    Ok(CirculantDecomposition { colouring, cycles })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePartition {
    pub k1: usize,
    /// Equal to `k1` when the window holds a single prime.
    pub k2: usize,
    pub sizes: Vec<usize>,
}

impl PrimePartition {
    /// The prime of the window dividing part `i`.
    pub fn prime_of(&self, i: usize) -> usize {
        if self.sizes[i] % self.k1 == 0 {
            self.k1
        } else {
            self.k2
        }
    }
}

/// Splits `n` into about `s_hat` parts of size `(1 ± eps) n / s_hat`, each
/// divisible by one of two primes in `[k, (1 + eps) k]`.
pub fn prime_partition(n: usize, k: usize, s_hat: usize, eps: f64) -> Result<PrimePartition> {
    if k < 2 || n < k {
        return Err(Error::Infeasible(format!("cannot tile n = {n} with primes at least {k}")));
    }
    let hi = ((1.0 + eps) * k as f64).floor() as usize;
    let primes: Vec<usize> = (k..=hi.max(k)).filter(|&q| is_prime(q)).take(2).collect();
    let Some(&k1) = primes.first() else {
        return Err(Error::Infeasible(format!("no prime in [{k}, {hi}]")));
    };
    let k2 = primes.get(1).copied().unwrap_or(k1);
    let target = n as f64 / s_hat.max(1) as f64;
    let fits = |size: usize| (size as f64 - target).abs() <= eps * target + 1e-9;
    let z2_max = if k2 == k1 { 0 } else { n / k2 };
    for z2 in 0..=z2_max {
        let rest = n - k2 * z2;
        if rest % k1 != 0 {
            continue;
        }
        let mut sizes = split_multiples(rest / k1, k1, target);
        sizes.extend(split_multiples(z2, k2, target));
        if sizes.iter().all(|&s| fits(s)) {
            return Ok(PrimePartition { k1, k2, sizes });
        }
    }
    Err(Error::Infeasible(format!(
        "no split of {n} into parts near {target:.1} divisible by {k1} or {k2}; widen eps"
    )))
}

/// `z` copies of `q` grouped into parts of size near `target`.
fn split_multiples(z: usize, q: usize, target: f64) -> Vec<usize> {
    if z == 0 {
        return Vec::new();
    }
    let parts = ((z * q) as f64 / target).round().max(1.0) as usize;
    let parts = parts.min(z);
    (0..parts).map(|i| q * (z / parts + usize::from(i < z % parts))).collect()
}

/// Random relabellings of one prime partition of `[n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearDesign {
    /// `partitions[i][j]` is part `j` of partition `i`.
    pub partitions: Vec<Vec<Vec<Vertex>>>,
    /// `part_primes[i][j]` divides `|partitions[i][j]|`.
    pub part_primes: Vec<Vec<usize>>,
    pub s: usize,
    /// Expected co-occurrence count of a vertex pair.
    pub expected_cooccurrence: f64,
    pub attempts: usize,
}

impl NearDesign {
    pub fn cooccurrence(&self, x: Vertex, y: Vertex) -> usize {
        self.partitions
            .iter()
            .filter(|p| p.iter().any(|part| part.contains(&x) && part.contains(&y)))
            .count()
    }
}

/// `ceil(s^2 ln^2 n)` random copies of a [`prime_partition`]; the pair
/// co-occurrence counts of a sample of pairs must lie within `5 eps` of
/// their mean, else the whole family is redrawn.
pub fn near_design(n: usize, s_hat: usize, k: usize, eps: f64, rng: &mut Rng) -> Result<NearDesign> {
    let pp = prime_partition(n, k, s_hat, eps)?;
    let s = pp.sizes.len();
    let ln = (n as f64).ln();
    let copies = ((s * s) as f64 * ln * ln).ceil().max(1.0) as usize;
    let pairs = n * n.saturating_sub(1) / 2;
    let expected = if pairs == 0 {
        copies as f64
    } else {
        copies as f64 * pp.sizes.iter().map(|&m| (m * m.saturating_sub(1) / 2) as f64).sum::<f64>() / pairs as f64
    };
    let primes: Vec<usize> = (0..s).map(|j| pp.prime_of(j)).collect();
    for attempt in 1..=DESIGN_RESAMPLE_CAP {
        let mut partitions = Vec::with_capacity(copies);
        let mut part_of = vec![vec![0usize; n]; copies];
        for labels in part_of.iter_mut() {
            let mut perm: Vec<Vertex> = (0..n).collect();
            perm.shuffle(rng);
            let mut parts = Vec::with_capacity(s);
            let mut start = 0;
            for (j, &m) in pp.sizes.iter().enumerate() {
                let part: Vec<Vertex> = perm[start..start + m].to_vec();
                for &v in &part {
                    labels[v] = j;
                }
                parts.push(part);
                start += m;
            }
            partitions.push(parts);
        }
        let mut ok = true;
        if n >= 2 {
            for _ in 0..DESIGN_PAIR_SAMPLES.min(pairs) {
                let x = rng.gen_range(0..n);
                let mut y = rng.gen_range(0..n - 1);
                if y >= x {
                    y += 1;
                }
                let count = part_of.iter().filter(|l| l[x] == l[y]).count() as f64;
                if (count - expected).abs() > 5.0 * eps * expected + 1e-9 {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(NearDesign {
                part_primes: vec![primes.clone(); copies],
                partitions,
                s,
                expected_cooccurrence: expected,
                attempts: attempt,
            });
        }
    }
    Err(Error::RetryCap { what: "near design co-occurrence".into(), attempts: DESIGN_RESAMPLE_CAP })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoFactorConfig {
    /// Prime; every cycle of an emitted factor has at least `k` vertices.
    pub k: usize,
    pub perfect: PerfectConfig,
    /// Part count target when `k` does not divide `n`.
    pub s_hat: usize,
    pub design_eps: f64,
}

impl Default for TwoFactorConfig {
    fn default() -> Self {
        TwoFactorConfig { k: 5, perfect: PerfectConfig::default(), s_hat: 4, design_eps: 0.2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoFactorOutcome {
    pub factors: Vec<CycleFactor>,
    /// Set when `k` does not divide `n` and the vertex set was cut into
    /// prime-divisible parts; edges between parts are then unused.
    pub collapsed: bool,
    pub notes: Vec<String>,
}

/// Edge-disjoint rainbow 2-factors of `g ∪ j` with all cycles of length at
/// least `k`. `j` (colour-disjoint from `g`) supplies the completion
/// reserves of the perfect-matching sub-problems.
pub fn two_factor_decomposition(g: &Graph, j: &Graph, config: &TwoFactorConfig, rng: &mut Rng) -> Result<TwoFactorOutcome> {
    if g.is_bipartite() || j.is_bipartite() {
        return Err(Error::Precondition("2-factor decomposition works on general graphs".into()));
    }
    if !g.colours().is_disjoint(&j.colours()) {
        return Err(Error::Precondition("g and j must be colour-disjoint".into()));
    }
    let host = g.union(j)?;
    let k = config.k;
    if k < 3 || !is_prime(k) {
        return Err(Error::Precondition(format!("cycle length bound k = {k} must be an odd prime")));
    }
    let n = g.n();
    let mut out = TwoFactorOutcome::default();
    if g.edge_count() == 0 || n < k {
        return Ok(out);
    }
    if n % k == 0 {
        let all: Vec<Vertex> = (0..n).collect();
        out.factors = tile(g, j, &all, k, &config.perfect, rng, &mut out.notes)?;
    } else {
        out.collapsed = true;
        let pp = prime_partition(n, k, config.s_hat, config.design_eps)?;
        let s = pp.sizes.len();
        out.notes.push(format!("k = {k} does not divide n = {n}: single prime partition into {s} parts"));
        let mut perm: Vec<Vertex> = (0..n).collect();
        perm.shuffle(rng);
        let mut parts = Vec::with_capacity(s);
        let mut start = 0;
        for &m in &pp.sizes {
            parts.push(perm[start..start + m].to_vec());
            start += m;
        }
        let group: HashMap<Colour, usize> = host.colours().into_iter().map(|c| (c, rng.gen_range(0..s))).collect();
        for t in 0..s {
            let mut per_part: Vec<Vec<CycleFactor>> = Vec::with_capacity(s);
            for (jdx, part) in parts.iter().enumerate() {
                let want = (jdx + t) % s;
                let gs = g.filter_edges(|_, c| group[&c] == want);
                let js = j.filter_edges(|_, c| group[&c] == want);
                per_part.push(tile(&gs, &js, part, pp.prime_of(jdx), &config.perfect, rng, &mut out.notes)?);
            }
            let count = per_part.iter().map(Vec::len).min().unwrap_or(0);
            for idx in 0..count {
                let cycles = per_part.iter().flat_map(|f| f[idx].cycles.iter().cloned()).collect();
                out.factors.push(CycleFactor { cycles });
            }
        }
    }
    let kind = StructureKind::TwoFactor { min_cycle: k };
    let before = out.factors.len();
    out.factors.retain(|f| verify(f, &host, kind).is_valid());
    debug_assert_eq!(before, out.factors.len(), "assembled factor failed verification");
    if before != out.factors.len() {
        out.notes.push(format!("{} assembled factors failed verification", before - out.factors.len()));
    }
    info!("{} rainbow 2-factors", out.factors.len());
    Ok(out)
}

/// 2-factors on `vertices` (size divisible by the prime `k`): random parts
/// `V_0..V_{k-1}` and colour classes `C_0..C_{k-1}`, perfect rainbow
/// matchings of every `G_{C_c}[V_a, V_b]`, threaded along the circulant
/// Hamiltonian cycles of `K_k`.
fn tile(
    g: &Graph,
    j: &Graph,
    vertices: &[Vertex],
    k: usize,
    perfect: &PerfectConfig,
    rng: &mut Rng,
    notes: &mut Vec<String>,
) -> Result<Vec<CycleFactor>> {
    let n = g.n();
    let m = vertices.len() / k;
    let mut order = vertices.to_vec();
    order.shuffle(rng);
    let parts: Vec<Vec<Vertex>> = order.chunks(m).map(<[Vertex]>::to_vec).collect();
    let mut colours: BTreeSet<Colour> = g.colours();
    colours.extend(j.colours());
    let class: HashMap<Colour, usize> = colours.into_iter().map(|c| (c, rng.gen_range(0..k))).collect();

    let mut matchings: BTreeMap<(usize, usize, usize), Vec<Vec<Edge>>> = BTreeMap::new();
    for a in 0..k {
        for b in a + 1..k {
            let gab = g.bipartite_between(&parts[a], &parts[b])?;
            let jab = j.bipartite_between(&parts[a], &parts[b])?;
            for c in 0..k {
                let gl = gab.filter_edges(|_, col| class[&col] == c);
                let jl = jab.filter_edges(|_, col| class[&col] == c);
                let family = perfect_matching_decomposition(&gl, &jl, perfect, rng)?;
                let to_global = |v: Vertex| if v < m { parts[a][v] } else { parts[b][v - m] };
                let global: Vec<Vec<Edge>> = family
                    .matchings
                    .iter()
                    .map(|mm| mm.edges.iter().map(|e| Edge::new(to_global(e.0), to_global(e.1))).collect())
                    .collect();
                debug!("G[{a},{b}] class {c}: {} perfect matchings", global.len());
                matchings.insert((a, b, c), global);
            }
        }
    }

    assemble(n, k, vertices.len(), &matchings, notes)
}

/// Threads the matchings `matchings[(a, b, c)]` (`a < b`) of part pair
/// `{a, b}` in colour class `c` along every circulant Hamiltonian cycle
/// `H` of `K_k` and shift `t`: the `idx`-th factor of `(H, t)` is the union
/// over edges `ab` of `H` of the `idx`-th matching of `(a, b, a + b + t)`.
fn assemble(
    n: usize,
    k: usize,
    span: usize,
    matchings: &BTreeMap<(usize, usize, usize), Vec<Vec<Edge>>>,
    notes: &mut Vec<String>,
) -> Result<Vec<CycleFactor>> {
    let template = circulant_decomposition(k)?;
    let mut factors = Vec::new();
    for h in &template.cycles {
        let seq = &h.cycles[0];
        for t in 0..k {
            let keys: Vec<(usize, usize, usize)> = (0..k)
                .map(|i| {
                    let (a, b) = (seq[i], seq[(i + 1) % k]);
                    (a.min(b), a.max(b), (a + b + t) % k)
                })
                .collect();
            let count = keys.iter().map(|key| matchings.get(key).map_or(0, Vec::len)).min().unwrap_or(0);
            for idx in 0..count {
                let edges: Vec<Edge> = keys.iter().flat_map(|key| matchings[key][idx].iter().copied()).collect();
                match cycles_from_edges(n, &edges) {
                    Some(cycles) if cycles.iter().map(Vec::len).sum::<usize>() == span => {
                        factors.push(CycleFactor { cycles });
                    }
                    _ => notes.push("assembled union is not 2-regular on the tile".into()),
                }
            }
        }
    }
    Ok(factors)
}

/// A reserve digraph: the undirected coloured graph plus its orientation.
#[derive(Clone, Debug)]
pub struct DirectedReserve {
    pub graph: Graph,
    pub orientation: Orientation,
}

impl DirectedReserve {
    pub fn orient(graph: Graph, rng: &mut Rng) -> Result<Self> {
        let orientation = random_orientation(&graph, rng)?;
        Ok(DirectedReserve { graph, orientation })
    }

    /// Every edge oriented both ways.
    pub fn symmetric(graph: Graph) -> Self {
        let out: Vec<Vec<Vertex>> = (0..graph.n()).map(|v| graph.neighbours(v).collect()).collect();
        let min_out_degree = out.iter().map(Vec::len).min().unwrap_or(0);
        DirectedReserve { graph, orientation: Orientation { out, min_out_degree, attempts: 0 } }
    }

    fn arcs_from(&self, v: Vertex) -> impl Iterator<Item = (Vertex, Colour)> + '_ {
        self.orientation.out[v].iter().map(move |&w| (w, self.graph.colour(v, w).expect("arc of the reserve")))
    }
}

/// Colour-disjoint reserves for merging cycles.
#[derive(Clone, Debug)]
pub struct HamiltonReserves {
    pub e1: Graph,
    pub e2: Graph,
    pub e3: Graph,
    pub dx: DirectedReserve,
    pub dy: DirectedReserve,
}

impl HamiltonReserves {
    fn graphs(&self) -> [&Graph; 5] {
        [&self.e1, &self.e2, &self.e3, &self.dx.graph, &self.dy.graph]
    }
}

/// Result of one rotation: the merged cycles and the edges swapped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub cycles: Vec<Vec<Vertex>>,
    pub removed: Vec<Edge>,
    pub added: Vec<Edge>,
}

/// Cycle bookkeeping: position of every vertex.
struct Layout<'a> {
    cycles: &'a [Vec<Vertex>],
    at: HashMap<Vertex, (usize, usize)>,
}

impl<'a> Layout<'a> {
    fn new(cycles: &'a [Vec<Vertex>]) -> Self {
        let mut at = HashMap::new();
        for (ci, c) in cycles.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                at.insert(v, (ci, i));
            }
        }
        Layout { cycles, at }
    }
    fn succ(&self, v: Vertex) -> Vertex {
        let (ci, i) = self.at[&v];
        let c = &self.cycles[ci];
        c[(i + 1) % c.len()]
    }
    fn pred(&self, v: Vertex) -> Vertex {
        let (ci, i) = self.at[&v];
        let c = &self.cycles[ci];
        c[(i + c.len() - 1) % c.len()]
    }
    fn cycle_of(&self, v: Vertex) -> Option<usize> {
        self.at.get(&v).map(|&(ci, _)| ci)
    }
    fn is_cycle_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.cycle_of(u).is_some() && (self.succ(u) == v || self.pred(u) == v)
    }
}

/// Replaces `removed` by `added` in the union of `involved` cycles; `None`
/// unless the result is a single cycle through all their vertices.
fn rebuild(n: usize, involved: &[&Vec<Vertex>], removed: &[Edge], added: &[Edge]) -> Option<Vec<Vertex>> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut total = 0;
    for c in involved {
        total += c.len();
        for i in 0..c.len() {
            edges.push(Edge::new(c[i], c[(i + 1) % c.len()]));
        }
    }
    for r in removed {
        let pos = edges.iter().position(|e| e == r)?;
        edges.swap_remove(pos);
    }
    edges.extend_from_slice(added);
    let mut cycles = cycles_from_edges(n, &edges)?;
    (cycles.len() == 1 && cycles[0].len() == total).then(|| cycles.remove(0))
}

type Usable<'a> = dyn Fn(Edge, Colour) -> bool + 'a;

fn join_filtered(
    n: usize,
    c1: &[Vertex],
    c2: &[Vertex],
    reserves: [&Graph; 3],
    protected: &HashSet<Edge>,
    usable: &Usable<'_>,
    rng: &mut Rng,
) -> std::result::Result<Rotation, String> {
    let (small, big) = if c1.len() <= c2.len() { (c1.to_vec(), c2.to_vec()) } else { (c2.to_vec(), c1.to_vec()) };
    let cycles = [small.clone(), big.clone()];
    let layout = Layout::new(&cycles);
    let in_big = |v: Vertex| layout.cycle_of(v) == Some(1);
    let [e, f, g] = reserves;
    let mut starts = small.clone();
    starts.shuffle(rng);
    let mut saw_a = false;
    let mut saw_b = false;
    for x0 in starts {
        for y0 in [layout.succ(x0), layout.pred(x0)] {
            if protected.contains(&Edge::new(x0, y0)) {
                continue;
            }
            let mut a_side: Vec<(Vertex, Colour)> =
                e.adj(x0).iter().copied().filter(|&(a, c)| in_big(a) && usable(Edge::new(x0, a), c)).collect();
            let b_side: HashMap<Vertex, Colour> =
                f.adj(y0).iter().copied().filter(|&(b, c)| in_big(b) && usable(Edge::new(y0, b), c)).collect();
            saw_a |= !a_side.is_empty();
            saw_b |= !b_side.is_empty();
            if b_side.is_empty() {
                continue;
            }
            a_side.shuffle(rng);
            for &(a, c1) in &a_side {
                for (z, forward) in [(layout.pred(a), true), (layout.succ(a), false)] {
                    if protected.contains(&Edge::new(z, a)) {
                        continue;
                    }
                    for &(w, c3) in g.adj(z) {
                        if !in_big(w) || w == a || layout.is_cycle_edge(z, w) || !usable(Edge::new(z, w), c3) {
                            continue;
                        }
                        let b = if forward { layout.succ(w) } else { layout.pred(w) };
                        let Some(&c2) = b_side.get(&b) else { continue };
                        if b == a || protected.contains(&Edge::new(w, b)) || c1 == c2 || c2 == c3 || c1 == c3 {
                            continue;
                        }
                        let removed = vec![Edge::new(x0, y0), Edge::new(z, a), Edge::new(w, b)];
                        let added = vec![Edge::new(x0, a), Edge::new(y0, b), Edge::new(z, w)];
                        if let Some(cycle) = rebuild(n, &[&small, &big], &removed, &added) {
                            return Ok(Rotation { cycles: vec![cycle], removed, added });
                        }
                    }
                }
            }
        }
    }
    Err(match (saw_a, saw_b) {
        (false, _) => "no usable first-reserve edge from the shorter cycle into the longer".into(),
        (_, false) => "no usable second-reserve edge from the shorter cycle into the longer".into(),
        _ => "no usable third-reserve edge closing the rotation".into(),
    })
}

/// Merges two vertex-disjoint cycles into one using one edge each of `e`,
/// `f` and `g`; `anchor` stays on the cycle.
pub fn join_two_cycles(c1: &[Vertex], c2: &[Vertex], e: &Graph, f: &Graph, g: &Graph, anchor: Edge, rng: &mut Rng) -> Result<Rotation> {
    if c1.iter().any(|v| c2.contains(v)) {
        return Err(Error::Precondition("cycles must be vertex-disjoint".into()));
    }
    let n = e.n();
    let protected: HashSet<Edge> = [anchor].into_iter().collect();
    join_filtered(n, c1, c2, [e, f, g], &protected, &|_, _| true, rng).map_err(Error::SearchFailed)
}

#[allow(clippy::too_many_arguments)]
fn absorb_filtered(
    n: usize,
    cycles: &[Vec<Vertex>],
    small: usize,
    anchors: &[(Vertex, Vertex)],
    e: &Graph,
    dx: &DirectedReserve,
    dy: &DirectedReserve,
    usable: &Usable<'_>,
    rng: &mut Rng,
) -> std::result::Result<Rotation, String> {
    let layout = Layout::new(cycles);
    let (x0, y0) = anchors[small];
    let blocked: HashSet<Vertex> = anchors
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != small)
        .flat_map(|(_, &(x, y))| [x, y])
        .chain(cycles[small].iter().copied())
        .collect();
    let mut a_side: Vec<(Vertex, Colour)> =
        dx.arcs_from(x0).filter(|&(a, c)| !blocked.contains(&a) && usable(Edge::new(x0, a), c)).collect();
    let b_side: HashMap<Vertex, Colour> =
        dy.arcs_from(y0).filter(|&(b, c)| !blocked.contains(&b) && usable(Edge::new(y0, b), c)).collect();
    if a_side.is_empty() {
        return Err("no usable out-arc of the x-anchor".into());
    }
    if b_side.is_empty() {
        return Err("no usable out-arc of the y-anchor".into());
    }
    a_side.shuffle(rng);
    for &(a, c1) in &a_side {
        let ca = layout.cycle_of(a).expect("2-factor spans");
        for (z, forward) in [(layout.pred(a), true), (layout.succ(a), false)] {
            for &(w, c3) in e.adj(z) {
                let Some(cw) = layout.cycle_of(w) else { continue };
                if cw == small || w == a || layout.is_cycle_edge(z, w) || !usable(Edge::new(z, w), c3) {
                    continue;
                }
                let options = if cw == ca {
                    vec![if forward { layout.succ(w) } else { layout.pred(w) }]
                } else {
                    vec![layout.succ(w), layout.pred(w)]
                };
                for b in options {
                    let Some(&c2) = b_side.get(&b) else { continue };
                    if b == a || Edge::new(w, b) == Edge::new(z, a) || c1 == c2 || c2 == c3 || c1 == c3 {
                        continue;
                    }
                    let removed = vec![Edge::new(x0, y0), Edge::new(z, a), Edge::new(w, b)];
                    let added = vec![Edge::new(x0, a), Edge::new(y0, b), Edge::new(z, w)];
                    let mut involved: Vec<usize> = vec![small, ca, cw];
                    involved.sort_unstable();
                    involved.dedup();
                    let refs: Vec<&Vec<Vertex>> = involved.iter().map(|&i| &cycles[i]).collect();
                    if let Some(cycle) = rebuild(n, &refs, &removed, &added) {
                        return Ok(Rotation { cycles: vec![cycle], removed, added });
                    }
                }
            }
        }
    }
    Err("no usable reserve edge closing the rotation".into())
}

/// Absorbs cycle `small` into one or two other cycles: one edge of `e`,
/// one `dx` arc leaving its x-anchor and one `dy` arc leaving its y-anchor.
/// `anchors[i]` is an edge of cycle `i`; other cycles keep theirs.
pub fn absorb_small_cycle(
    factor: &CycleFactor,
    small: usize,
    anchors: &[(Vertex, Vertex)],
    e: &Graph,
    dx: &DirectedReserve,
    dy: &DirectedReserve,
    rng: &mut Rng,
) -> Result<CycleFactor> {
    check_anchors(factor, anchors)?;
    if small >= factor.cycles.len() || factor.cycles.len() < 2 {
        return Err(Error::Precondition("need a designated cycle and at least one other".into()));
    }
    let rot = absorb_filtered(e.n(), &factor.cycles, small, anchors, e, dx, dy, &|_, _| true, rng).map_err(Error::SearchFailed)?;
    Ok(apply_rotation(factor, &rot))
}

fn check_anchors(factor: &CycleFactor, anchors: &[(Vertex, Vertex)]) -> Result<()> {
    if anchors.len() != factor.cycles.len() {
        return Err(Error::Precondition("one anchor per cycle".into()));
    }
    let layout = Layout::new(&factor.cycles);
    for (i, &(x, y)) in anchors.iter().enumerate() {
        if layout.cycle_of(x) != Some(i) || !layout.is_cycle_edge(x, y) {
            return Err(Error::Precondition(format!("anchor {i} is not an edge of cycle {i}")));
        }
    }
    Ok(())
}

/// Replaces the cycles touched by `rot` with its merged cycle.
fn apply_rotation(factor: &CycleFactor, rot: &Rotation) -> CycleFactor {
    let merged: HashSet<Vertex> = rot.cycles.iter().flatten().copied().collect();
    let mut cycles: Vec<Vec<Vertex>> = factor.cycles.iter().filter(|c| !merged.contains(&c[0])).cloned().collect();
    cycles.extend(rot.cycles.iter().cloned());
    CycleFactor { cycles }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonCompletion {
    pub cycle: CycleFactor,
    /// Reserve edges on the final cycle.
    pub used: Vec<Edge>,
    pub joins: usize,
    pub absorptions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonFailure {
    pub partial: CycleFactor,
    pub step: usize,
    pub reason: String,
}

/// Uniform anchor edge per cycle, in random direction.
pub fn random_anchors(factor: &CycleFactor, rng: &mut Rng) -> Vec<(Vertex, Vertex)> {
    factor
        .cycles
        .iter()
        .map(|c| {
            let i = rng.gen_range(0..c.len());
            let (x, y) = (c[i], c[(i + 1) % c.len()]);
            if rng.gen_bool(0.5) {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect()
}

/// Merges the cycles of a rainbow 2-factor into one rainbow Hamiltonian
/// cycle. The shortest cycle is joined to the next shortest through
/// `e1, e2, e3` when it has at least `lambda n` vertices, otherwise it is
/// absorbed through `e1, dx, dy` at its anchor. Reserve edges with a colour
/// on the current factor, or listed in `skip`, are never used.
pub fn complete_hamiltonian(
    host: &Graph,
    factor: &CycleFactor,
    reserves: &HamiltonReserves,
    anchors: &[(Vertex, Vertex)],
    lambda: f64,
    skip: &HashSet<Edge>,
    rng: &mut Rng,
) -> Result<std::result::Result<HamiltonCompletion, HamiltonFailure>> {
    let n = host.n();
    if !verify(factor, host, StructureKind::TwoFactor { min_cycle: 3 }).is_valid() {
        return Err(Error::Precondition("input is not a rainbow 2-factor of the host".into()));
    }
    check_anchors(factor, anchors)?;
    let factor_colours: BTreeSet<Colour> = factor_edges(factor).iter().filter_map(|&e| host.edge_colour(e)).collect();
    let mut seen: BTreeSet<Colour> = factor_colours.clone();
    for r in reserves.graphs() {
        for (e, c) in r.edges() {
            if host.edge_colour(e) != Some(c) {
                return Err(Error::Precondition(format!("reserve edge {e:?} missing from the host")));
            }
        }
        let cs = r.colours();
        if !cs.is_disjoint(&seen) {
            return Err(Error::Precondition("reserves must be colour-disjoint from the factor and each other".into()));
        }
        seen.extend(cs);
    }

    let original: HashSet<Edge> = factor_edges(factor).into_iter().collect();
    let mut current = factor.clone();
    let mut anchors = anchors.to_vec();
    let (mut joins, mut absorptions) = (0, 0);
    let mut step = 0;
    while current.cycles.len() > 1 {
        let in_use: HashSet<Colour> = factor_edges(&current).iter().filter_map(|&e| host.edge_colour(e)).collect();
        let usable = |e: Edge, c: Colour| !in_use.contains(&c) && !skip.contains(&e);
        let mut order: Vec<usize> = (0..current.cycles.len()).collect();
        order.sort_by_key(|&i| (current.cycles[i].len(), i));
        let (s0, s1) = (order[0], order[1]);
        let outcome = if current.cycles[s0].len() as f64 >= lambda * n as f64 {
            let protected: HashSet<Edge> = [Edge::new(anchors[s0].0, anchors[s0].1), Edge::new(anchors[s1].0, anchors[s1].1)]
                .into_iter()
                .collect();
            let r = join_filtered(
                n,
                &current.cycles[s0],
                &current.cycles[s1],
                [&reserves.e1, &reserves.e2, &reserves.e3],
                &protected,
                &usable,
                rng,
            );
            joins += usize::from(r.is_ok());
            r
        } else {
            let r = absorb_filtered(n, &current.cycles, s0, &anchors, &reserves.e1, &reserves.dx, &reserves.dy, &usable, rng);
            absorptions += usize::from(r.is_ok());
            r
        };
        let rot = match outcome {
            Ok(rot) => rot,
            Err(reason) => return Ok(Err(HamiltonFailure { partial: current, step, reason })),
        };
        let next = apply_rotation(&current, &rot);
        // each cycle keeps one surviving anchor edge
        let edge_set: HashSet<Edge> = factor_edges(&next).into_iter().collect();
        let layout = Layout::new(&next.cycles);
        let mut next_anchors = vec![None; next.cycles.len()];
        for (i, &(x, y)) in anchors.iter().enumerate() {
            if i == s0 && absorptions > 0 && current.cycles[s0].len() as f64 <= lambda * n as f64 {
                continue;
            }
            if edge_set.contains(&Edge::new(x, y)) {
                let ci = layout.cycle_of(x).expect("spanning");
                next_anchors[ci].get_or_insert((x, y));
            }
        }
        anchors = next_anchors.into_iter().map(|a| a.expect("every cycle keeps an anchor")).collect();
        current = next;
        step += 1;
        debug_assert!(verify(&current, host, StructureKind::TwoFactor { min_cycle: 3 }).is_valid());
    }
    if !verify(&current, host, StructureKind::HamiltonianCycle).is_valid() {
        return Err(Error::SearchFailed("rotation produced an invalid Hamiltonian cycle".into()));
    }
    let mut used: Vec<Edge> = factor_edges(&current).into_iter().filter(|e| !original.contains(e)).collect();
    used.sort_unstable();
    Ok(Ok(HamiltonCompletion { cycle: current, used, joins, absorptions }))
}

fn factor_edges(f: &CycleFactor) -> Vec<Edge> {
    f.cycles
        .iter()
        .flat_map(|c| (0..c.len()).map(move |i| Edge::new(c[i], c[(i + 1) % c.len()])))
        .collect()
}

/// Anchor choice for a whole family with the anchor union's maximum degree
/// at most `4n/k`, redrawn up to `cap` times.
pub fn choose_anchors(factors: &[CycleFactor], n: usize, k: usize, cap: usize, rng: &mut Rng) -> (Vec<Vec<(Vertex, Vertex)>>, bool) {
    let limit = 4 * n / k.max(1);
    let mut last = Vec::new();
    for _ in 0..cap.max(1) {
        let anchors: Vec<Vec<(Vertex, Vertex)>> = factors.iter().map(|f| random_anchors(f, rng)).collect();
        let mut deg = vec![0usize; n];
        for &(x, y) in anchors.iter().flatten() {
            deg[x] += 1;
            deg[y] += 1;
        }
        let ok = deg.iter().all(|&d| d <= limit);
        if ok {
            return (anchors, true);
        }
        last = anchors;
    }
    (last, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonConfig {
    /// Gate: at most `(1 - eps) n` colours of size at least `(1 - eps) n / 2`.
    pub eps: f64,
    pub enforce_gate: bool,
    /// Colour shares of the 2-factor reserve `J1` and the completion reserve `J2`.
    pub j1_share: f64,
    pub j2_share: f64,
    pub two_factor: TwoFactorConfig,
    pub lambda: f64,
    pub anchor_cap: usize,
    /// Colour shares of `J2` going to `E1, E2, E3, D_X, D_Y`.
    pub reserve_split: [f64; 5],
}

impl Default for HamiltonConfig {
    fn default() -> Self {
        HamiltonConfig {
            eps: 0.05,
            enforce_gate: true,
            j1_share: 0.55,
            j2_share: 0.15,
            two_factor: TwoFactorConfig::default(),
            lambda: 0.1,
            anchor_cap: 10,
            reserve_split: [0.2; 5],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HamiltonOutcome {
    pub factors: Vec<CycleFactor>,
    pub cycles: Vec<CycleFactor>,
    pub notes: Vec<String>,
}

/// `≤ (1 - eps) n` colours having `≥ (1 - eps) n / 2` edges.
pub fn few_large_colours_kn(colouring: &Graph, eps: f64) -> bool {
    let n = colouring.n() as f64;
    large_colour_count(colouring, (1.0 - eps) * n / 2.0) as f64 <= (1.0 - eps) * n + 1e-9
}

/// Splits `colours` of `g` into classes with the given relative shares.
fn split_by_colour(g: &Graph, shares: &[f64], rng: &mut Rng) -> Vec<Graph> {
    let total: f64 = shares.iter().sum();
    let mut side: HashMap<Colour, usize> = HashMap::new();
    for c in g.colours() {
        let mut r = rng.gen::<f64>() * total;
        let mut k = shares.len() - 1;
        for (i, &s) in shares.iter().enumerate() {
            if r < s {
                k = i;
                break;
            }
            r -= s;
        }
        side.insert(c, k);
    }
    (0..shares.len()).map(|i| g.filter_edges(|_, c| side[&c] == i)).collect()
}

/// Edge-disjoint rainbow Hamiltonian cycles of a properly coloured complete
/// graph: colour-sample reserves `J1`, `J2`, thin and regularize the rest,
/// decompose into 2-factors with `J1`, then merge each factor's cycles
/// through reserves cut from `J2`.
pub fn hamiltonian_decomposition(colouring: &Graph, config: &HamiltonConfig, rng: &mut Rng) -> Result<HamiltonOutcome> {
    let n = colouring.n();
    if colouring.is_bipartite() || !colouring.is_proper() {
        return Err(Error::Precondition("need a proper colouring of a general graph".into()));
    }
    let mut out = HamiltonOutcome::default();
    if !few_large_colours_kn(colouring, config.eps) {
        let msg = format!(
            "more than (1 - eps) n colours of size at least (1 - eps) n / 2 (eps = {})",
            config.eps
        );
        if config.enforce_gate {
            return Err(Error::Precondition(msg));
        }
        out.notes.push(format!("gate bypassed: {msg}"));
    }
    if n == 3 && colouring.edge_count() == 3 && colouring.colour_count() == 3 {
        let tri = CycleFactor { cycles: vec![vec![0, 1, 2]] };
        out.factors.push(tri.clone());
        out.cycles.push(tri);
        return Ok(out);
    }

    let (j1, rest) = sample_colour_subgraph(colouring, config.j1_share, rng);
    let (j2, g) = sample_colour_subgraph(&rest, config.j2_share / (1.0 - config.j1_share).max(1e-9), rng);
    let thin = thin_large_colours(&g, config.eps, 2, rng);
    if let Some(w) = thin.warning {
        out.notes.push(w);
    }
    let mut g = thin.graph;
    let dmin = g.min_degree();
    let r = (dmin.min(cko_bound(n, dmin).floor() as usize)) & !1;
    // near the n/2 threshold the regular subgraph keeps only about half of
    // the edges; the sub-problems are padded individually instead
    if 2 * dmin >= n && r >= 2 && r as f64 >= REGULARIZE_KEEP * dmin as f64 {
        match regular_general_subgraph(&g, r) {
            Ok(reg) => g = reg,
            Err(e) => out.notes.push(format!("regular subgraph at r = {r} failed: {e}")),
        }
    } else {
        out.notes.push(format!("regular subgraph skipped: min degree {dmin}, attainable r = {r}"));
    }

    let tf = two_factor_decomposition(&g, &j1, &config.two_factor, rng)?;
    out.notes.extend(tf.notes);
    out.factors = tf.factors;

    let parts = split_by_colour(&j2, &config.reserve_split, rng);
    let [e1, e2, e3, dx, dy]: [Graph; 5] = parts.try_into().expect("five reserve classes");
    let reserves = HamiltonReserves {
        e1,
        e2,
        e3,
        dx: DirectedReserve::orient(dx, rng)?,
        dy: DirectedReserve::orient(dy, rng)?,
    };
    let (anchors, ok) = choose_anchors(&out.factors, n, config.two_factor.k, config.anchor_cap, rng);
    if !ok {
        out.notes.push("anchor degree bound 4n/k missed after the resample cap".into());
    }
    let mut skip: HashSet<Edge> = HashSet::new();
    for (i, f) in out.factors.iter().enumerate() {
        match complete_hamiltonian(colouring, f, &reserves, &anchors[i], config.lambda, &skip, rng)? {
            Ok(done) => {
                skip.extend(done.used.iter().copied());
                out.cycles.push(done.cycle);
            }
            Err(fail) => out.notes.push(format!("factor {i}: completion failed at step {}: {}", fail.step, fail.reason)),
        }
    }
    debug_assert!(verify_pairwise_disjoint(&out.cycles).is_valid());
    info!("{} of {} factors completed to Hamiltonian cycles", out.cycles.len(), out.factors.len());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn primes() {
        let ps: Vec<usize> = (0..30).filter(|&p| is_prime(p)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn circulant_small_cases() {
        let d = circulant_decomposition(3).unwrap();
        assert_eq!(d.cycles.len(), 1);
        let tri = &d.cycles[0].cycles[0];
        let mut colours: Vec<Colour> = (0..3).map(|i| d.colouring.colour(tri[i], tri[(i + 1) % 3]).unwrap()).collect();
        colours.sort_unstable();
        assert_eq!(colours, vec![0, 1, 2]);
        assert!(circulant_decomposition(4).is_err());
        assert!(circulant_decomposition(9).is_err());
    }

    #[test]
    fn circulant_five_matches_hand_values() {
        let d = circulant_decomposition(5).unwrap();
        let edge_colours = |f: &CycleFactor| -> BTreeMap<Edge, Colour> {
            factor_edges(f).into_iter().map(|e| (e, d.colouring.edge_colour(e).unwrap())).collect()
        };
        let c1 = edge_colours(&d.cycles[0]);
        let want1: BTreeMap<Edge, Colour> = [((1, 2), 3), ((2, 3), 0), ((3, 4), 2), ((4, 0), 4), ((0, 1), 1)]
            .into_iter()
            .map(|((a, b), c)| (Edge::new(a, b), c))
            .collect();
        assert_eq!(c1, want1);
        let c2 = edge_colours(&d.cycles[1]);
        let want2: BTreeMap<Edge, Colour> = [((1, 3), 4), ((2, 4), 1), ((3, 0), 3), ((4, 1), 0), ((0, 2), 2)]
            .into_iter()
            .map(|((a, b), c)| (Edge::new(a, b), c))
            .collect();
        assert_eq!(c2, want2);
    }

    #[test]
    fn prime_partition_cases() {
        let pp = prime_partition(210, 5, 6, 0.5).unwrap();
        assert_eq!((pp.k1, pp.k2), (5, 7));
        assert_eq!(pp.sizes.iter().sum::<usize>(), 210);
        assert!(pp.sizes.iter().all(|&s| s % 5 == 0 || s % 7 == 0));
        let single = prime_partition(35, 5, 1, 0.1).unwrap();
        assert_eq!(single.sizes, vec![35]);
        assert!(prime_partition(4, 5, 1, 0.5).is_err());
        // 12 = 5a + 7b has no solution with parts near 12
        assert!(prime_partition(12, 5, 1, 0.5).is_err());
    }

    #[test]
    fn degenerate_tiling_gives_the_circulant_cycles() {
        // k = n: singleton parts, one matching (the edge ab) in class a + b
        let k = 7;
        let matchings: BTreeMap<(usize, usize, usize), Vec<Vec<Edge>>> = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| ((a, b, (a + b) % k), vec![vec![Edge::new(a, b)]])))
            .collect();
        let mut notes = Vec::new();
        let factors = assemble(k, k, k, &matchings, &mut notes).unwrap();
        assert!(notes.is_empty());
        assert_eq!(factors.len(), (k - 1) / 2);
        let host = circulant_colouring(k).unwrap();
        for f in &factors {
            assert_eq!(f.cycles.len(), 1);
            assert!(verify(f, &host, StructureKind::HamiltonianCycle).is_valid());
        }
    }

    #[test]
    fn near_design_single_part() {
        let mut rng = rng_from_seed(3);
        let d = near_design(10, 1, 5, 0.1, &mut rng).unwrap();
        assert_eq!(d.s, 1);
        let copies = d.partitions.len();
        assert_eq!(d.cooccurrence(2, 7), copies);
    }

    #[test]
    fn join_on_complete_reserves() {
        let mut rng = rng_from_seed(4);
        // host: two triangles-free cycles on 10 vertices plus all other pairs as reserves
        let c1: Vec<Vertex> = vec![0, 1, 2, 3, 4];
        let c2: Vec<Vertex> = vec![5, 6, 7, 8, 9];
        let cyc: HashSet<Edge> = [&c1, &c2]
            .iter()
            .flat_map(|c| (0..5).map(move |i| Edge::new(c[i], c[(i + 1) % 5])))
            .collect();
        let mut e = Graph::new(10);
        let mut f = Graph::new(10);
        let mut g = Graph::new(10);
        let mut next = 100;
        for u in 0..10 {
            for v in u + 1..10 {
                if cyc.contains(&Edge::new(u, v)) {
                    continue;
                }
                for r in [&mut e, &mut f, &mut g] {
                    r.add_edge(u, v, next).unwrap();
                    next += 1;
                }
            }
        }
        let rot = join_two_cycles(&c1, &c2, &e, &f, &g, Edge::new(0, 1), &mut rng).unwrap();
        assert_eq!(rot.cycles.len(), 1);
        assert_eq!(rot.cycles[0].len(), 10);
        assert!(!rot.removed.contains(&Edge::new(0, 1)));
    }

    #[test]
    fn join_with_empty_third_reserve_fails() {
        let mut rng = rng_from_seed(5);
        let c1: Vec<Vertex> = vec![0, 1, 2];
        let c2: Vec<Vertex> = vec![3, 4, 5];
        let mut e = Graph::new(6);
        for u in 0..3 {
            for v in 3..6 {
                e.add_edge(u, v, 10 + 3 * u + v).unwrap();
            }
        }
        let mut f = Graph::new(6);
        for u in 0..3 {
            for v in 3..6 {
                f.add_edge(u, v, 50 + 3 * u + v).unwrap();
            }
        }
        let g = Graph::new(6);
        assert!(matches!(
            join_two_cycles(&c1, &c2, &e, &f, &g, Edge::new(0, 1), &mut rng),
            Err(Error::SearchFailed(_))
        ));
    }
}
