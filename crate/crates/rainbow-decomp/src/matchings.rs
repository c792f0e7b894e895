//! Near-decompositions into rainbow matchings, their completion to perfect
//! ones, and the transversal pipeline for coloured `K_{n,n}`.

use std::collections::{BTreeSet, HashMap, HashSet};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{verify, verify_pairwise_disjoint, Colour, Edge, Graph, RainbowMatching, StructureKind, Vertex};
use crate::nibble::{near_perfect_rainbow_matching, NibbleConfig};
use crate::pseudorandom::{boundedness, sample_colour_subgraph};
use crate::regularize::{pad_to_regular_bipartite, regular_bipartite_subgraph, regularize_with_reserve, reserve_dense_complement, thin_large_colours};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    /// Re-regularize whenever `k | d`.
    pub k: usize,
    /// Stop at `d = nu D`.
    pub nu: f64,
    pub nibble: NibbleConfig,
    /// Stop as soon as `G_d` is not globally `d`-bounded.
    pub stop_on_unbounded: bool,
    /// Irregular input: pad up to its mean degree with dummy edges instead
    /// of cutting down to a regular subgraph at its minimum degree.
    pub pad_irregular: bool,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            k: 20,
            nu: 0.05,
            nibble: NibbleConfig { p: 0.005, ..NibbleConfig::default() },
            stop_on_unbounded: false,
            pad_irregular: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectConfig {
    pub decomposition: DecompositionConfig,
    /// The `p` of the spread-out step.
    pub spread_p: f64,
    /// Shares of the reserve colours going to `E`, `D_X`, `D_Y`.
    pub split: [f64; 3],
}

impl Default for PerfectConfig {
    fn default() -> Self {
        PerfectConfig { decomposition: DecompositionConfig::default(), spread_p: 0.0002, split: [0.34, 0.33, 0.33] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalConfig {
    pub eps: f64,
    /// Colour-sampling probability of the reserve `J`.
    pub reserve_share: f64,
    pub perfect: PerfectConfig,
}

impl Default for TransversalConfig {
    fn default() -> Self {
        TransversalConfig { eps: 0.01, reserve_share: 0.25, perfect: PerfectConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchingFamily {
    pub matchings: Vec<RainbowMatching>,
    pub dummy_colours_used: BTreeSet<Colour>,
    /// Free-form flags: boundedness violations, failed regularizations,
    /// failed completions.
    pub notes: Vec<String>,
}

impl MatchingFamily {
    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn min_size(&self) -> usize {
        self.matchings.iter().map(|m| m.len()).min().unwrap_or(0)
    }

    /// Verifies every member as `kind` in `host` and the family as pairwise
    /// edge-disjoint.
    pub fn verify(&self, host: &Graph, kind: StructureKind) -> bool {
        self.matchings.iter().all(|m| verify(m, host, kind).is_valid()) && verify_pairwise_disjoint(&self.matchings).is_valid()
    }
}

/// The descending process: peel a nibble matching off `G_d` for
/// `d = D, ..., nu D`, re-regularizing through the dense complement reserve
/// whenever `k | d`. Patch matchings get fresh dummy colours, stripped from
/// every emitted matching.
pub fn near_matching_decomposition(graph: &Graph, config: &DecompositionConfig, rng: &mut Rng) -> Result<MatchingFamily> {
    let n = graph.part_size().ok_or_else(|| Error::Precondition("graph is not bipartite".into()))?;
    let mut family = MatchingFamily::default();
    if graph.edge_count() == 0 {
        return Ok(family);
    }
    if config.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let base = graph.fresh_colour();
    let mut next_dummy = base;
    let mut regular = graph.clone();
    if graph.min_degree() != graph.max_degree() {
        let mean = graph.edge_count() / n;
        let padded = if config.pad_irregular { pad_to_regular_bipartite(graph, mean, base)? } else { None };
        if let Some((h, added)) = padded {
            family.notes.push(format!("input not regular; padded to {mean}-regular with {added} dummy edges"));
            family.dummy_colours_used.extend(base..base + added as Colour);
            next_dummy += added as Colour;
            regular = h;
        } else {
            let mut d = graph.min_degree();
            loop {
                if let Some(h) = regular_bipartite_subgraph(graph, d)?.found() {
                    regular = h;
                    break;
                }
                d -= 1;
            }
            family.notes.push(format!("input not regular; using a {d}-regular subgraph"));
        }
    }
    let d0 = regular.max_degree();
    if d0 == 0 {
        return Ok(family);
    }
    let cut = d0 / config.k;
    let split = reserve_dense_complement(&regular, cut as f64 / n as f64, rng)?;
    let mut g = split.h;
    let mut reserve = split.complement;
    let big_d = d0 - cut;
    g.set_dummy_base(graph.dummy_base().unwrap_or(base));
    let stop = ((config.nu * big_d as f64).ceil() as usize).max(1);
    let mut d = big_d;
    while d >= stop {
        let bound = boundedness(&g).global_bound;
        if bound > d {
            family.notes.push(format!("G_{d} is only {bound}-bounded"));
            if config.stop_on_unbounded {
                break;
            }
        }
        let out = near_perfect_rainbow_matching(&g, &config.nibble, rng)?;
        let mut rest = g.without_edges(&out.matching.edges);
        let kept: Vec<Edge> = out
            .matching
            .edges
            .iter()
            .copied()
            .filter(|e| !g.is_dummy(g.edge_colour(*e).expect("matching edge")))
            .collect();
        debug!("d = {d}: nibble size {}, kept {}", out.matching.len(), kept.len());
        if !kept.is_empty() {
            family.matchings.push(RainbowMatching { edges: kept }.normalized());
        }
        if d % config.k == 0 && d > 1 {
            match regularize_with_reserve(&rest, &reserve, d - 1) {
                Ok(r) => {
                    rest = r.h;
                    if !r.matching.is_empty() {
                        let c = next_dummy;
                        next_dummy += 1;
                        family.dummy_colours_used.insert(c);
                        for e in &r.matching {
                            rest.add_edge(e.0, e.1, c)?;
                            reserve.remove_edge(e.0, e.1);
                        }
                    }
                }
                Err(e) => family.notes.push(format!("regularization at d = {d} failed: {e}")),
            }
        }
        g = rest;
        d -= 1;
    }
    Ok(family)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadOutcome {
    pub family: Vec<RainbowMatching>,
    pub moves: usize,
    pub converged: bool,
    pub discarded: usize,
}

/// Local search raising `e(H) - 4 f(H)` for `H` the union of the family,
/// `f_H(v) = max((1 - 100p) t - d_H(v), 0)`; then drops up to `p t` of the
/// smallest matchings below `(1 - 10p) n` edges.
pub fn spread_out(graph: &Graph, family: &[RainbowMatching], p: f64) -> SpreadOutcome {
    let t = family.len();
    let n = graph.scale();
    let mut fam: Vec<Vec<Edge>> = family.iter().map(|m| m.edges.clone()).collect();
    if t == 0 {
        return SpreadOutcome { family: Vec::new(), moves: 0, converged: true, discarded: 0 };
    }
    let thr = (1.0 - 100.0 * p) * t as f64;
    let low = (1.0 - 10.0 * p) * t as f64;
    let f = |deg: usize| (thr - deg as f64).max(0.0);
    let mut in_h: HashSet<Edge> = fam.iter().flatten().copied().collect();
    let mut deg = vec![0usize; graph.n()];
    for e in &in_h {
        deg[e.0] += 1;
        deg[e.1] += 1;
    }
    let cap = 10 * t * n.max(1);
    let mut moves = 0;
    let mut converged = false;
    while moves < cap {
        let mut applied = false;
        let deficient: Vec<Vertex> = (0..graph.n()).filter(|&v| f(deg[v]) > 0.0).collect();
        if deficient.is_empty() {
            converged = true;
            break;
        }
        let in_u: Vec<bool> = deg.iter().map(|&d| (d as f64) <= low).collect();
        'search: for &u in &deficient {
            for i in 0..t {
                if fam[i].iter().any(|e| e.touches(u)) {
                    continue;
                }
                let touching: Vec<Edge> = fam[i].iter().copied().filter(|e| in_u[e.0] || in_u[e.1]).collect();
                let blocked_v: HashSet<Vertex> = touching.iter().flat_map(|e| [e.0, e.1]).collect();
                let blocked_c: HashSet<Colour> = touching.iter().map(|e| graph.edge_colour(*e).expect("host edge")).collect();
                for &(y, c) in graph.adj(u) {
                    let uy = Edge::new(u, y);
                    if in_h.contains(&uy) || blocked_v.contains(&y) || blocked_c.contains(&c) {
                        continue;
                    }
                    let fy: Vec<Edge> =
                        fam[i].iter().copied().filter(|e| e.touches(y) || graph.edge_colour(*e) == Some(c)).collect();
                    // potential change
                    let mut delta: HashMap<Vertex, i64> = HashMap::new();
                    *delta.entry(u).or_default() += 1;
                    *delta.entry(y).or_default() += 1;
                    for e in &fy {
                        *delta.entry(e.0).or_default() -= 1;
                        *delta.entry(e.1).or_default() -= 1;
                    }
                    let df: f64 = delta
                        .iter()
                        .map(|(&v, &dv)| f((deg[v] as i64 + dv) as usize) - f(deg[v]))
                        .sum::<f64>()
                        / 2.0;
                    let de = 1.0 - fy.len() as f64;
                    if de - 4.0 * df > 1e-9 {
                        fam[i].retain(|e| !fy.contains(e));
                        fam[i].push(uy);
                        for e in &fy {
                            in_h.remove(e);
                        }
                        in_h.insert(uy);
                        for (&v, &dv) in &delta {
                            deg[v] = (deg[v] as i64 + dv) as usize;
                        }
                        moves += 1;
                        applied = true;
                        break 'search;
                    }
                }
            }
        }
        if !applied {
            break;
        }
    }
    let limit = (p * t as f64).floor() as usize;
    let small = ((1.0 - 10.0 * p) * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by_key(|&i| (fam[i].len(), i));
    let drop: BTreeSet<usize> = order.into_iter().filter(|&i| fam[i].len() < small).take(limit).collect();
    let family = fam
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, edges)| RainbowMatching { edges }.normalized())
        .collect();
    SpreadOutcome { family, moves, converged, discarded: drop.len() }
}

/// Colour-disjoint reserves used to complete matchings.
#[derive(Clone, Debug)]
pub struct Reserves {
    pub e: Graph,
    pub dx: Graph,
    pub dy: Graph,
}

impl Reserves {
    pub fn colour(&self, e: Edge) -> Option<Colour> {
        self.e.edge_colour(e).or_else(|| self.dx.edge_colour(e)).or_else(|| self.dy.edge_colour(e))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtendFailure {
    /// `N_{D_X}(x) ∩ V(M)` is empty.
    EmptyDx,
    /// `N_{D_Y}(y) ∩ V(M)` is empty.
    EmptyDy,
    /// No usable `E`-edge between the two partner sets.
    NoEdge,
}

impl std::fmt::Display for ExtendFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendFailure::EmptyDx => write!(f, "no D_X neighbour of x inside the matching"),
            ExtendFailure::EmptyDy => write!(f, "no D_Y neighbour of y inside the matching"),
            ExtendFailure::NoEdge => write!(f, "no admissible E edge"),
        }
    }
}

/// A matching with the colour of each edge.
#[derive(Clone, Debug, Default)]
struct Working {
    edges: Vec<(Edge, Colour)>,
    mate: HashMap<Vertex, Vertex>,
}

impl Working {
    fn new(edges: Vec<(Edge, Colour)>) -> Self {
        let mut mate = HashMap::new();
        for (e, _) in &edges {
            mate.insert(e.0, e.1);
            mate.insert(e.1, e.0);
        }
        Working { edges, mate }
    }

    fn colours(&self) -> HashSet<Colour> {
        self.edges.iter().map(|&(_, c)| c).collect()
    }
}

/// One rotation: `(M + x m_u + uv + y m_v) - u m_u - v m_v`. Reserve edges
/// with a colour already on `M` are skipped, as are those in `skip`.
fn extend_working(
    m: &Working,
    res: &Reserves,
    x: Vertex,
    y: Vertex,
    skip: &HashSet<Edge>,
    rng: &mut Rng,
) -> std::result::Result<(Working, [Edge; 3]), ExtendFailure> {
    let used = m.colours();
    let usable = |e: Edge, c: Colour| !used.contains(&c) && !skip.contains(&e);
    let mut a: Vec<(Vertex, Colour)> =
        res.dx.adj(x).iter().copied().filter(|&(w, c)| m.mate.contains_key(&w) && usable(Edge::new(x, w), c)).collect();
    let b: HashMap<Vertex, Colour> =
        res.dy.adj(y).iter().copied().filter(|&(w, c)| m.mate.contains_key(&w) && usable(Edge::new(y, w), c)).collect();
    if a.is_empty() {
        return Err(ExtendFailure::EmptyDx);
    }
    if b.is_empty() {
        return Err(ExtendFailure::EmptyDy);
    }
    a.shuffle(rng);
    for &(m_u, c1) in &a {
        let u = m.mate[&m_u];
        let mut opts: Vec<(Vertex, Colour)> = res.e.adj(u).to_vec();
        opts.shuffle(rng);
        for (v, c2) in opts {
            let Some(&m_v) = m.mate.get(&v) else { continue };
            let Some(&c3) = b.get(&m_v) else { continue };
            if v == m_u || !usable(Edge::new(u, v), c2) || c1 == c2 || c2 == c3 || c1 == c3 {
                continue;
            }
            let removed = [Edge::new(u, m_u), Edge::new(v, m_v)];
            let mut edges: Vec<(Edge, Colour)> = m.edges.iter().copied().filter(|(e, _)| !removed.contains(e)).collect();
            let added = [Edge::new(x, m_u), Edge::new(u, v), Edge::new(y, m_v)];
            edges.extend([(added[0], c1), (added[1], c2), (added[2], c3)]);
            return Ok((Working::new(edges), added));
        }
    }
    Err(ExtendFailure::NoEdge)
}

fn working_from(host: &Graph, res: &Reserves, m: &RainbowMatching) -> Result<Working> {
    let mut edges = Vec::with_capacity(m.len());
    for &e in &m.edges {
        let c = host
            .edge_colour(e)
            .or_else(|| res.colour(e))
            .ok_or_else(|| Error::Precondition(format!("matching edge {e:?} not in host or reserves")))?;
        edges.push((e, c));
    }
    Ok(Working::new(edges))
}

/// Extends `matching` by one edge through uncovered `x ∈ X`, `y ∈ Y`.
pub fn extend_matching_once(
    host: &Graph,
    matching: &RainbowMatching,
    reserves: &Reserves,
    x: Vertex,
    y: Vertex,
    rng: &mut Rng,
) -> Result<RainbowMatching> {
    let w = working_from(host, reserves, matching)?;
    if w.mate.contains_key(&x) || w.mate.contains_key(&y) {
        return Err(Error::Precondition("x and y must be uncovered".into()));
    }
    match extend_working(&w, reserves, x, y, &HashSet::new(), rng) {
        Ok((next, _)) => Ok(RainbowMatching { edges: next.edges.into_iter().map(|(e, _)| e).collect() }.normalized()),
        Err(f) => Err(Error::SearchFailed(f.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub matching: RainbowMatching,
    pub used_e: Vec<Edge>,
    pub used_dx: Vec<Edge>,
    pub used_dy: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionFailure {
    pub partial: RainbowMatching,
    pub round: usize,
    pub reason: String,
}

fn colour_set(g: &Graph) -> BTreeSet<Colour> {
    g.colours()
}

/// Rotates `m0` up to a perfect rainbow matching using one edge of each
/// reserve per step.
pub fn complete_matching(
    host: &Graph,
    m0: &RainbowMatching,
    reserves: &Reserves,
    rng: &mut Rng,
) -> Result<std::result::Result<Completion, CompletionFailure>> {
    complete_avoiding(host, m0, reserves, &HashSet::new(), rng)
}

fn complete_avoiding(
    host: &Graph,
    m0: &RainbowMatching,
    reserves: &Reserves,
    skip: &HashSet<Edge>,
    rng: &mut Rng,
) -> Result<std::result::Result<Completion, CompletionFailure>> {
    let n = host.part_size().ok_or_else(|| Error::Precondition("host is not bipartite".into()))?;
    let mut w = working_from(host, reserves, m0)?;
    let (ce, cx, cy) = (colour_set(&reserves.e), colour_set(&reserves.dx), colour_set(&reserves.dy));
    let cm = w.colours();
    if ce.iter().chain(&cx).chain(&cy).any(|c| cm.contains(c)) || !ce.is_disjoint(&cx) || !ce.is_disjoint(&cy) || !cx.is_disjoint(&cy) {
        return Err(Error::Precondition("reserves must be colour-disjoint from M0 and from each other".into()));
    }
    let (mut ue, mut ux, mut uy) = (HashSet::new(), HashSet::new(), HashSet::new());
    let missing = n - w.edges.len();
    for round in 0..missing {
        let xs: Vec<Vertex> = (0..n).filter(|v| !w.mate.contains_key(v)).collect();
        let ys: Vec<Vertex> = (n..2 * n).filter(|v| !w.mate.contains_key(v)).collect();
        let mut last = ExtendFailure::NoEdge;
        let mut done = None;
        'pairs: for &x in &xs {
            for &y in &ys {
                match extend_working(&w, reserves, x, y, skip, rng) {
                    Ok(r) => {
                        done = Some(r);
                        break 'pairs;
                    }
                    Err(f) => last = f,
                }
            }
        }
        let Some((next, added)) = done else {
            return Ok(Err(CompletionFailure {
                partial: RainbowMatching { edges: w.edges.iter().map(|(e, _)| *e).collect() }.normalized(),
                round,
                reason: last.to_string(),
            }));
        };
        ux.insert(added[0]);
        ue.insert(added[1]);
        uy.insert(added[2]);
        w = next;
    }
    let final_edges: HashSet<Edge> = w.edges.iter().map(|(e, _)| *e).collect();
    let keep = |s: HashSet<Edge>| {
        let mut v: Vec<Edge> = s.into_iter().filter(|e| final_edges.contains(e)).collect();
        v.sort_unstable();
        v
    };
    Ok(Ok(Completion {
        matching: RainbowMatching { edges: final_edges.iter().copied().collect() }.normalized(),
        used_e: keep(ue),
        used_dx: keep(ux),
        used_dy: keep(uy),
    }))
}

/// Randomized retries per matching before a completion counts as failed.
pub const COMPLETION_ATTEMPTS: usize = 3;

/// Splits the colours of `h` into `E`, `D_X`, `D_Y` with the given shares.
pub fn split_reserves(h: &Graph, shares: [f64; 3], rng: &mut Rng) -> Reserves {
    let total: f64 = shares.iter().sum();
    let mut side: HashMap<Colour, usize> = HashMap::new();
    for c in h.colours() {
        let r = rng.gen::<f64>() * total;
        let k = if r < shares[0] {
            0
        } else if r < shares[0] + shares[1] {
            1
        } else {
            2
        };
        side.insert(c, k);
    }
    Reserves {
        e: h.filter_edges(|_, c| side[&c] == 0),
        dx: h.filter_edges(|_, c| side[&c] == 1),
        dy: h.filter_edges(|_, c| side[&c] == 2),
    }
}

/// Near-decomposition of `g`, spread out, then each matching completed to
/// a perfect one through colour-split reserves from `h`; earlier
/// completions' edges are removed from the reserves.
pub fn perfect_matching_decomposition(g: &Graph, h: &Graph, config: &PerfectConfig, rng: &mut Rng) -> Result<MatchingFamily> {
    let near = near_matching_decomposition(g, &config.decomposition, rng)?;
    let spread = spread_out(g, &near.matchings, config.spread_p);
    let mut family = MatchingFamily { matchings: Vec::new(), dummy_colours_used: near.dummy_colours_used, notes: near.notes };
    if !spread.converged {
        family.notes.push("spread-out search hit its cap".into());
    }
    let host = g.union(h)?;
    let reserves = split_reserves(h, config.split, rng);
    let mut taken: HashSet<Edge> = HashSet::new();
    // largest first: they consume the fewest reserve edges
    let mut order: Vec<usize> = (0..spread.family.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(spread.family[i].len()));
    for i in order {
        let m = &spread.family[i];
        let mut outcome = complete_avoiding(&host, m, &reserves, &taken, rng)?;
        for _ in 1..COMPLETION_ATTEMPTS {
            if outcome.is_ok() {
                break;
            }
            outcome = complete_avoiding(&host, m, &reserves, &taken, rng)?;
        }
        match outcome {
            Ok(done) => {
                debug_assert!(verify(&done.matching, &host, StructureKind::PerfectMatching).is_valid());
                taken.extend(done.used_e.iter().chain(&done.used_dx).chain(&done.used_dy).copied());
                family.matchings.push(done.matching);
            }
            Err(fail) => family.notes.push(format!("matching {i}: completion failed at round {}: {}", fail.round, fail.reason)),
        }
    }
    info!("{} of {} matchings completed", family.len(), spread.family.len());
    Ok(family)
}

/// Number of colours with at least `threshold` edges.
pub fn large_colour_count(g: &Graph, threshold: f64) -> usize {
    g.colour_class_sizes().values().filter(|&&s| s as f64 >= threshold - 1e-9).count()
}

/// At least `2 eps n^2` colours present.
pub fn many_colours_gate(colouring: &Graph, eps: f64) -> bool {
    let n = colouring.scale() as f64;
    colouring.colour_count() as f64 >= 2.0 * eps * n * n - 1e-9
}

/// At most `(1 - 20 eps) n` colours with at least `(1 - 20 eps) n` edges.
pub fn few_large_colours(colouring: &Graph, eps: f64) -> bool {
    let t = (1.0 - 20.0 * eps) * colouring.scale() as f64;
    large_colour_count(colouring, t) as f64 <= t + 1e-9
}

/// Disjoint transversals of a properly coloured `K_{n,n}`: colour-sample a
/// reserve `J`, thin the large colours of the rest, pass to a regular
/// subgraph and decompose it into perfect rainbow matchings completed
/// through `J`.
pub fn knn_transversal_pipeline(colouring: &Graph, config: &TransversalConfig, rng: &mut Rng) -> Result<MatchingFamily> {
    let n = colouring.part_size().ok_or_else(|| Error::Precondition("colouring is not bipartite".into()))?;
    if !colouring.is_complete_bipartite() || !colouring.is_proper() {
        return Err(Error::Precondition("need a proper colouring of K_{n,n}".into()));
    }
    if !few_large_colours(colouring, config.eps) {
        return Err(Error::Precondition(format!(
            "more than (1 - 20 eps) n colours of size at least (1 - 20 eps) n (eps = {})",
            config.eps
        )));
    }
    let (j, rest) = sample_colour_subgraph(colouring, config.reserve_share, rng);
    let thin = thin_large_colours(&rest, config.eps, 1, rng);
    let mut notes = Vec::new();
    if let Some(w) = thin.warning {
        notes.push(w);
    }
    let target = ((1.0 - config.eps - 8.0 * config.eps * config.eps) * n as f64).floor() as usize;
    let mut d = target.min(thin.graph.min_degree());
    let regular = loop {
        if let Some(g) = regular_bipartite_subgraph(&thin.graph, d)?.found() {
            break g;
        }
        if d == 0 {
            break thin.graph.empty_like();
        }
        d -= 1;
    };
    let mut family = perfect_matching_decomposition(&regular, &j, &config.perfect, rng)?;
    notes.append(&mut family.notes);
    family.notes = notes;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::onefactorization_knn;
    use crate::graph::GeneralizedLatinSquare;
    use crate::graph::square_to_bipartite;
    use crate::rng::rng_from_seed;

    fn rainbow_knn(n: usize) -> Graph {
        let mut g = Graph::new_bipartite(n);
        for i in 0..n {
            for j in 0..n {
                g.add_edge(i, n + j, i * n + j).unwrap();
            }
        }
        g
    }

    #[test]
    fn empty_and_tiny_decompositions() {
        let mut rng = rng_from_seed(1);
        let empty = Graph::new_bipartite(4);
        assert!(near_matching_decomposition(&empty, &DecompositionConfig::default(), &mut rng).unwrap().is_empty());
        let g = rainbow_knn(2);
        let fam = near_matching_decomposition(&g, &DecompositionConfig::default(), &mut rng).unwrap();
        assert!(!fam.is_empty() && fam.len() <= 2);
        assert!(fam.verify(&g, StructureKind::Matching));
    }

    #[test]
    fn spread_out_fixed_point_and_swap() {
        let g = rainbow_knn(6);
        let m1 = RainbowMatching { edges: (0..6).map(|i| Edge(i, 6 + i)).collect() };
        let m2 = RainbowMatching { edges: (0..5).map(|i| Edge(i, 7 + i)).collect() };
        let out = spread_out(&g, &[m1.clone(), m2.clone()], 0.004);
        assert_eq!(out.moves, 1);
        assert!(out.converged);
        assert_eq!(out.family[1].len(), 6);
        assert!(out.family[1].edges.contains(&Edge(5, 6)));
        // once every vertex has degree 2 nothing moves
        let again = spread_out(&g, &out.family, 0.004);
        assert_eq!((again.moves, again.family.clone()), (0, out.family));
        assert!(spread_out(&g, &[], 0.1).family.is_empty());
    }

    #[test]
    fn extension_on_complete_reserves() {
        let mut rng = rng_from_seed(5);
        // host: rainbow K_{4,4}; matching x1y1, x2y2 on colours of the host
        let n = 4;
        let host = rainbow_knn(n);
        let m = RainbowMatching { edges: vec![Edge(1, 5), Edge(2, 6)] };
        let mut next = 100;
        let mut mk = || {
            let mut g = Graph::new_bipartite(n);
            for i in 0..n {
                for j in 0..n {
                    g.add_edge(i, n + j, next).unwrap();
                    next += 1;
                }
            }
            g
        };
        let res = Reserves { e: mk(), dx: mk(), dy: mk() };
        let out = extend_matching_once(&host, &m, &res, 0, 4, &mut rng);
        // the reserves overlap the matching edges, so colours are taken from
        // the host first; the step itself only needs admissible quadruples
        let out = out.unwrap();
        assert_eq!(out.len(), 3);
        let empty = Reserves { e: Graph::new_bipartite(n), dx: res.dx.clone(), dy: res.dy.clone() };
        assert!(extend_matching_once(&host, &m, &empty, 0, 4, &mut rng).is_err());
    }

    #[test]
    fn completion_of_perfect_is_identity() {
        let mut rng = rng_from_seed(2);
        let host = square_to_bipartite(&GeneralizedLatinSquare::cyclic(3)).unwrap();
        let m = RainbowMatching { edges: vec![Edge(0, 3), Edge(1, 4), Edge(2, 5)] };
        let res = Reserves { e: Graph::new_bipartite(3), dx: Graph::new_bipartite(3), dy: Graph::new_bipartite(3) };
        let done = complete_matching(&host, &m, &res, &mut rng).unwrap().unwrap();
        assert_eq!(done.matching, m.clone().normalized());
        let clash = Reserves { e: host.filter_edges(|e, _| e == Edge(0, 4)), dx: res.dx.clone(), dy: res.dy.clone() };
        assert!(complete_matching(&host, &m, &clash, &mut rng).is_err());
    }

    #[test]
    fn gates() {
        assert!(many_colours_gate(&rainbow_knn(6), 0.4));
        assert!(!many_colours_gate(&onefactorization_knn(6), 0.1));
        let z3 = onefactorization_knn(3);
        let mut rng = rng_from_seed(0);
        assert!(knn_transversal_pipeline(&z3, &TransversalConfig::default(), &mut rng).is_err());
    }
}
