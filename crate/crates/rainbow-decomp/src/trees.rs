//! Spanning rainbow trees of properly coloured complete graphs.
//!
//! Two regimes. With few large colours, Hamiltonian cycles minus one edge
//! are already spanning trees. With many large colours, trees start as
//! rainbow Hamiltonian paths on a random core `S`, pick up a small forest
//! of rare colours, and are then grown one vertex at a time, switching
//! tree edges through a sampled reserve `H` whenever no edge at the new
//! vertex carries a free colour.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{verify, verify_pairwise_disjoint, Colour, Dsu, Edge, Graph, RainbowForest, StructureKind, Vertex};
use crate::hamilton::{few_large_colours_kn, hamiltonian_decomposition, HamiltonConfig};
use crate::pseudorandom::{colour_cover_check, high_min_degree_core, sample_edge_subgraph};
use crate::rng::Rng;

/// Steps per vertex squared allowed to one rotation-extension path search.
pub const PATH_SEARCH_STEPS: usize = 200;

fn vertices_of(edges: &[Edge]) -> BTreeSet<Vertex> {
    edges.iter().flat_map(|e| [e.0, e.1]).collect()
}

fn adjacency(edges: &[Edge]) -> HashMap<Vertex, Vec<Vertex>> {
    let mut adj: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    for e in edges {
        adj.entry(e.0).or_default().push(e.1);
        adj.entry(e.1).or_default().push(e.0);
    }
    adj
}

/// Vertex sequence of the path from `a` to `b` in a forest, if any.
fn forest_path(adj: &HashMap<Vertex, Vec<Vertex>>, a: Vertex, b: Vertex) -> Option<Vec<Vertex>> {
    if a == b {
        return Some(vec![a]);
    }
    let mut parent: HashMap<Vertex, Vertex> = HashMap::new();
    parent.insert(a, a);
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        for &w in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if parent.contains_key(&w) {
                continue;
            }
            parent.insert(w, u);
            if w == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(w);
        }
    }
    None
}

fn path_edges(path: &[Vertex]) -> Vec<Edge> {
    path.windows(2).map(|w| Edge::new(w[0], w[1])).collect()
}

/// Is `edges` a rainbow tree on exactly `vertices` (colours from `colour`)?
fn is_rainbow_tree(edges: &[Edge], vertices: &BTreeSet<Vertex>, colour: impl Fn(Edge) -> Option<Colour>) -> bool {
    if edges.len() + 1 != vertices.len() || vertices_of(edges) != *vertices && !edges.is_empty() {
        return false;
    }
    let index: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut dsu = Dsu::new(vertices.len());
    let mut seen = HashSet::new();
    edges.iter().all(|&e| {
        colour(e).is_some_and(|c| seen.insert(c)) && dsu.union(index[&e.0], index[&e.1])
    })
}

// ---------------------------------------------------------------------------
// Small forests

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForestFamily {
    pub forests: Vec<RainbowForest>,
    /// First forest left with fewer than `k` edges.
    pub blocking: Option<usize>,
    /// Every vertex outside the core is in all forests or has degree at
    /// most 1 in each of them.
    pub cover_condition: bool,
    pub notes: Vec<String>,
}

struct ForestBuilder {
    edges: Vec<Edge>,
    colours: HashSet<Colour>,
}

impl ForestBuilder {
    fn degree(&self, v: Vertex) -> usize {
        self.edges.iter().filter(|e| e.touches(v)).count()
    }

    /// Rainbow, acyclic and (for `limited` endpoints) degree at most 1.
    fn admits(&self, e: Edge, c: Colour, limited: &HashSet<Vertex>) -> bool {
        if self.colours.contains(&c) || self.edges.contains(&e) {
            return false;
        }
        if [e.0, e.1].iter().any(|v| limited.contains(v) && self.degree(*v) > 0) {
            return false;
        }
        forest_path(&adjacency(&self.edges), e.0, e.1).is_none()
    }

    fn push(&mut self, e: Edge, c: Colour) {
        self.edges.push(e);
        self.colours.insert(c);
    }

    fn remove(&mut self, e: Edge, c: Colour) {
        self.edges.retain(|&f| f != e);
        self.colours.remove(&c);
    }
}

/// `m` edge-disjoint rainbow forests with `k` edges each, built greedily in
/// the order of the existence argument: vertices outside the core `S` with
/// large degree get a budget `d_v` and a private edge pool `G1`; the rest
/// `G2` is shared out by colour budgets `d_c ~ |E(c)| / (1 + beta)`, then
/// filled with any admissible colour and repaired by one-step exchanges;
/// finally each forest takes its `G1` edges.
pub fn small_forest_decomposition(
    g: &Graph,
    m: usize,
    k: usize,
    core: &BTreeSet<Vertex>,
    beta: f64,
    rng: &mut Rng,
) -> Result<ForestFamily> {
    let n = g.n();
    if let Some((e, _)) = g.edges().into_iter().find(|(e, _)| !core.contains(&e.0) && !core.contains(&e.1)) {
        return Err(Error::Precondition(format!("core is not a vertex cover: {e:?} misses it")));
    }
    let mut out = ForestFamily { cover_condition: true, ..ForestFamily::default() };
    if k == 0 || m == 0 {
        out.forests = vec![RainbowForest::default(); m];
        return Ok(out);
    }
    let sizes = g.colour_class_sizes();
    if sizes.values().any(|&s| s > m) {
        out.notes.push(format!("host is not globally {m}-bounded"));
    }
    if (g.edge_count() as f64) < (1.0 + beta) * (k * m) as f64 {
        out.notes.push(format!("e(G) = {} below (1 + beta) k m", g.edge_count()));
    }

    // Vertex budgets and the private pools G1.
    let outside: Vec<Vertex> = (0..n).filter(|v| !core.contains(v) && g.degree(*v) > 0).collect();
    let limited: HashSet<Vertex> = outside.iter().copied().collect();
    let budget: BTreeMap<Vertex, usize> =
        outside.iter().map(|&v| (v, g.degree(v).saturating_sub(2 * k) / m)).collect();
    let k_prime = budget.values().sum::<usize>().min(k);
    let mut order = outside.clone();
    order.shuffle(rng);
    let mut chosen: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut left = k_prime;
    for v in order {
        let take = budget[&v].min(left);
        if take > 0 {
            chosen.insert(v, take);
            left -= take;
        }
    }
    let mut pools: BTreeMap<Vertex, Vec<(Edge, Colour)>> = BTreeMap::new();
    let mut in_pool = HashSet::new();
    for (&v, _) in &chosen {
        let mut at: Vec<(Edge, Colour)> = g.adj(v).iter().map(|&(w, c)| (Edge::new(v, w), c)).collect();
        at.shuffle(rng);
        at.truncate(budget[&v] * m + 2 * k);
        in_pool.extend(at.iter().map(|&(e, _)| e));
        pools.insert(v, at);
    }
    let shared = g.filter_edges(|e, _| !in_pool.contains(&e));
    let k_shared = k - k_prime;

    // Colour budgets and colour sets C_i.
    let mut classes: Vec<(Colour, Vec<Edge>)> = shared.colour_classes().into_iter().collect();
    classes.shuffle(rng);
    for (_, es) in classes.iter_mut() {
        es.shuffle(rng);
    }
    let mut d_c: Vec<usize> =
        classes.iter().map(|(_, es)| ((es.len() as f64 / (1.0 + beta)).floor() as usize).min(m)).collect();
    let cap = m * (k_shared + 1);
    let mut total: usize = d_c.iter().sum();
    while total > cap {
        let i = (0..d_c.len()).max_by_key(|&i| (d_c[i], std::cmp::Reverse(i))).expect("non-empty");
        d_c[i] -= 1;
        total -= 1;
    }
    let mut allowed: Vec<HashSet<Colour>> = vec![HashSet::new(); m];
    let mut slot = 0;
    for (i, (c, _)) in classes.iter().enumerate() {
        for _ in 0..d_c[i] {
            allowed[slot % m].insert(*c);
            slot += 1;
        }
    }

    let mut forests: Vec<ForestBuilder> =
        (0..m).map(|_| ForestBuilder { edges: Vec::new(), colours: HashSet::new() }).collect();
    let mut used: HashSet<Edge> = HashSet::new();
    for restricted in [true, false] {
        loop {
            let mut progress = false;
            for (i, f) in forests.iter_mut().enumerate() {
                if f.edges.len() >= k_shared {
                    continue;
                }
                let pick = classes
                    .iter()
                    .filter(|(c, _)| !restricted || allowed[i].contains(c))
                    .flat_map(|(c, es)| es.iter().map(move |&e| (e, *c)))
                    .find(|&(e, c)| !used.contains(&e) && f.admits(e, c, &limited));
                if let Some((e, c)) = pick {
                    f.push(e, c);
                    used.insert(e);
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
    }
    // One-step exchanges: deficient F_i takes e from F_j when F_j can
    // replace e by an unused edge.
    let colour_of = |e: Edge| g.edge_colour(e).expect("edge of g");
    let free_edges: Vec<(Edge, Colour)> = classes.iter().flat_map(|(c, es)| es.iter().map(move |&e| (e, *c))).collect();
    for i in 0..m {
        'grow: while forests[i].edges.len() < k_shared {
            for j in (0..m).filter(|&j| j != i) {
                for e in forests[j].edges.clone() {
                    let c = colour_of(e);
                    if !forests[i].admits(e, c, &limited) {
                        continue;
                    }
                    forests[j].remove(e, c);
                    let repl = free_edges.iter().copied().find(|&(f, fc)| f != e && !used.contains(&f) && forests[j].admits(f, fc, &limited));
                    match repl {
                        Some((f, fc)) => {
                            forests[j].push(f, fc);
                            used.insert(f);
                            forests[i].push(e, c);
                            continue 'grow;
                        }
                        None => forests[j].push(e, c),
                    }
                }
            }
            break;
        }
    }

    // Private pools: every forest gets d'_v edges at each chosen v.
    for f in forests.iter_mut() {
        for (&v, &want) in &chosen {
            let mut got = 0;
            for &(e, c) in &pools[&v] {
                if got == want {
                    break;
                }
                if !used.contains(&e) && f.admits(e, c, &HashSet::new()) {
                    f.push(e, c);
                    used.insert(e);
                    got += 1;
                }
            }
        }
    }

    out.blocking = forests.iter().position(|f| f.edges.len() < k);
    if let Some(i) = out.blocking {
        out.notes.push(format!("forest {i} stalled at {} of {k} edges", forests[i].edges.len()));
    }
    for &v in &outside {
        let in_all = forests.iter().all(|f| f.degree(v) > 0);
        let thin = forests.iter().all(|f| f.degree(v) <= 1);
        if !in_all && !thin {
            out.cover_condition = false;
        }
    }
    out.forests = forests
        .into_iter()
        .map(|f| {
            let mut edges = f.edges;
            edges.sort();
            RainbowForest { edges, spanning_tree: false }
        })
        .collect();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Switching

/// For an edge `yv` of `attach` at `v`, the first edge `xv` of the tree path
/// from `v` to `y`: `T - xv + yv` is again a tree. Returns `(xv, yv)`.
pub fn tree_edge_swap(tree: &[Edge], attach: &Graph, v: Vertex) -> Result<(Edge, Edge)> {
    let span = vertices_of(tree);
    if !span.contains(&v) {
        return Err(Error::Precondition(format!("vertex {v} is not on the tree")));
    }
    let &(y, _) = attach
        .adj(v)
        .iter()
        .find(|(y, _)| span.contains(y))
        .ok_or_else(|| Error::Precondition(format!("vertex {v} is isolated in the attaching graph")))?;
    let path = forest_path(&adjacency(tree), v, y).ok_or_else(|| Error::InvalidGraph("tree is disconnected".into()))?;
    Ok((Edge::new(v, path[1]), Edge::new(v, y)))
}

/// Every tree edge `xv` that some `yv` of `attach` can replace.
pub fn removable_tree_edges(tree: &[Edge], attach: &Graph) -> BTreeSet<Edge> {
    let span = vertices_of(tree);
    let adj = adjacency(tree);
    let mut out = BTreeSet::new();
    for (e, _) in attach.edges() {
        if !span.contains(&e.0) || !span.contains(&e.1) {
            continue;
        }
        for (v, y) in [(e.0, e.1), (e.1, e.0)] {
            if let Some(path) = forest_path(&adj, v, y) {
                out.insert(Edge::new(v, path[1]));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub tree: Vec<Edge>,
    pub added: Vec<Edge>,
    pub removed: Vec<Edge>,
}

fn finish_extension(tree: &[Edge], removed: Vec<Edge>, added: Vec<Edge>) -> Extension {
    let mut edges: Vec<Edge> = tree.iter().copied().filter(|e| !removed.contains(e)).collect();
    edges.extend(added.iter().copied());
    edges.sort();
    Extension { tree: edges, added, removed }
}

/// Adds `v` to the rainbow tree `tree` as a leaf, spending colour `c` (not
/// on the tree). Tree colours and candidate edges come from `working`,
/// switch edges from `reserve`. In order: attach by a colour-`c` edge, or
/// by any colour missing from the tree; else swap some tree edge `j` for a
/// colour-`c` edge and attach by `c(j)`; else also swap a reserve edge of
/// colour `c(j)` in, freeing one more tree colour. At most 3 new edges.
pub fn extend_tree_by_vertex(
    working: &Graph,
    tree: &[Edge],
    v: Vertex,
    c: Colour,
    reserve: &Graph,
    rng: &mut Rng,
) -> Result<Extension> {
    let span = vertices_of(tree);
    if span.contains(&v) {
        return Err(Error::Precondition(format!("vertex {v} is already on the tree")));
    }
    let mut tree_colours: HashMap<Colour, Edge> = HashMap::new();
    for &e in tree {
        let col = working
            .edge_colour(e)
            .ok_or_else(|| Error::Precondition(format!("tree edge {e:?} missing from the working graph")))?;
        tree_colours.insert(col, e);
    }
    if tree_colours.contains_key(&c) {
        return Err(Error::Precondition(format!("colour {c} is already on the tree")));
    }
    let c_edges: Vec<Edge> = working.edges().into_iter().filter(|&(_, col)| col == c).map(|(e, _)| e).collect();
    if c_edges.is_empty() {
        return Err(Error::SearchFailed(format!("colour {c} has no edges in the working graph")));
    }
    let colour = |e: Edge| working.edge_colour(e).or_else(|| reserve.edge_colour(e));

    let mut at_v: Vec<(Vertex, Colour)> = working.adj(v).iter().copied().filter(|(u, _)| span.contains(u)).collect();
    at_v.shuffle(rng);
    if let Some(&(u, _)) = at_v.iter().find(|&&(_, col)| col == c) {
        return Ok(finish_extension(tree, vec![], vec![Edge::new(v, u)]));
    }
    if let Some(&(u, _)) = at_v.iter().find(|(_, col)| !tree_colours.contains_key(col)) {
        return Ok(finish_extension(tree, vec![], vec![Edge::new(v, u)]));
    }
    let mut partner_at_v: HashMap<Colour, Vertex> = HashMap::new();
    for &(u, col) in &at_v {
        partner_at_v.entry(col).or_insert(u);
    }

    // J: tree edges j replaceable by a colour-c edge e_j.
    let adj = adjacency(tree);
    let mut shuffled = c_edges;
    shuffled.shuffle(rng);
    let mut replace: BTreeMap<Edge, Edge> = BTreeMap::new();
    for &e in &shuffled {
        if !span.contains(&e.0) || !span.contains(&e.1) || e.touches(v) {
            continue;
        }
        if let Some(path) = forest_path(&adj, e.0, e.1) {
            for j in path_edges(&path) {
                replace.entry(j).or_insert(e);
            }
        }
    }
    let mut switchable: Vec<(Edge, Edge)> = replace.into_iter().collect();
    switchable.shuffle(rng);

    for &(j, e_j) in &switchable {
        let cj = colour(j).expect("tree edge");
        if let Some(&u) = partner_at_v.get(&cj) {
            return Ok(finish_extension(tree, vec![j], vec![e_j, Edge::new(v, u)]));
        }
    }

    let reserve_classes = reserve.colour_classes();
    for &(j, e_j) in &switchable {
        let cj = colour(j).expect("tree edge");
        let Some(h_j) = reserve_classes.get(&cj) else { continue };
        let t_j: Vec<Edge> = tree.iter().copied().filter(|&e| e != j).chain([e_j]).collect();
        let adj_j = adjacency(&t_j);
        let mut candidates = h_j.clone();
        candidates.shuffle(rng);
        for h in candidates {
            if !span.contains(&h.0) || !span.contains(&h.1) || h.touches(v) || t_j.contains(&h) {
                continue;
            }
            let Some(path) = forest_path(&adj_j, h.0, h.1) else { continue };
            for f in path_edges(&path) {
                let cf = colour(f).expect("tree edge");
                if cf == cj {
                    continue;
                }
                if let Some(&u) = partner_at_v.get(&cf) {
                    let removed = if f == e_j { vec![j] } else { vec![j, f] };
                    let added = if f == e_j { vec![h, Edge::new(v, u)] } else { vec![e_j, h, Edge::new(v, u)] };
                    return Ok(finish_extension(tree, removed, added));
                }
            }
        }
    }
    Err(Error::SearchFailed(format!(
        "no freed colour matches an edge at {v} ({} switchable tree edges)",
        switchable.len()
    )))
}

/// Tree containing `forest` inside `tree ∪ forest`: the forest first, then
/// tree edges in order whenever they join two components.
pub fn merge_forest_into_tree(tree: &[Edge], forest: &[Edge]) -> Result<Vec<Edge>> {
    let span = vertices_of(tree);
    if let Some(e) = forest.iter().find(|e| !span.contains(&e.0) && !span.contains(&e.1)) {
        return Err(Error::Precondition(format!("forest edge {e:?} does not touch the tree")));
    }
    let all = vertices_of(&[tree, forest].concat());
    let index: HashMap<Vertex, usize> = all.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut dsu = Dsu::new(all.len());
    let mut out = Vec::new();
    for &e in forest {
        if !dsu.union(index[&e.0], index[&e.1]) {
            return Err(Error::Precondition("forest contains a cycle".into()));
        }
        out.push(e);
    }
    for &e in tree {
        if !out.contains(&e) && dsu.union(index[&e.0], index[&e.1]) {
            out.push(e);
        }
    }
    if out.len() + 1 != all.len() && !out.is_empty() {
        return Err(Error::Precondition("input tree is disconnected".into()));
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Completion

/// Trees in progress, the core `S` they all contain, per-tree budgets of
/// unused large colours `C_L^i` (one per missing vertex) and the switch
/// reserve `H` on `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeExtensionState {
    pub trees: Vec<RainbowForest>,
    pub core_set: BTreeSet<Vertex>,
    pub large_colour_budget: Vec<BTreeSet<Colour>>,
    pub reserve: Graph,
}

impl TreeExtensionState {
    /// Violations of the per-tree conditions: rainbow tree, `S ⊆ V(T)`,
    /// `|C_L| = n - |T|` and colour-disjoint from `T`, degree at most 1
    /// outside `S`.
    fn tree_violations(&self, host: &Graph, i: usize) -> Vec<String> {
        let n = host.n();
        let t = &self.trees[i].edges;
        let span = vertices_of(t);
        let mut out = Vec::new();
        if !is_rainbow_tree(t, &span, |e| host.edge_colour(e)) {
            out.push(format!("tree {i} is not a rainbow tree of the host"));
        }
        if !self.core_set.is_subset(&span) {
            out.push(format!("tree {i} misses part of the core"));
        }
        let budget = &self.large_colour_budget[i];
        if budget.len() != n - span.len() {
            out.push(format!("tree {i}: {} budget colours for {} missing vertices", budget.len(), n - span.len()));
        }
        if t.iter().any(|&e| host.edge_colour(e).is_some_and(|c| budget.contains(&c))) {
            out.push(format!("tree {i} uses one of its budget colours"));
        }
        if let Some(v) = span.iter().find(|v| !self.core_set.contains(v) && t.iter().filter(|e| e.touches(**v)).count() > 1) {
            out.push(format!("tree {i}: vertex {v} outside the core has degree above 1"));
        }
        out
    }

    /// All violated conditions, including disjointness and the reserve.
    pub fn violations(&self, host: &Graph) -> Vec<String> {
        let mut out = Vec::new();
        if self.large_colour_budget.len() != self.trees.len() {
            out.push("one budget per tree required".to_string());
            return out;
        }
        for i in 0..self.trees.len() {
            out.extend(self.tree_violations(host, i));
        }
        if !verify_pairwise_disjoint(&self.trees).is_valid() {
            out.push("trees share edges".to_string());
        }
        let used: HashSet<Edge> = self.trees.iter().flat_map(|t| t.edges.iter().copied()).collect();
        for (e, c) in self.reserve.edges() {
            if host.edge_colour(e) != Some(c) {
                out.push(format!("reserve edge {e:?} not in the host"));
                break;
            }
            if !self.core_set.contains(&e.0) || !self.core_set.contains(&e.1) {
                out.push(format!("reserve edge {e:?} leaves the core"));
                break;
            }
            if used.contains(&e) {
                out.push(format!("reserve edge {e:?} is on a tree"));
                break;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedTree {
    pub index: usize,
    pub tree: RainbowForest,
    pub vertex: Vertex,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompletionOutcome {
    /// Completed spanning trees, in input order.
    pub trees: Vec<RainbowForest>,
    pub quarantined: Vec<QuarantinedTree>,
    pub extensions: usize,
    /// Bookkeeping checks run (one per extension) and what they found.
    pub invariant_checks: usize,
    pub invariant_violations: Vec<String>,
}

/// Grows every tree to a spanning tree. Pairs (tree, missing vertex) are
/// served from a FIFO queue interleaving the trees; each step assembles the
/// working graph on `V(T) + v` from unused host edges with every endpoint in
/// `S` or equal to `v`, outside `H`, and without the tree's other budget
/// colours, then calls [`extend_tree_by_vertex`] with a random budget
/// colour. A failed extension quarantines the tree.
pub fn complete_trees(host: &Graph, mut state: TreeExtensionState, rng: &mut Rng) -> Result<CompletionOutcome> {
    let n = host.n();
    let problems = state.violations(host);
    if !problems.is_empty() {
        return Err(Error::Precondition(problems.join("; ")));
    }
    let initial: Vec<(usize, BTreeSet<Edge>)> = state
        .trees
        .iter()
        .map(|t| (vertices_of(&t.edges).len(), t.edges.iter().copied().collect()))
        .collect();
    let mut missing: Vec<Vec<Vertex>> = state
        .trees
        .iter()
        .map(|t| {
            let span = vertices_of(&t.edges);
            let mut m: Vec<Vertex> = (0..n).filter(|v| !span.contains(v)).collect();
            m.shuffle(rng);
            m
        })
        .collect();
    let mut queue = VecDeque::new();
    let rounds = missing.iter().map(Vec::len).max().unwrap_or(0);
    for r in 0..rounds {
        for (i, m) in missing.iter_mut().enumerate() {
            if let Some(&v) = m.get(r) {
                queue.push_back((i, v));
            }
        }
    }
    let mut used: HashSet<Edge> = state.trees.iter().flat_map(|t| t.edges.iter().copied()).collect();
    let mut out = CompletionOutcome::default();
    let mut dead = vec![false; state.trees.len()];
    while let Some((i, v)) = queue.pop_front() {
        if dead[i] {
            continue;
        }
        let tree = state.trees[i].edges.clone();
        let mut span = vertices_of(&tree);
        let budget: Vec<Colour> = state.large_colour_budget[i].iter().copied().collect();
        let c = *budget.choose(rng).expect("a missing vertex leaves a budget colour");
        span.insert(v);
        let own: HashSet<Edge> = tree.iter().copied().collect();
        let core = &state.core_set;
        let reserve = &state.reserve;
        let working = host.filter_edges(|e, col| {
            if !span.contains(&e.0) || !span.contains(&e.1) {
                return false;
            }
            if own.contains(&e) {
                return true;
            }
            let ends_ok = [e.0, e.1].iter().all(|w| core.contains(w) || *w == v);
            ends_ok
                && !used.contains(&e)
                && !reserve.has_edge(e.0, e.1)
                && (col == c || !state.large_colour_budget[i].contains(&col))
        });
        let h = reserve.filter_edges(|e, _| !used.contains(&e));
        match extend_tree_by_vertex(&working, &tree, v, c, &h, rng) {
            Ok(ext) => {
                for e in &ext.removed {
                    used.remove(e);
                }
                used.extend(ext.added.iter().copied());
                state.trees[i].edges = ext.tree;
                state.large_colour_budget[i].remove(&c);
                out.extensions += 1;
                out.invariant_checks += 1;
                let mut found = state.tree_violations(host, i);
                let now: BTreeSet<Edge> = state.trees[i].edges.iter().copied().collect();
                let grown = vertices_of(&state.trees[i].edges).len() - initial[i].0;
                let fresh = now.difference(&initial[i].1).count();
                if fresh > 3 * grown {
                    found.push(format!("tree {i}: {fresh} new edges for {grown} new vertices"));
                }
                if !found.is_empty() {
                    log::warn!("tree bookkeeping: {}", found.join("; "));
                }
                out.invariant_violations.extend(found);
            }
            Err(e) => {
                dead[i] = true;
                out.quarantined.push(QuarantinedTree { index: i, tree: state.trees[i].clone(), vertex: v, reason: e.to_string() });
            }
        }
    }
    for (i, t) in state.trees.into_iter().enumerate() {
        if !dead[i] {
            out.trees.push(RainbowForest { edges: t.edges, spanning_tree: true });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Paths

/// Rainbow Hamiltonian path of `g[vertices]` by randomized
/// rotation-extension: extend at the end through an unused colour, else
/// rotate at an on-path neighbour (the rotated-out edge's colour is
/// released), else drop the end vertex.
pub fn rainbow_path_search(g: &Graph, vertices: &[Vertex], max_steps: usize, rng: &mut Rng) -> Option<Vec<Vertex>> {
    let target = vertices.len();
    let &start = vertices.choose(rng)?;
    let mut allowed = vec![false; g.n()];
    for &v in vertices {
        allowed[v] = true;
    }
    let mut pos = vec![usize::MAX; g.n()];
    let mut path = vec![start];
    pos[start] = 0;
    let mut colours: HashSet<Colour> = HashSet::new();
    for _ in 0..max_steps {
        if path.len() == target {
            return Some(path);
        }
        let end = *path.last().expect("non-empty path");
        let ext: Vec<(Vertex, Colour)> = g
            .adj(end)
            .iter()
            .copied()
            .filter(|&(w, c)| allowed[w] && pos[w] == usize::MAX && !colours.contains(&c))
            .collect();
        if let Some(&(w, c)) = ext.choose(rng) {
            pos[w] = path.len();
            path.push(w);
            colours.insert(c);
            continue;
        }
        let len = path.len();
        let rot: Vec<(usize, Colour, Colour)> = g
            .adj(end)
            .iter()
            .filter(|&&(w, _)| allowed[w] && pos[w] != usize::MAX && pos[w] + 2 < len)
            .filter_map(|&(w, c)| {
                let i = pos[w];
                let out = g.colour(path[i], path[i + 1]).expect("path edge");
                (c == out || !colours.contains(&c)).then_some((i, c, out))
            })
            .collect();
        if !rot.is_empty() && rng.gen_bool(0.9) {
            let &(i, c, gone) = rot.choose(rng).expect("non-empty");
            colours.remove(&gone);
            colours.insert(c);
            path[i + 1..].reverse();
            for (p, &w) in path.iter().enumerate().skip(i + 1) {
                pos[w] = p;
            }
        } else if rng.gen_bool(0.5) && len > 1 {
            path.reverse();
            for (p, &w) in path.iter().enumerate() {
                pos[w] = p;
            }
        } else if len > 1 {
            let last = path.pop().expect("non-empty");
            pos[last] = usize::MAX;
            let prev = *path.last().expect("non-empty");
            colours.remove(&g.colour(prev, last).expect("path edge"));
        }
    }
    (path.len() == target).then_some(path)
}

// ---------------------------------------------------------------------------
// Pipeline

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Large-colour threshold `(1 - eps) n / 2`, core size `(1 - eps) n`.
    pub eps: f64,
    /// Edge-sample rate of the switch reserve `H`.
    pub eta: f64,
    /// Colour-set size for the reserve cover diagnostic.
    pub cover_k: usize,
    /// Path searches allowed to fail before the core paths stop.
    pub path_attempts: usize,
    pub hamilton: HamiltonConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { eps: 0.1, eta: 0.15, cover_k: 8, path_attempts: 3, hamilton: HamiltonConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeBranch {
    #[default]
    ManyLarge,
    FewLarge,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeOutcome {
    pub branch: TreeBranch,
    /// Verified, pairwise edge-disjoint spanning rainbow trees.
    pub trees: Vec<RainbowForest>,
    pub quarantined: Vec<QuarantinedTree>,
    pub core_size: usize,
    pub paths_from_cycles: usize,
    pub paths_searched: usize,
    pub forest_edges: usize,
    pub extensions: usize,
    pub invariant_checks: usize,
    pub invariant_violations: Vec<String>,
    pub notes: Vec<String>,
}

fn cycle_minus_edge(cycle: &[Vertex], rng: &mut Rng) -> Vec<Edge> {
    let k = cycle.len();
    let cut = rng.gen_range(0..k);
    (1..k).map(|i| Edge::new(cycle[(cut + i) % k], cycle[(cut + i + 1) % k])).collect()
}

/// Edge-disjoint spanning rainbow trees of a properly coloured `K_n`.
pub fn spanning_tree_decomposition(colouring: &Graph, config: &TreeConfig, rng: &mut Rng) -> Result<TreeOutcome> {
    let n = colouring.n();
    if colouring.is_bipartite() || !colouring.is_proper() || !colouring.is_complete() {
        return Err(Error::Precondition("need a proper colouring of a complete graph".into()));
    }
    let mut out = TreeOutcome::default();
    if n <= 2 {
        out.branch = TreeBranch::FewLarge;
        if n == 2 {
            out.trees.push(RainbowForest { edges: vec![Edge(0, 1)], spanning_tree: true });
        }
        return Ok(out);
    }
    if few_large_colours_kn(colouring, config.eps) {
        out.branch = TreeBranch::FewLarge;
        match hamiltonian_decomposition(colouring, &config.hamilton, rng) {
            Ok(ham) => {
                out.notes.extend(ham.notes);
                for f in &ham.cycles {
                    out.trees.push(RainbowForest { edges: cycle_minus_edge(&f.cycles[0], rng), spanning_tree: true });
                }
            }
            Err(e) => out.notes.push(format!("hamilton pipeline: {e}")),
        }
    } else {
        many_large_colours(colouring, config, rng, &mut out)?;
    }

    let mut kept = Vec::new();
    for t in std::mem::take(&mut out.trees) {
        if verify(&t, colouring, StructureKind::SpanningTree).is_valid() {
            kept.push(t);
        } else {
            out.notes.push("dropped a tree that failed verification".into());
        }
    }
    if !verify_pairwise_disjoint(&kept).is_valid() {
        return Err(Error::InvalidGraph("emitted trees overlap".into()));
    }
    out.trees = kept;
    Ok(out)
}

fn many_large_colours(colouring: &Graph, config: &TreeConfig, rng: &mut Rng, out: &mut TreeOutcome) -> Result<()> {
    let n = colouring.n();
    let threshold = (1.0 - config.eps) * n as f64 / 2.0;
    let large: BTreeSet<Colour> =
        colouring.colour_class_sizes().into_iter().filter(|&(_, s)| s as f64 >= threshold).map(|(c, _)| c).collect();
    let g = colouring.filter_edges(|_, c| large.contains(&c));
    // Smallest core parameter whose edge-count precondition `K_n[C]` meets.
    let full = (n * (n - 1) / 2) as f64;
    let core_eps = 2.0 * (1.0 - g.edge_count() as f64 / full).max(0.0).sqrt();
    let core = high_min_degree_core(&g, core_eps);
    if let Some(w) = &core.warning {
        out.notes.push(format!("core: {w}"));
    }
    let mut pool = core.vertices.clone();
    pool.shuffle(rng);
    pool.truncate(((1.0 - config.eps) * n as f64).ceil() as usize);
    pool.sort();
    let s: BTreeSet<Vertex> = pool.iter().copied().collect();
    out.core_size = s.len();
    if s.len() < 2 {
        out.notes.push("core too small for paths".into());
        return Ok(());
    }
    let inside = g.filter_edges(|e, _| s.contains(&e.0) && s.contains(&e.1));
    let (reserve, g1) = sample_edge_subgraph(&inside, config.eta, rng);
    let cover = colour_cover_check(&reserve.induced(&pool), config.cover_k, config.eps);
    if !cover.holds {
        out.notes.push(format!(
            "reserve cover check failed: worst {} of {} colours covers {} vertices, need {:.1}",
            config.cover_k, reserve.colour_count(), cover.worst_cover, cover.required
        ));
    }

    // Hamiltonian paths on S: cycles of the Hamilton pipeline first.
    let target = ((1.0 - config.eps) * n as f64 / 2.0).floor() as usize;
    let mut paths: Vec<Vec<Edge>> = Vec::new();
    match hamiltonian_decomposition(&g1.induced(&pool), &config.hamilton, rng) {
        Ok(ham) => {
            for f in ham.cycles.iter().take(target) {
                let cyc: Vec<Vertex> = f.cycles[0].iter().map(|&i| pool[i]).collect();
                paths.push(cycle_minus_edge(&cyc, rng));
            }
        }
        Err(e) => out.notes.push(format!("hamilton pipeline on the core: {e}")),
    }
    if paths.is_empty() {
        out.notes.push("hamilton pipeline gave no cycles on the core; searching paths directly".into());
    }
    out.paths_from_cycles = paths.len();
    let mut used: HashSet<Edge> = paths.iter().flatten().copied().collect();
    let steps = PATH_SEARCH_STEPS * pool.len() * pool.len();
    let mut failures = 0;
    while paths.len() < target && failures < config.path_attempts {
        let free = g1.filter_edges(|e, _| !used.contains(&e));
        match rainbow_path_search(&free, &pool, steps, rng) {
            Some(p) => {
                let es = path_edges(&p);
                used.extend(es.iter().copied());
                paths.push(es);
                out.paths_searched += 1;
            }
            None => failures += 1,
        }
    }
    if paths.len() < target {
        out.notes.push(format!("{} of {target} core paths found", paths.len()));
    }
    if paths.is_empty() {
        return Ok(());
    }

    // Small colours: k-edge forests touching S, merged into the paths.
    let k = (n - 1).saturating_sub(large.len());
    let g2 = colouring.filter_edges(|e, c| !large.contains(&c) && (s.contains(&e.0) || s.contains(&e.1)));
    let family = small_forest_decomposition(&g2, paths.len(), k, &s, config.eps, rng)?;
    out.notes.extend(family.notes.iter().map(|m| format!("forests: {m}")));
    if !family.cover_condition {
        out.notes.push("forests break the cover condition".into());
    }
    out.forest_edges = family.forests.iter().map(|f| f.edges.len()).sum();
    let mut trees = Vec::new();
    for (p, f) in paths.iter().zip(&family.forests) {
        trees.push(merge_forest_into_tree(p, &f.edges)?);
    }
    let mut core_set = s.clone();
    for v in 0..n {
        if !s.contains(&v) && trees.iter().all(|t| t.iter().any(|e| e.touches(v))) {
            core_set.insert(v);
        }
    }
    let mut budgets = Vec::new();
    for t in &trees {
        let on: BTreeSet<Colour> = t.iter().map(|&e| colouring.edge_colour(e).expect("host edge")).collect();
        let mut free: Vec<Colour> = large.difference(&on).copied().collect();
        free.shuffle(rng);
        free.truncate(n - vertices_of(t).len());
        budgets.push(free.into_iter().collect::<BTreeSet<_>>());
    }
    let state = TreeExtensionState {
        trees: trees.into_iter().map(|edges| RainbowForest { edges, spanning_tree: false }).collect(),
        core_set,
        large_colour_budget: budgets,
        reserve,
    };
    let done = complete_trees(colouring, state, rng)?;
    out.extensions = done.extensions;
    out.invariant_checks = done.invariant_checks;
    out.invariant_violations = done.invariant_violations;
    out.quarantined = done.quarantined;
    out.trees = done.trees;
    Ok(())
}
