//! Edge-coloured graphs, generalized Latin squares, candidate structures and
//! the verifiers every pipeline runs before emitting anything.
//!
//! Vertices are dense ids `0..n`. A bipartite graph with parts of size `h`
//! uses `X = 0..h` and `Y = h..2h`; file formats use per-side ids instead.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type Colour = usize;

/// Unordered vertex pair, stored with the smaller id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub Vertex, pub Vertex);

impl Edge {
    pub fn new(a: Vertex, b: Vertex) -> Edge {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn other(self, v: Vertex) -> Vertex {
        if self.0 == v {
            self.1
        } else {
            debug_assert_eq!(self.1, v);
            self.0
        }
    }

    pub fn touches(self, v: Vertex) -> bool {
        self.0 == v || self.1 == v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    part_size: Option<usize>,
    dummy_base: Option<Colour>,
    edges: Vec<(Vertex, Vertex, Colour)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    half: Option<usize>,
    dummy_base: Option<Colour>,
    adj: Vec<Vec<(Vertex, Colour)>>,
    colour: HashMap<Edge, Colour>,
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            part_size: g.half,
            dummy_base: g.dummy_base,
            edges: g.edges().into_iter().map(|(e, c)| (e.0, e.1, c)).collect(),
        }
    }
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Graph> {
        let mut g = match r.part_size {
            Some(h) => {
                if 2 * h != r.n {
                    return Err(Error::InvalidGraph("n must be twice the part size".into()));
                }
                Graph::new_bipartite(h)
            }
            None => Graph::new(r.n),
        };
        g.dummy_base = r.dummy_base;
        for (u, v, c) in r.edges {
            g.add_edge(u, v, c)?;
        }
        Ok(g)
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half == other.half && self.colour == other.colour
    }
}

impl Graph {
    pub fn new(n: usize) -> Graph {
        Graph { n, half: None, dummy_base: None, adj: vec![Vec::new(); n], colour: HashMap::new() }
    }

    pub fn new_bipartite(part_size: usize) -> Graph {
        let mut g = Graph::new(2 * part_size);
        g.half = Some(part_size);
        g
    }

    /// Same vertex set and bipartition, no edges.
    pub fn empty_like(&self) -> Graph {
        let mut g = Graph::new(self.n);
        g.half = self.half;
        g.dummy_base = self.dummy_base;
        g
    }

    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex, Colour)]) -> Result<Graph> {
        let mut g = Graph::new(n);
        for &(u, v, c) in edges {
            g.add_edge(u, v, c)?;
        }
        Ok(g)
    }

    /// `edges` use global ids (`Y` starts at `part_size`).
    pub fn bipartite_from_edges(part_size: usize, edges: &[(Vertex, Vertex, Colour)]) -> Result<Graph> {
        let mut g = Graph::new_bipartite(part_size);
        for &(u, v, c) in edges {
            g.add_edge(u, v, c)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_bipartite(&self) -> bool {
        self.half.is_some()
    }

    /// Part size for bipartite graphs.
    pub fn part_size(&self) -> Option<usize> {
        self.half
    }

    /// The `n` of the density definitions: part size if bipartite, else `|V|`.
    pub fn scale(&self) -> usize {
        self.half.unwrap_or(self.n)
    }

    pub fn side(&self, v: Vertex) -> Option<Side> {
        self.half.map(|h| if v < h { Side::X } else { Side::Y })
    }

    pub fn x_vertices(&self) -> std::ops::Range<Vertex> {
        0..self.half.unwrap_or(self.n)
    }

    pub fn y_vertices(&self) -> std::ops::Range<Vertex> {
        match self.half {
            Some(h) => h..2 * h,
            None => 0..0,
        }
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex, c: Colour) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range for n={}", self.n)));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("loop at {u}")));
        }
        if let Some(h) = self.half {
            if (u < h) == (v < h) {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) does not cross the bipartition")));
            }
        }
        let e = Edge::new(u, v);
        if self.colour.contains_key(&e) {
            return Err(Error::InvalidGraph(format!("parallel edge ({u},{v})")));
        }
        self.colour.insert(e, c);
        self.adj[u].push((v, c));
        self.adj[v].push((u, c));
        Ok(())
    }

    pub fn remove_edge(&mut self, u: Vertex, v: Vertex) -> Option<Colour> {
        let c = self.colour.remove(&Edge::new(u, v))?;
        if let Some(i) = self.adj[u].iter().position(|&(w, _)| w == v) {
            self.adj[u].remove(i);
        }
        if let Some(i) = self.adj[v].iter().position(|&(w, _)| w == u) {
            self.adj[v].remove(i);
        }
        Some(c)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u != v && self.colour.contains_key(&Edge::new(u, v))
    }

    pub fn colour(&self, u: Vertex, v: Vertex) -> Option<Colour> {
        self.colour.get(&Edge::new(u, v)).copied()
    }

    pub fn edge_colour(&self, e: Edge) -> Option<Colour> {
        self.colour.get(&e).copied()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    /// Neighbours with the colour of the connecting edge, in insertion order.
    pub fn adj(&self, v: Vertex) -> &[(Vertex, Colour)] {
        &self.adj[v]
    }

    pub fn neighbours(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v].iter().map(|&(w, _)| w)
    }

    pub fn edge_count(&self) -> usize {
        self.colour.len()
    }

    /// All edges with colours, sorted.
    pub fn edges(&self) -> Vec<(Edge, Colour)> {
        let mut out: Vec<(Edge, Colour)> = self.colour.iter().map(|(&e, &c)| (e, c)).collect();
        out.sort_unstable();
        out
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn colours(&self) -> BTreeSet<Colour> {
        self.colour.values().copied().collect()
    }

    pub fn colour_count(&self) -> usize {
        self.colours().len()
    }

    pub fn max_colour(&self) -> Option<Colour> {
        self.colour.values().copied().max()
    }

    pub fn colour_classes(&self) -> BTreeMap<Colour, Vec<Edge>> {
        let mut out: BTreeMap<Colour, Vec<Edge>> = BTreeMap::new();
        for (e, c) in self.edges() {
            out.entry(c).or_default().push(e);
        }
        out
    }

    pub fn colour_class_sizes(&self) -> BTreeMap<Colour, usize> {
        let mut out = BTreeMap::new();
        for &c in self.colour.values() {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    /// No two edges sharing a vertex have the same colour.
    pub fn is_proper(&self) -> bool {
        (0..self.n).all(|v| {
            let mut seen = BTreeSet::new();
            self.adj[v].iter().all(|&(_, c)| seen.insert(c))
        })
    }

    pub fn dummy_base(&self) -> Option<Colour> {
        self.dummy_base
    }

    /// Colours `>= base` are treated as dummies from now on.
    pub fn set_dummy_base(&mut self, base: Colour) {
        self.dummy_base = Some(base);
    }

    pub fn is_dummy(&self, c: Colour) -> bool {
        self.dummy_base.is_some_and(|b| c >= b)
    }

    /// First colour id above every colour in use and above the dummy base.
    pub fn fresh_colour(&self) -> Colour {
        let top = self.max_colour().map_or(0, |c| c + 1);
        top.max(self.dummy_base.unwrap_or(0))
    }

    pub fn is_complete_bipartite(&self) -> bool {
        self.half.is_some_and(|h| self.edge_count() == h * h)
    }

    pub fn is_complete(&self) -> bool {
        self.half.is_none() && self.edge_count() == self.n * self.n.saturating_sub(1) / 2
    }

    /// Spanning subgraph keeping only edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(Edge, Colour) -> bool) -> Graph {
        let mut g = self.empty_like();
        for (e, c) in self.edges() {
            if keep(e, c) {
                g.add_edge(e.0, e.1, c).expect("subgraph of a valid graph");
            }
        }
        g
    }

    /// Spanning subgraph with the given edges (which must be present).
    pub fn with_edges(&self, edges: &[Edge]) -> Result<Graph> {
        let mut g = self.empty_like();
        for &e in edges {
            let c = self
                .edge_colour(e)
                .ok_or_else(|| Error::InvalidGraph(format!("edge {e:?} not in host")))?;
            g.add_edge(e.0, e.1, c)?;
        }
        Ok(g)
    }

    pub fn without_edges(&self, edges: &[Edge]) -> Graph {
        let drop: BTreeSet<Edge> = edges.iter().copied().collect();
        self.filter_edges(|e, _| !drop.contains(&e))
    }

    pub fn without_colours(&self, colours: &BTreeSet<Colour>) -> Graph {
        self.filter_edges(|_, c| !colours.contains(&c))
    }

    /// Edge-disjoint union on the same vertex set.
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n || self.half != other.half {
            return Err(Error::InvalidGraph("union of graphs on different vertex sets".into()));
        }
        let mut g = self.clone();
        for (e, c) in other.edges() {
            g.add_edge(e.0, e.1, c)?;
        }
        Ok(g)
    }

    /// Induced subgraph on `vertices`, relabelled `0..k` in the given order.
    pub fn induced(&self, vertices: &[Vertex]) -> Graph {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Graph::new(vertices.len());
        g.dummy_base = self.dummy_base;
        for (i, &v) in vertices.iter().enumerate() {
            for &(w, c) in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    g.add_edge(i, j, c).expect("induced subgraph");
                }
            }
        }
        g
    }

    /// Bipartite subgraph `G[A, B]` with `A` as `X` and `B` as `Y`, relabelled.
    pub fn bipartite_between(&self, a: &[Vertex], b: &[Vertex]) -> Result<Graph> {
        if a.len() != b.len() {
            return Err(Error::InvalidGraph("G[A,B] needs |A| = |B|".into()));
        }
        let h = a.len();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in a.iter().enumerate() {
            index[v] = i;
        }
        for (j, &v) in b.iter().enumerate() {
            if index[v] != usize::MAX {
                return Err(Error::InvalidGraph("A and B must be disjoint".into()));
            }
            index[v] = h + j;
        }
        let mut g = Graph::new_bipartite(h);
        g.dummy_base = self.dummy_base;
        for &v in a {
            for &(w, c) in &self.adj[v] {
                let (i, j) = (index[v], index[w]);
                if j != usize::MAX && j >= h {
                    g.add_edge(i, j, c)?;
                }
            }
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    /// Text format: `n <count> [bipartite]` then `u v c` lines. For bipartite
    /// graphs `<count>` is the part size and `u`, `v` are per-side ids.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        match self.half {
            Some(h) => {
                writeln!(w, "n {h} bipartite")?;
                for (e, c) in self.edges() {
                    writeln!(w, "{} {} {}", e.0, e.1 - h, c)?;
                }
            }
            None => {
                writeln!(w, "n {}", self.n)?;
                for (e, c) in self.edges() {
                    writeln!(w, "{} {} {}", e.0, e.1, c)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Graph> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
            other => Some((i + 1, other)),
        });
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let header = header?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() < 2 || parts[0] != "n" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let count: usize = parts[1].parse().map_err(|_| Error::Parse(format!("bad count `{}`", parts[1])))?;
        let bip = match parts.get(2) {
            None => false,
            Some(&"bipartite") => true,
            Some(other) => return Err(Error::Parse(format!("unknown header flag `{other}`"))),
        };
        let mut g = if bip { Graph::new_bipartite(count) } else { Graph::new(count) };
        for (lineno, line) in lines {
            let line = line?;
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("line {lineno}: `{line}`")))?;
            if nums.len() != 3 {
                return Err(Error::Parse(format!("line {lineno}: expected `u v c`")));
            }
            let (u, v) = if bip {
                if nums[0] >= count || nums[1] >= count {
                    return Err(Error::Parse(format!("line {lineno}: vertex out of range")));
                }
                (nums[0], nums[1] + count)
            } else {
                (nums[0], nums[1])
            };
            g.add_edge(u, v, nums[2])?;
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedLatinSquare {
    pub n: usize,
    pub cell: Vec<Vec<usize>>,
}

impl GeneralizedLatinSquare {
    pub fn new(cell: Vec<Vec<usize>>) -> Result<Self> {
        let sq = GeneralizedLatinSquare { n: cell.len(), cell };
        sq.validate()?;
        Ok(sq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell.len() != self.n || self.cell.iter().any(|r| r.len() != self.n) {
            return Err(Error::InvalidSquare("array is not n by n".into()));
        }
        for i in 0..self.n {
            let mut row = BTreeSet::new();
            let mut col = BTreeSet::new();
            for j in 0..self.n {
                if !row.insert(self.cell[i][j]) {
                    return Err(Error::InvalidSquare(format!("symbol {} repeated in row {i}", self.cell[i][j])));
                }
                if !col.insert(self.cell[j][i]) {
                    return Err(Error::InvalidSquare(format!("symbol {} repeated in column {i}", self.cell[j][i])));
                }
            }
        }
        Ok(())
    }

    /// Addition table of Z_n.
    pub fn cyclic(n: usize) -> Self {
        let cell = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        GeneralizedLatinSquare { n, cell }
    }

    pub fn symbol_count(&self) -> usize {
        self.cell.iter().flatten().collect::<BTreeSet<_>>().len()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.cell[i][j] == self.cell[j][i]))
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let mut cell = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad symbol `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            cell.push(row);
        }
        GeneralizedLatinSquare::new(cell)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in &self.cell {
            wtr.write_record(row.iter().map(|s| s.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `K_{n,n}` with `colour(x_i y_j) = s_ij`.
pub fn square_to_bipartite(square: &GeneralizedLatinSquare) -> Result<Graph> {
    square.validate()?;
    let n = square.n;
    let mut g = Graph::new_bipartite(n);
    for i in 0..n {
        for j in 0..n {
            g.add_edge(i, n + j, square.cell[i][j])?;
        }
    }
    Ok(g)
}

pub fn bipartite_to_square(graph: &Graph) -> Result<GeneralizedLatinSquare> {
    let n = graph
        .part_size()
        .ok_or_else(|| Error::InvalidGraph("graph is not bipartite".into()))?;
    if !graph.is_complete_bipartite() {
        return Err(Error::InvalidGraph("graph is not complete bipartite".into()));
    }
    if !graph.is_proper() {
        return Err(Error::InvalidGraph("colouring is not proper".into()));
    }
    let cell = (0..n)
        .map(|i| (0..n).map(|j| graph.colour(i, n + j).expect("complete")).collect())
        .collect();
    GeneralizedLatinSquare::new(cell)
}

/// `K_n` with `colour(ij) = s_ij`; the diagonal is ignored.
pub fn symmetric_square_to_complete(square: &GeneralizedLatinSquare) -> Result<Graph> {
    square.validate()?;
    if !square.is_symmetric() {
        return Err(Error::InvalidSquare("square is not symmetric".into()));
    }
    let n = square.n;
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            g.add_edge(i, j, square.cell[i][j])?;
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RainbowMatching {
    pub edges: Vec<Edge>,
}

impl RainbowMatching {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> BTreeSet<Vertex> {
        self.edges.iter().flat_map(|e| [e.0, e.1]).collect()
    }

    /// Canonical order, so equal matchings serialize identically.
    pub fn normalized(mut self) -> Self {
        self.edges.sort_unstable();
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleFactor {
    pub cycles: Vec<Vec<Vertex>>,
}

impl CycleFactor {
    pub fn min_cycle_len(&self) -> usize {
        self.cycles.iter().map(|c| c.len()).min().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RainbowForest {
    pub edges: Vec<Edge>,
    pub spanning_tree: bool,
}

/// Anything that can be checked against a host: it exposes its edge list,
/// and cycle factors also their cycle sequences.
pub trait Structure {
    fn edge_list(&self) -> Vec<Edge>;
    fn cycle_list(&self) -> Option<&[Vec<Vertex>]> {
        None
    }
}

impl Structure for RainbowMatching {
    fn edge_list(&self) -> Vec<Edge> {
        self.edges.clone()
    }
}

impl Structure for RainbowForest {
    fn edge_list(&self) -> Vec<Edge> {
        self.edges.clone()
    }
}

impl Structure for CycleFactor {
    fn edge_list(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for c in &self.cycles {
            let k = c.len();
            if k == 1 {
                out.push(Edge(c[0], c[0]));
            }
            if k == 2 {
                out.push(Edge::new(c[0], c[1]));
                out.push(Edge::new(c[0], c[1]));
            }
            if k >= 3 {
                for i in 0..k {
                    out.push(Edge::new(c[i], c[(i + 1) % k]));
                }
            }
        }
        out
    }
    fn cycle_list(&self) -> Option<&[Vec<Vertex>]> {
        Some(&self.cycles)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    Matching,
    PerfectMatching,
    TwoFactor { min_cycle: usize },
    HamiltonianCycle,
    Forest,
    SpanningTree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ForeignEdge { edge: Edge },
    RepeatedEdge { edge: Edge },
    RepeatedColour { colour: Colour, first: Edge, second: Edge },
    DummyColour { edge: Edge, colour: Colour },
    SharedVertex { vertex: Vertex },
    NotSpanning { uncovered: usize },
    ShortCycle { length: usize },
    Disconnected { components: usize },
    Cycle { edge: Edge },
    SharedEdge { edge: Edge, first: usize, second: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) struct Dsu(Vec<usize>);

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    pub(crate) fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut v = v;
        while self.0[v] != r {
            let next = self.0[v];
            self.0[v] = r;
            v = next;
        }
        r
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Lists every violated invariant of `candidate` as a `kind` in `host`.
pub fn verify<S: Structure + ?Sized>(candidate: &S, host: &Graph, kind: StructureKind) -> VerificationReport {
    let mut violations = Vec::new();
    let n = host.n();
    let edges = candidate.edge_list();
    let mut seen_edges = BTreeSet::new();
    let mut colour_owner: BTreeMap<Colour, Edge> = BTreeMap::new();
    let mut deg = vec![0usize; n];
    let mut good = Vec::new();
    for &e in &edges {
        let c = if e.0 < n && e.1 < n { host.edge_colour(e) } else { None };
        let Some(c) = c else {
            violations.push(Violation::ForeignEdge { edge: e });
            continue;
        };
        if !seen_edges.insert(e) {
            violations.push(Violation::RepeatedEdge { edge: e });
            continue;
        }
        if host.is_dummy(c) {
            violations.push(Violation::DummyColour { edge: e, colour: c });
        }
        if let Some(&first) = colour_owner.get(&c) {
            violations.push(Violation::RepeatedColour { colour: c, first, second: e });
        } else {
            colour_owner.insert(c, e);
        }
        deg[e.0] += 1;
        deg[e.1] += 1;
        good.push(e);
    }

    let exact_degree = |want: usize, violations: &mut Vec<Violation>, deg: &[usize]| {
        let mut uncovered = 0;
        for (v, &d) in deg.iter().enumerate() {
            if d > want {
                violations.push(Violation::SharedVertex { vertex: v });
            } else if d < want {
                uncovered += 1;
            }
        }
        if uncovered > 0 {
            violations.push(Violation::NotSpanning { uncovered });
        }
    };

    match kind {
        StructureKind::Matching => {
            for (v, &d) in deg.iter().enumerate() {
                if d > 1 {
                    violations.push(Violation::SharedVertex { vertex: v });
                }
            }
        }
        StructureKind::PerfectMatching => exact_degree(1, &mut violations, &deg),
        StructureKind::TwoFactor { .. } | StructureKind::HamiltonianCycle => {
            let min_len = match kind {
                StructureKind::TwoFactor { min_cycle } => min_cycle.max(3),
                _ => 3,
            };
            if let Some(cycles) = candidate.cycle_list() {
                let mut count = vec![0usize; n];
                for c in cycles {
                    for &v in c {
                        if v < n {
                            count[v] += 1;
                        }
                    }
                }
                for (v, &k) in count.iter().enumerate() {
                    if k > 1 {
                        violations.push(Violation::SharedVertex { vertex: v });
                    }
                }
            }
            exact_degree(2, &mut violations, &deg);
            let mut dsu = Dsu::new(n);
            for e in &good {
                dsu.union(e.0, e.1);
            }
            let mut size: BTreeMap<usize, usize> = BTreeMap::new();
            for v in 0..n {
                if deg[v] > 0 {
                    *size.entry(dsu.find(v)).or_insert(0) += 1;
                }
            }
            for &len in size.values() {
                if len < min_len {
                    violations.push(Violation::ShortCycle { length: len });
                }
            }
            if kind == StructureKind::HamiltonianCycle && size.len() > 1 {
                violations.push(Violation::Disconnected { components: size.len() });
            }
        }
        StructureKind::Forest | StructureKind::SpanningTree => {
            let mut dsu = Dsu::new(n);
            for &e in &good {
                if !dsu.union(e.0, e.1) {
                    violations.push(Violation::Cycle { edge: e });
                }
            }
            if kind == StructureKind::SpanningTree {
                let uncovered = deg.iter().filter(|&&d| d == 0).count();
                if uncovered > 0 && n > 1 {
                    violations.push(Violation::NotSpanning { uncovered });
                }
                let roots: BTreeSet<usize> = (0..n).map(|v| dsu.find(v)).collect();
                if roots.len() > 1 {
                    violations.push(Violation::Disconnected { components: roots.len() });
                }
            }
        }
    }
    VerificationReport { violations }
}

/// Reports every edge that appears in two members of the family.
pub fn verify_pairwise_disjoint<S: Structure>(family: &[S]) -> VerificationReport {
    let mut owner: BTreeMap<Edge, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    for (i, s) in family.iter().enumerate() {
        let mut own = BTreeSet::new();
        for e in s.edge_list() {
            if !own.insert(e) {
                continue;
            }
            match owner.get(&e) {
                Some(&j) => violations.push(Violation::SharedEdge { edge: e, first: j, second: i }),
                None => {
                    owner.insert(e, i);
                }
            }
        }
    }
    VerificationReport { violations }
}

/// Edges of `edges` whose host colour is not a dummy colour.
pub fn strip_dummy(host: &Graph, edges: &[Edge]) -> Vec<Edge> {
    edges
        .iter()
        .copied()
        .filter(|&e| host.edge_colour(e).is_some_and(|c| !host.is_dummy(c)))
        .collect()
}

/// Cycle through the vertex set of a 2-regular edge set, component by component.
pub fn cycles_from_edges(n: usize, edges: &[Edge]) -> Option<Vec<Vec<Vertex>>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.0].push(e.1);
        adj[e.1].push(e.0);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] || adj[s].is_empty() {
            continue;
        }
        if adj[s].len() != 2 {
            return None;
        }
        let mut cyc = vec![s];
        seen[s] = true;
        let (mut prev, mut cur) = (s, adj[s][0]);
        while cur != s {
            if seen[cur] || adj[cur].len() != 2 {
                return None;
            }
            seen[cur] = true;
            cyc.push(cur);
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        out.push(cyc);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> GeneralizedLatinSquare {
        GeneralizedLatinSquare::cyclic(n)
    }

    #[test]
    fn one_by_one_square() {
        let g = square_to_bipartite(&GeneralizedLatinSquare::new(vec![vec![0]]).unwrap()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.colour(0, 1), Some(0));
    }

    #[test]
    fn z3_to_k33() {
        let g = square_to_bipartite(&z(3)).unwrap();
        assert_eq!(g.edge_count(), 9);
        let classes = g.colour_classes();
        assert_eq!(classes.len(), 3);
        for edges in classes.values() {
            let m = RainbowMatching { edges: edges.clone() };
            // each class is a perfect matching (colours repeat, so check shape only)
            let mut deg = [0; 6];
            for e in &m.edges {
                deg[e.0] += 1;
                deg[e.1] += 1;
            }
            assert!(deg.iter().all(|&d| d == 1));
        }
        assert!(g.is_proper());
    }

    #[test]
    fn two_by_two() {
        let sq = GeneralizedLatinSquare::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let g = square_to_bipartite(&sq).unwrap();
        let sizes = g.colour_class_sizes();
        assert_eq!(sizes.values().copied().collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn round_trip_and_errors() {
        let g = square_to_bipartite(&z(3)).unwrap();
        assert_eq!(bipartite_to_square(&g).unwrap(), z(3));
        let mut k11 = Graph::new_bipartite(1);
        k11.add_edge(0, 1, 7).unwrap();
        assert_eq!(bipartite_to_square(&k11).unwrap().cell, vec![vec![7]]);
        let mut g2 = square_to_bipartite(&z(2)).unwrap();
        g2.remove_edge(0, 2);
        assert!(bipartite_to_square(&g2).is_err());
        assert!(GeneralizedLatinSquare::new(vec![vec![0, 0], vec![1, 2]]).is_err());
    }

    #[test]
    fn symmetric_conversion() {
        let g = symmetric_square_to_complete(&z(3)).unwrap();
        assert_eq!(g.colour(0, 1), Some(1));
        assert_eq!(g.colour(0, 2), Some(2));
        assert_eq!(g.colour(1, 2), Some(0));
        let k2 = symmetric_square_to_complete(&z(2)).unwrap();
        assert_eq!(k2.edge_count(), 1);
        let asym = GeneralizedLatinSquare::new(vec![vec![0, 1], vec![2, 0]]).unwrap();
        assert!(symmetric_square_to_complete(&asym).is_err());
    }

    #[test]
    fn verify_basics() {
        let g = square_to_bipartite(&z(3)).unwrap();
        assert!(verify(&RainbowMatching::default(), &g, StructureKind::Matching).is_valid());
        let diag = RainbowMatching { edges: vec![Edge(0, 3), Edge(1, 4), Edge(2, 5)] };
        assert!(verify(&diag, &g, StructureKind::PerfectMatching).is_valid());
        // (0,0) and (1,2) both carry symbol 0
        let bad = RainbowMatching { edges: vec![Edge(0, 3), Edge(1, 5)] };
        let rep = verify(&bad, &g, StructureKind::Matching);
        assert!(matches!(rep.violations[0], Violation::RepeatedColour { colour: 0, .. }));
        let foreign = RainbowMatching { edges: vec![Edge(0, 1)] };
        assert!(matches!(verify(&foreign, &g, StructureKind::Matching).violations[0], Violation::ForeignEdge { .. }));
    }

    #[test]
    fn verify_cycles_and_trees() {
        let mut g = Graph::new(4);
        for (i, (u, v)) in [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)].into_iter().enumerate() {
            g.add_edge(u, v, i).unwrap();
        }
        let ham = CycleFactor { cycles: vec![vec![0, 1, 2, 3]] };
        assert!(verify(&ham, &g, StructureKind::HamiltonianCycle).is_valid());
        let tri = CycleFactor { cycles: vec![vec![0, 1, 2]] };
        let rep = verify(&tri, &g, StructureKind::TwoFactor { min_cycle: 3 });
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::NotSpanning { uncovered: 1 })));
        let path = RainbowForest { edges: vec![Edge(0, 1), Edge(1, 2), Edge(2, 3)], spanning_tree: true };
        assert!(verify(&path, &g, StructureKind::SpanningTree).is_valid());
        let cyc = RainbowForest { edges: vec![Edge(0, 1), Edge(1, 2), Edge(0, 2)], spanning_tree: false };
        assert!(matches!(verify(&cyc, &g, StructureKind::Forest).violations[0], Violation::Cycle { .. }));
        let part = RainbowForest { edges: vec![Edge(0, 1), Edge(2, 3)], spanning_tree: true };
        assert!(!verify(&part, &g, StructureKind::SpanningTree).is_valid());
    }

    #[test]
    fn pairwise_disjointness() {
        let g = square_to_bipartite(&z(3)).unwrap();
        let fam: Vec<RainbowMatching> =
            g.colour_classes().values().map(|es| RainbowMatching { edges: es.clone() }).collect();
        assert!(verify_pairwise_disjoint(&fam).is_valid());
        let dup = vec![fam[0].clone(), fam[0].clone()];
        assert!(!verify_pairwise_disjoint(&dup).is_valid());
    }

    #[test]
    fn rejects_multigraphs_and_bad_edges() {
        let mut g = Graph::new_bipartite(2);
        g.add_edge(0, 2, 0).unwrap();
        assert!(g.add_edge(2, 0, 1).is_err());
        assert!(g.add_edge(0, 1, 1).is_err());
        assert!(g.add_edge(0, 0, 1).is_err());
        assert!(g.add_edge(0, 9, 1).is_err());
    }

    #[test]
    fn text_and_json_round_trip() {
        let g = square_to_bipartite(&z(4)).unwrap();
        let mut buf = Vec::new();
        g.write_text(&mut buf).unwrap();
        let back = Graph::read_text(&buf[..]).unwrap();
        assert_eq!(back, g);
        let json = g.to_json();
        let back: Graph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let mut buf = Vec::new();
        z(4).write_csv(&mut buf).unwrap();
        assert_eq!(GeneralizedLatinSquare::read_csv(&buf[..]).unwrap(), z(4));
    }

    #[test]
    fn dummy_colours_are_flagged_and_stripped() {
        let mut g = Graph::new_bipartite(2);
        g.add_edge(0, 2, 0).unwrap();
        g.add_edge(1, 3, 5).unwrap();
        g.set_dummy_base(5);
        let m = RainbowMatching { edges: vec![Edge(0, 2), Edge(1, 3)] };
        assert!(matches!(verify(&m, &g, StructureKind::Matching).violations[0], Violation::DummyColour { .. }));
        assert_eq!(strip_dummy(&g, &m.edges), vec![Edge(0, 2)]);
        assert_eq!(g.fresh_colour(), 6);
    }
}
