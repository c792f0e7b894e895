//! Exhaustive baselines for small instances.
//!
//! Every search is deterministic and complete within the size bounds below,
//! each chosen so a single call stays well under ten seconds.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Colour, CycleFactor, Edge, GeneralizedLatinSquare, Graph, RainbowMatching, Vertex};

/// Part size bound for bipartite [`max_rainbow_matching`].
pub const MAX_MATCHING_SIDE: usize = 8;
/// Vertex bound for non-bipartite [`max_rainbow_matching`].
pub const MAX_MATCHING_VERTICES: usize = 14;
pub const MAX_TRANSVERSAL_ORDER: usize = 7;
pub const MAX_PACKING_ORDER: usize = 5;
pub const MAX_HAMILTON_VERTICES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult<W> {
    pub optimum: usize,
    pub witnesses: Vec<W>,
    /// Complete candidates examined.
    pub enumerated: u64,
}

fn too_big(what: &str, n: usize, bound: usize) -> Error {
    Error::Precondition(format!("{what}: size {n} exceeds the exhaustive bound {bound}"))
}

/// Maximum rainbow matching size and every matching attaining it.
pub fn max_rainbow_matching(graph: &Graph) -> Result<OracleResult<RainbowMatching>> {
    let n = graph.n();
    match graph.part_size() {
        Some(h) if h > MAX_MATCHING_SIDE => return Err(too_big("max_rainbow_matching", h, MAX_MATCHING_SIDE)),
        None if n > MAX_MATCHING_VERTICES => return Err(too_big("max_rainbow_matching", n, MAX_MATCHING_VERTICES)),
        _ => {}
    }
    struct Search<'a> {
        g: &'a Graph,
        used: Vec<bool>,
        colours: HashSet<Colour>,
        stack: Vec<Edge>,
        best: usize,
        witnesses: Vec<RainbowMatching>,
        enumerated: u64,
    }
    impl Search<'_> {
        fn go(&mut self, v: Vertex) {
            // the next vertex still free to take an edge to a later vertex
            let Some(v) = (v..self.g.n()).find(|&u| !self.used[u]) else {
                self.leaf();
                return;
            };
            self.used[v] = true;
            let adj: Vec<(Vertex, Colour)> = self.g.adj(v).to_vec();
            for (w, c) in adj {
                if w > v && !self.used[w] && !self.colours.contains(&c) {
                    self.used[w] = true;
                    self.colours.insert(c);
                    self.stack.push(Edge::new(v, w));
                    self.go(v + 1);
                    self.stack.pop();
                    self.colours.remove(&c);
                    self.used[w] = false;
                }
            }
            // v stays unmatched
            self.go(v + 1);
            self.used[v] = false;
        }
        fn leaf(&mut self) {
            self.enumerated += 1;
            let size = self.stack.len();
            if size > self.best {
                self.best = size;
                self.witnesses.clear();
            }
            if size == self.best {
                self.witnesses.push(RainbowMatching { edges: self.stack.clone() }.normalized());
            }
        }
    }
    let mut s = Search {
        g: graph,
        used: vec![false; n],
        colours: HashSet::new(),
        stack: Vec::new(),
        best: 0,
        witnesses: Vec::new(),
        enumerated: 0,
    };
    s.go(0);
    Ok(OracleResult { optimum: s.best, witnesses: s.witnesses, enumerated: s.enumerated })
}

/// Transversal as the perfect matching `{(i, n + col(i))}` of the square's
/// bipartite graph.
pub fn transversal_matching(n: usize, columns: &[usize]) -> RainbowMatching {
    RainbowMatching { edges: columns.iter().enumerate().map(|(i, &j)| Edge::new(i, n + j)).collect() }.normalized()
}

/// Every transversal of the square; `optimum` is their number.
pub fn enumerate_transversals(square: &GeneralizedLatinSquare) -> Result<OracleResult<RainbowMatching>> {
    let n = square.n;
    if n > MAX_TRANSVERSAL_ORDER {
        return Err(too_big("enumerate_transversals", n, MAX_TRANSVERSAL_ORDER));
    }
    square.validate()?;
    fn go(
        sq: &GeneralizedLatinSquare,
        row: usize,
        cols: &mut Vec<usize>,
        used_col: &mut [bool],
        symbols: &mut HashSet<usize>,
        out: &mut Vec<RainbowMatching>,
        enumerated: &mut u64,
    ) {
        let n = sq.n;
        if row == n {
            *enumerated += 1;
            out.push(transversal_matching(n, cols));
            return;
        }
        for j in 0..n {
            let s = sq.cell[row][j];
            if used_col[j] || symbols.contains(&s) {
                continue;
            }
            used_col[j] = true;
            symbols.insert(s);
            cols.push(j);
            go(sq, row + 1, cols, used_col, symbols, out, enumerated);
            cols.pop();
            symbols.remove(&s);
            used_col[j] = false;
        }
    }
    let mut witnesses = Vec::new();
    let mut enumerated = 0;
    go(square, 0, &mut Vec::new(), &mut vec![false; n], &mut HashSet::new(), &mut witnesses, &mut enumerated);
    Ok(OracleResult { optimum: witnesses.len(), witnesses, enumerated })
}

/// Largest family of pairwise cell-disjoint transversals (one optimal
/// family as the single witness), by branch and bound over all transversals.
pub fn max_disjoint_transversals(square: &GeneralizedLatinSquare) -> Result<OracleResult<Vec<RainbowMatching>>> {
    let n = square.n;
    if n > MAX_PACKING_ORDER {
        return Err(too_big("max_disjoint_transversals", n, MAX_PACKING_ORDER));
    }
    let all = enumerate_transversals(square)?.witnesses;
    let cells: Vec<u64> = all
        .iter()
        .map(|m| m.edges.iter().fold(0u64, |acc, e| acc | 1 << (e.0 * n + (e.1 - n))))
        .collect();
    struct Packing<'a> {
        cells: &'a [u64],
        n: usize,
        chosen: Vec<usize>,
        best: Vec<usize>,
        nodes: u64,
    }
    impl Packing<'_> {
        fn go(&mut self, from: usize, occupied: u64) {
            self.nodes += 1;
            if self.chosen.len() > self.best.len() {
                self.best = self.chosen.clone();
            }
            if self.best.len() == self.n {
                return;
            }
            let room = (self.n * self.n - occupied.count_ones() as usize) / self.n;
            let left = self.cells.len() - from;
            if self.chosen.len() + room.min(left) <= self.best.len() {
                return;
            }
            for i in from..self.cells.len() {
                if self.cells[i] & occupied == 0 {
                    self.chosen.push(i);
                    self.go(i + 1, occupied | self.cells[i]);
                    self.chosen.pop();
                    if self.best.len() == self.n {
                        return;
                    }
                }
            }
        }
    }
    let mut p = Packing { cells: &cells, n, chosen: Vec::new(), best: Vec::new(), nodes: 0 };
    p.go(0, 0);
    let family: Vec<RainbowMatching> = p.best.iter().map(|&i| all[i].clone()).collect();
    Ok(OracleResult { optimum: family.len(), witnesses: vec![family], enumerated: p.nodes })
}

/// Cycle written from its smallest vertex, in the direction whose second
/// vertex is the smaller neighbour.
pub fn normalize_cycle(cycle: &[Vertex]) -> Vec<Vertex> {
    let len = cycle.len();
    if len == 0 {
        return Vec::new();
    }
    let start = (0..len).min_by_key(|&i| cycle[i]).expect("non-empty");
    let fwd: Vec<Vertex> = (0..len).map(|i| cycle[(start + i) % len]).collect();
    if len > 2 && fwd[len - 1] < fwd[1] {
        let mut back = vec![fwd[0]];
        back.extend(fwd[1..].iter().rev());
        back
    } else {
        fwd
    }
}

/// Every rainbow Hamiltonian cycle (normalized); `optimum` is 1 if one exists.
pub fn rainbow_hamiltonian_exists(graph: &Graph) -> Result<OracleResult<CycleFactor>> {
    let n = graph.n();
    if n > MAX_HAMILTON_VERTICES {
        return Err(too_big("rainbow_hamiltonian_exists", n, MAX_HAMILTON_VERTICES));
    }
    let mut witnesses = Vec::new();
    let mut enumerated = 0;
    if n >= 3 {
        fn go(
            g: &Graph,
            path: &mut Vec<Vertex>,
            on: &mut [bool],
            colours: &mut HashSet<Colour>,
            out: &mut Vec<CycleFactor>,
            enumerated: &mut u64,
        ) {
            let n = g.n();
            let last = *path.last().expect("path starts at 0");
            if path.len() == n {
                *enumerated += 1;
                if let Some(c) = g.colour(last, 0) {
                    if path[1] < last && !colours.contains(&c) {
                        out.push(CycleFactor { cycles: vec![path.clone()] });
                    }
                }
                return;
            }
            for &(w, c) in g.adj(last) {
                if on[w] || colours.contains(&c) {
                    continue;
                }
                on[w] = true;
                colours.insert(c);
                path.push(w);
                go(g, path, on, colours, out, enumerated);
                path.pop();
                colours.remove(&c);
                on[w] = false;
            }
        }
        let mut on = vec![false; n];
        on[0] = true;
        go(graph, &mut vec![0], &mut on, &mut HashSet::new(), &mut witnesses, &mut enumerated);
        witnesses.sort_by(|a, b| a.cycles.cmp(&b.cycles));
    }
    Ok(OracleResult { optimum: usize::from(!witnesses.is_empty()), witnesses, enumerated })
}
