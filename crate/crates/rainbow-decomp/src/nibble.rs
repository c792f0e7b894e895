//! The (alpha, b)-random edge assignment and the iterated nibble building a
//! near-perfect rainbow matching of a balanced bipartite graph.

use std::collections::HashMap;

use log::warn;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Colour, Edge, Graph, RainbowMatching, Vertex};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BSchedule {
    /// Mean size of the non-empty colour classes of the current graph, the
    /// empirical `delta_t n_t`. Larger classes get kill probability 0.
    MeanClass,
    /// Largest colour class of the current graph: the smallest `b` for
    /// which no kill probability is negative.
    MaxClass,
    /// `(1 + gamma_t) delta_t n_t` from the initial density.
    Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NibbleConfig {
    pub alpha: f64,
    pub p: f64,
    /// `None`: `max(2 alpha, 10 / sqrt(n))`.
    pub gamma: Option<f64>,
    pub ell: usize,
    pub b_schedule: BSchedule,
    /// `None`: `ceil(ln(1/p) / alpha)`.
    pub rounds: Option<usize>,
    pub seed: u64,
    pub stop_on_violation: bool,
}

impl Default for NibbleConfig {
    fn default() -> Self {
        NibbleConfig {
            alpha: 0.05,
            p: 0.1,
            gamma: None,
            ell: 1,
            b_schedule: BSchedule::MeanClass,
            rounds: None,
            seed: 0,
            stop_on_violation: false,
        }
    }
}

impl NibbleConfig {
    pub fn round_count(&self) -> usize {
        self.rounds.unwrap_or_else(|| default_rounds(self.alpha, self.p))
    }

    pub fn gamma_for(&self, n: usize) -> f64 {
        self.gamma.unwrap_or_else(|| (2.0 * self.alpha).max(10.0 / (n.max(1) as f64).sqrt()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("p = {} outside (0, 1)", self.p)));
        }
        if self.rounds == Some(0) {
            return Err(Error::Config("at least one round needed".into()));
        }
        Ok(())
    }
}

/// `alpha (b - |E(c)|) / d(x)`, unclamped.
pub fn kill_probability(alpha: f64, b: f64, class_size: usize, degree: usize) -> f64 {
    alpha * (b - class_size as f64) / degree as f64
}

pub fn default_rounds(alpha: f64, p: f64) -> usize {
    ((1.0 / p).ln() / alpha - 1e-9).ceil().max(1.0) as usize
}

#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub matching: RainbowMatching,
    /// Spanning subgraph on the input vertex ids; only `alive` vertices count.
    pub survivor: Graph,
    pub alive: Vec<bool>,
    pub gamma_observed: f64,
    pub delta_observed: f64,
    pub bound_observed: usize,
    pub clamped: usize,
}

/// Per-round record of the shrinking graph `H_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub n_t: usize,
    pub edges: usize,
    pub b: f64,
    pub matched: usize,
    pub delta_observed: f64,
    pub gamma_observed: f64,
    pub max_class: usize,
    pub min_class: usize,
    pub gamma_t: f64,
    pub delta_t: f64,
    pub within_envelope: bool,
    pub clamped: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NibbleOutcome {
    pub matching: RainbowMatching,
    pub trajectory: Vec<RoundStats>,
    /// Vertices of `H_T`.
    pub leftover_vertices: usize,
    pub rounds_run: usize,
    pub envelope_violated: bool,
    pub stopped_early: bool,
}

impl NibbleOutcome {
    /// `|V(G)| = |V(H_T)| + sum |V(M_t)|`.
    pub fn conserves(&self, n_vertices: usize) -> bool {
        n_vertices == self.leftover_vertices + 2 * self.matching.len()
    }
}

/// Compact working copy of the graph: edges as `(x, y, dense colour)`.
struct State {
    h: usize,
    edges: Vec<(u32, u32, u32)>,
    colour_ids: Vec<Colour>,
    alive: Vec<bool>,
}

impl State {
    fn from_graph(graph: &Graph) -> Result<State> {
        let h = graph.part_size().ok_or_else(|| Error::Precondition("nibble needs a bipartite graph".into()))?;
        let mut dense: HashMap<Colour, u32> = HashMap::new();
        let mut colour_ids = Vec::new();
        let mut edges = Vec::with_capacity(graph.edge_count());
        for (e, c) in graph.edges() {
            let id = *dense.entry(c).or_insert_with(|| {
                colour_ids.push(c);
                (colour_ids.len() - 1) as u32
            });
            let (x, y) = if e.0 < h { (e.0, e.1) } else { (e.1, e.0) };
            edges.push((x as u32, y as u32, id));
        }
        Ok(State { h, edges, colour_ids, alive: vec![true; 2 * h] })
    }

    fn alive_x(&self) -> usize {
        self.alive[..self.h].iter().filter(|&&a| a).count()
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; 2 * self.h];
        for &(x, y, _) in &self.edges {
            deg[x as usize] += 1;
            deg[y as usize] += 1;
        }
        deg
    }

    fn class_sizes(&self) -> Vec<usize> {
        let mut cnt = vec![0usize; self.colour_ids.len()];
        for &(_, _, c) in &self.edges {
            cnt[c as usize] += 1;
        }
        cnt
    }

    /// One round; returns matched edge indices and the number of clamped
    /// kill probabilities, or the first edge whose probability is invalid
    /// when `strict`.
    fn round(&mut self, alpha: f64, b: f64, strict: bool, rng: &mut Rng) -> std::result::Result<(Vec<(u32, u32, u32)>, usize), Edge> {
        let h = self.h;
        let deg = self.degrees();
        let cnt = self.class_sizes();
        // incident edge lists of X, in edge order
        let mut start = vec![0usize; h + 1];
        for &(x, _, _) in &self.edges {
            start[x as usize + 1] += 1;
        }
        for i in 0..h {
            start[i + 1] += start[i];
        }
        let mut slot = start.clone();
        let mut inc = vec![0usize; self.edges.len()];
        for (i, &(x, _, _)) in self.edges.iter().enumerate() {
            inc[slot[x as usize]] = i;
            slot[x as usize] += 1;
        }
        let mut chosen = Vec::new();
        for x in 0..h {
            if !self.alive[x] {
                continue;
            }
            if rng.gen_bool(alpha) && deg[x] > 0 {
                let k = rng.gen_range(0..deg[x]);
                chosen.push(inc[start[x] + k]);
            }
        }
        let mut y_hits = vec![0u32; 2 * h];
        let mut c_hits = vec![0u32; self.colour_ids.len()];
        for &i in &chosen {
            let (_, y, c) = self.edges[i];
            y_hits[y as usize] += 1;
            c_hits[c as usize] += 1;
        }
        let mut matched = Vec::new();
        for &i in &chosen {
            let (x, y, c) = self.edges[i];
            if y_hits[y as usize] == 1 && c_hits[c as usize] == 1 {
                matched.push((x, y, c));
                self.alive[x as usize] = false;
                self.alive[y as usize] = false;
            }
        }
        let mut clamped = 0;
        let mut kept = Vec::with_capacity(self.edges.len());
        for &(x, y, c) in &self.edges {
            let raw = kill_probability(alpha, b, cnt[c as usize], deg[x as usize]);
            if !(-1e-12..=1.0 + 1e-12).contains(&raw) {
                if strict {
                    return Err(Edge::new(x as usize, y as usize));
                }
                clamped += 1;
            }
            let killed = rng.gen::<f64>() < raw.clamp(0.0, 1.0);
            if !killed && c_hits[c as usize] == 0 && self.alive[x as usize] && self.alive[y as usize] {
                kept.push((x, y, c));
            }
        }
        self.edges = kept;
        Ok((matched, clamped))
    }

    fn to_graph(&self, template: &Graph) -> Graph {
        let mut g = template.empty_like();
        for &(x, y, c) in &self.edges {
            g.add_edge(x as usize, y as usize, self.colour_ids[c as usize]).expect("subgraph");
        }
        g
    }
}

/// Relative spread of live degrees around their mean, and the mean density.
fn degree_profile(state: &State) -> (f64, f64) {
    let deg = state.degrees();
    let live: Vec<usize> = (0..2 * state.h).filter(|&v| state.alive[v]).map(|v| deg[v]).collect();
    let nt = state.alive_x().max(1) as f64;
    if live.is_empty() {
        return (0.0, 0.0);
    }
    let mean = live.iter().sum::<usize>() as f64 / live.len() as f64;
    if mean == 0.0 {
        return (0.0, 0.0);
    }
    let spread = live.iter().map(|&d| (d as f64 - mean).abs() / mean).fold(0.0, f64::max);
    (spread, mean / nt)
}

/// One round of the random edge assignment with balancing kill coins.
pub fn edge_assignment_round(graph: &Graph, alpha: f64, b: f64, rng: &mut Rng) -> Result<RoundOutcome> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha = {alpha} outside [0, 1]")));
    }
    let mut state = State::from_graph(graph)?;
    let (matched, clamped) = state
        .round(alpha, b, true, rng)
        .map_err(|e| Error::Config(format!("kill probability outside [0, 1] at edge {e:?}")))?;
    let matching = RainbowMatching { edges: matched.iter().map(|&(x, y, _)| Edge::new(x as usize, y as usize)).collect() }
        .normalized();
    let (gamma_observed, delta_observed) = degree_profile(&state);
    let bound_observed = state.class_sizes().into_iter().max().unwrap_or(0);
    Ok(RoundOutcome {
        matching,
        survivor: state.to_graph(graph),
        alive: state.alive,
        gamma_observed,
        delta_observed,
        bound_observed,
        clamped,
    })
}

/// Iterates [`edge_assignment_round`] for `T` rounds and returns the union
/// of the round matchings with the per-round trajectory.
pub fn near_perfect_rainbow_matching(graph: &Graph, config: &NibbleConfig, rng: &mut Rng) -> Result<NibbleOutcome> {
    config.validate()?;
    let mut state = State::from_graph(graph)?;
    let n = state.h;
    let gamma = config.gamma_for(n);
    let delta = if n == 0 { 0.0 } else { graph.edge_count() as f64 / (n * n) as f64 };
    let rounds = config.round_count();
    let mut all = Vec::new();
    let mut trajectory = Vec::with_capacity(rounds);
    let mut violated = false;
    let mut stopped = false;
    for t in 0..rounds {
        if state.edges.is_empty() {
            break;
        }
        let decay = (-config.alpha * t as f64).exp();
        let gamma_t = (35.0 * config.alpha * t as f64).exp() * gamma;
        let delta_t = decay * delta;
        let n_t = decay * n as f64;
        let sizes = state.class_sizes();
        let max_class = sizes.iter().copied().max().unwrap_or(0);
        let min_class = sizes.iter().copied().filter(|&s| s > 0).min().unwrap_or(0);
        let (spread, dens) = degree_profile(&state);
        let b = match config.b_schedule {
            BSchedule::MeanClass => {
                let live = sizes.iter().filter(|&&s| s > 0).count().max(1);
                state.edges.len() as f64 / live as f64
            }
            BSchedule::MaxClass => max_class as f64,
            BSchedule::Formula => (1.0 + gamma_t) * delta_t * n_t,
        };
        let nt_obs = state.alive_x();
        let degree_ok = (dens * nt_obs as f64 - delta_t * n_t).abs() <= gamma_t * delta_t * n_t + 1e-9 && spread <= gamma_t;
        let bound_ok = max_class as f64 <= (1.0 + gamma_t) * delta_t * n_t + 1e-9;
        let within = degree_ok && bound_ok;
        if !within {
            violated = true;
            if config.stop_on_violation {
                stopped = true;
                break;
            }
        }
        let (matched, clamped) = state.round(config.alpha, b, false, rng).expect("non-strict round");
        if clamped > 0 && config.b_schedule != BSchedule::MeanClass {
            warn!("round {t}: {clamped} kill probabilities clamped");
        }
        trajectory.push(RoundStats {
            round: t + 1,
            n_t: nt_obs,
            edges: state.edges.len(),
            b,
            matched: matched.len(),
            delta_observed: dens,
            gamma_observed: spread,
            max_class,
            min_class,
            gamma_t,
            delta_t,
            within_envelope: within,
            clamped,
        });
        all.extend(matched);
    }
    let matching = RainbowMatching { edges: all.iter().map(|&(x, y, _)| Edge::new(x as usize, y as usize)).collect() }
        .normalized();
    let leftover_vertices = state.alive.iter().filter(|&&a| a).count();
    Ok(NibbleOutcome {
        matching,
        rounds_run: trajectory.len(),
        trajectory,
        leftover_vertices,
        envelope_violated: violated,
        stopped_early: stopped,
    })
}

/// Vertices left uncovered by `matching` on side `X` and `Y`.
pub fn uncovered(graph: &Graph, matching: &RainbowMatching) -> (Vec<Vertex>, Vec<Vertex>) {
    let covered = matching.vertices();
    let xs = graph.x_vertices().filter(|v| !covered.contains(v)).collect();
    let ys = graph.y_vertices().filter(|v| !covered.contains(v)).collect();
    (xs, ys)
}
