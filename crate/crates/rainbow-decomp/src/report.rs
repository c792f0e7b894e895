//! Pipeline drivers and the JSON run report.
//!
//! [`run`] drives one pipeline over `config.trials` independent seed
//! streams (`trial_seed(config.seed, i)`), re-verifies every emitted
//! structure and records sizes, diagnostics and timings. A report only says
//! `success` when every structure of every trial verified.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::graph::{verify, verify_pairwise_disjoint, CycleFactor, Edge, Graph, Structure, StructureKind};
use crate::hamilton::{circulant_decomposition, hamiltonian_decomposition};
use crate::matchings::{knn_transversal_pipeline, near_matching_decomposition};
use crate::nibble::near_perfect_rainbow_matching;
use crate::rng::{rng_from_seed, trial_seed};
use crate::trees::spanning_tree_decomposition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// One near-perfect rainbow matching of a bipartite graph.
    Nibble,
    /// Near-decomposition of a regular bipartite graph into rainbow matchings.
    Matchings,
    /// Disjoint transversals of a coloured `K_{n,n}`.
    Transversals,
    /// Rainbow 2-factors and Hamiltonian cycles of a coloured `K_n`.
    Hamilton,
    /// Exact decomposition of the circulant colouring of `K_p`, `p` prime.
    Circulant,
    /// Spanning rainbow trees of a coloured `K_n`.
    Trees,
}

impl std::str::FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nibble" => Pipeline::Nibble,
            "matchings" => Pipeline::Matchings,
            "transversals" => Pipeline::Transversals,
            "hamilton" => Pipeline::Hamilton,
            "circulant" => Pipeline::Circulant,
            "trees" => Pipeline::Trees,
            _ => return Err(Error::Parse(format!("unknown pipeline `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    RejectedHypothesis,
    VerificationFailed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub source: String,
    pub vertices: usize,
    pub bipartite: bool,
    pub edges: usize,
    pub colours: usize,
}

impl InstanceDescriptor {
    pub fn of(graph: &Graph, source: &str) -> Self {
        InstanceDescriptor {
            source: source.to_string(),
            vertices: graph.n(),
            bipartite: graph.is_bipartite(),
            edges: graph.edge_count(),
            colours: graph.colour_count(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub structures_checked: usize,
    pub structures_failed: usize,
    pub families_not_disjoint: usize,
}

impl VerificationSummary {
    pub fn passed(&self) -> bool {
        self.structures_failed == 0 && self.families_not_disjoint == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Family sizes by structure kind, e.g. `"cycles": 4`.
    pub sizes: BTreeMap<String, usize>,
    pub diagnostics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub pipeline: Pipeline,
    pub status: Status,
    pub message: Option<String>,
    pub instance: InstanceDescriptor,
    pub config: PipelineConfig,
    pub trials: Vec<TrialRecord>,
    pub verification: VerificationSummary,
    /// Milliseconds; the only field allowed to differ between re-runs.
    pub timings_ms: BTreeMap<String, f64>,
}

impl DecompositionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timings zeroed, for byte comparisons between re-runs.
    pub fn to_json_without_timings(&self) -> String {
        let mut copy = self.clone();
        copy.timings_ms.clear();
        copy.to_json()
    }

    /// Mean over trials of the size recorded under `key`.
    pub fn mean_size(&self, key: &str) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        self.trials.iter().map(|t| t.sizes.get(key).copied().unwrap_or(0) as f64).sum::<f64>() / self.trials.len() as f64
    }
}

/// Structures emitted by one trial, as edge lists per family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStructures {
    pub trial: usize,
    pub families: BTreeMap<String, Vec<Vec<Edge>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: DecompositionReport,
    pub structures: Vec<TrialStructures>,
}

impl RunOutput {
    pub fn structures_json(&self) -> String {
        serde_json::to_string(&self.structures).expect("structures serialize")
    }
}

/// The main family key of each pipeline, used for bench means.
pub fn headline_family(pipeline: Pipeline) -> &'static str {
    match pipeline {
        Pipeline::Nibble => "matching_edges",
        Pipeline::Matchings | Pipeline::Transversals => "matchings",
        Pipeline::Hamilton | Pipeline::Circulant => "cycles",
        Pipeline::Trees => "trees",
    }
}

struct Trial {
    record: TrialRecord,
    structures: TrialStructures,
    summary: VerificationSummary,
}

impl Trial {
    fn new(trial: usize, seed: u64) -> Self {
        Trial {
            record: TrialRecord { trial, seed, sizes: BTreeMap::new(), diagnostics: BTreeMap::new(), notes: Vec::new() },
            structures: TrialStructures { trial, families: BTreeMap::new() },
            summary: VerificationSummary::default(),
        }
    }

    fn family<S: Structure>(&mut self, name: &str, host: &Graph, family: &[S], kind: StructureKind) {
        for s in family {
            self.summary.structures_checked += 1;
            if !verify(s, host, kind).is_valid() {
                self.summary.structures_failed += 1;
            }
        }
        if !verify_pairwise_disjoint(family).is_valid() {
            self.summary.families_not_disjoint += 1;
        }
        self.record.sizes.insert(name.to_string(), family.len());
        self.structures.families.insert(name.to_string(), family.iter().map(|s| s.edge_list()).collect());
    }

    fn diag(&mut self, key: &str, value: Value) {
        self.record.diagnostics.insert(key.to_string(), value);
    }
}

fn run_trial(pipeline: Pipeline, host: &Graph, config: &PipelineConfig, trial: usize) -> Result<Trial> {
    let seed = trial_seed(config.seed, trial as u64);
    let mut rng = rng_from_seed(seed);
    let mut t = Trial::new(trial, seed);
    match pipeline {
        Pipeline::Nibble => {
            let out = near_perfect_rainbow_matching(host, &config.nibble(), &mut rng)?;
            t.family("matching", host, std::slice::from_ref(&out.matching), StructureKind::Matching);
            t.record.sizes.insert("matching_edges".into(), out.matching.len());
            t.diag("leftover_vertices", json!(out.leftover_vertices));
            t.diag("rounds_run", json!(out.rounds_run));
            t.diag("conserves", json!(out.conserves(host.n())));
            t.diag("envelope_violated", json!(out.envelope_violated));
        }
        Pipeline::Matchings => {
            let fam = near_matching_decomposition(host, &config.decomposition(), &mut rng)?;
            t.family("matchings", host, &fam.matchings, StructureKind::Matching);
            t.diag("min_size", json!(fam.min_size()));
            t.record.notes = fam.notes;
        }
        Pipeline::Transversals => {
            let fam = knn_transversal_pipeline(host, &config.transversal(), &mut rng)?;
            t.family("matchings", host, &fam.matchings, StructureKind::PerfectMatching);
            t.record.notes = fam.notes;
        }
        Pipeline::Hamilton => {
            let out = hamiltonian_decomposition(host, &config.hamilton(), &mut rng)?;
            t.family("factors", host, &out.factors, StructureKind::TwoFactor { min_cycle: config.cycle_k });
            t.family("cycles", host, &out.cycles, StructureKind::HamiltonianCycle);
            t.record.notes = out.notes;
        }
        Pipeline::Circulant => {
            let d = circulant_decomposition(host.n())?;
            if d.colouring != *host {
                return Err(Error::Precondition("instance is not the circulant colouring".into()));
            }
            t.family::<CycleFactor>("cycles", host, &d.cycles, StructureKind::HamiltonianCycle);
            let covered: usize = d.cycles.iter().map(|c| c.cycles[0].len()).sum();
            t.diag("covers_every_edge", json!(covered == host.edge_count()));
        }
        Pipeline::Trees => {
            let out = spanning_tree_decomposition(host, &config.trees(), &mut rng)?;
            t.family("trees", host, &out.trees, StructureKind::SpanningTree);
            t.diag("branch", json!(out.branch));
            t.diag("quarantined", json!(out.quarantined.len()));
            t.diag("extensions", json!(out.extensions));
            t.diag("invariant_checks", json!(out.invariant_checks));
            t.diag("invariant_violations", json!(out.invariant_violations.len()));
            t.record.notes = out.notes;
        }
    }
    Ok(t)
}

/// Runs `pipeline` on `host` for `config.trials` trials. Precondition
/// (gate) errors yield a `rejected-hypothesis` report; other errors abort.
pub fn run(pipeline: Pipeline, host: &Graph, source: &str, config: &PipelineConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let mut report = DecompositionReport {
        pipeline,
        status: Status::Success,
        message: None,
        instance: InstanceDescriptor::of(host, source),
        config: config.clone(),
        trials: Vec::new(),
        verification: VerificationSummary::default(),
        timings_ms: BTreeMap::new(),
    };
    let mut structures = Vec::new();
    for i in 0..config.trials.max(1) {
        let trial_start = Instant::now();
        match run_trial(pipeline, host, config, i) {
            Ok(t) => {
                report.verification.structures_checked += t.summary.structures_checked;
                report.verification.structures_failed += t.summary.structures_failed;
                report.verification.families_not_disjoint += t.summary.families_not_disjoint;
                report.trials.push(t.record);
                structures.push(t.structures);
            }
            Err(Error::Precondition(msg)) => {
                report.status = Status::RejectedHypothesis;
                report.message = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
        report.timings_ms.insert(format!("trial_{i}"), trial_start.elapsed().as_secs_f64() * 1e3);
    }
    if !report.verification.passed() {
        report.status = Status::VerificationFailed;
    }
    report.timings_ms.insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
    Ok(RunOutput { report, structures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{circulant_colouring, onefactorization_knn, round_robin_kn};

    #[test]
    fn circulant_report_is_exact() {
        let host = circulant_colouring(31).unwrap();
        let out = run(Pipeline::Circulant, &host, "circulant 31", &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.status, Status::Success);
        assert_eq!(out.report.trials[0].sizes["cycles"], 15);
        assert_eq!(out.report.trials[0].diagnostics["covers_every_edge"], json!(true));
    }

    #[test]
    fn gate_failure_is_a_rejected_hypothesis() {
        // round robin has n - 1 colours of size n / 2: too many large colours
        let host = round_robin_kn(20).unwrap();
        let cfg = PipelineConfig { hamilton_eps: 0.1, ..PipelineConfig::default() };
        let out = run(Pipeline::Hamilton, &host, "round robin 20", &cfg).unwrap();
        assert_eq!(out.report.status, Status::RejectedHypothesis);
        assert!(out.report.message.is_some());
    }

    #[test]
    fn reruns_agree_apart_from_timings() {
        let host = onefactorization_knn(16);
        let cfg = PipelineConfig { trials: 2, seed: 9, ..PipelineConfig::default() };
        let a = run(Pipeline::Nibble, &host, "knn 16", &cfg).unwrap();
        let b = run(Pipeline::Nibble, &host, "knn 16", &cfg).unwrap();
        assert_eq!(a.report.to_json_without_timings(), b.report.to_json_without_timings());
        assert_eq!(a.structures_json(), b.structures_json());
        assert_eq!(a.report.trials.len(), 2);
        assert_ne!(a.report.trials[0].seed, a.report.trials[1].seed);
    }
}
