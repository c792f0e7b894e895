//! `rainbow`: generate instances, run and benchmark the decomposition
//! pipelines, verify structure files and query the exhaustive oracles.
//!
//! Exit codes: 0 when every gate and verification passed, 1 on a
//! verification failure, 2 when the instance failed a pipeline gate.

use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use rainbow_decomp::config::PipelineConfig;
use rainbow_decomp::generate::{generate, InstanceKind};
use rainbow_decomp::graph::{square_to_bipartite, verify, verify_pairwise_disjoint, Edge, GeneralizedLatinSquare, Graph, RainbowForest, StructureKind};
use rainbow_decomp::hamilton::few_large_colours_kn;
use rainbow_decomp::matchings::{few_large_colours, many_colours_gate};
use rainbow_decomp::oracle;
use rainbow_decomp::pseudorandom::boundedness;
use rainbow_decomp::regularize::{gale_ryser_realize, regular_bipartite_subgraph, regular_general_subgraph, DegreeSequencePair, GaleRyser, RegularSubgraph};
use rainbow_decomp::report::{headline_family, run, Pipeline, RunOutput, Status};
use rainbow_decomp::rng::{rng_from_seed, trial_seed};

#[derive(Parser)]
#[command(name = "rainbow", version, about = "Rainbow decompositions of properly edge-coloured graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; trial i uses an independent stream derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Flat key=value file over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra key=value overrides, applied after --config.
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args, Clone)]
struct Instance {
    /// Graph text file, or a square as CSV (`.csv`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generate instead: onefactorization-knn | onefactorization-kn | generalized-square | circulant.
    #[arg(long)]
    generate: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Symbol count for generalized squares.
    #[arg(long)]
    symbols: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance in the graph text format.
    Generate {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a pipeline and emit its report.
    Run {
        /// nibble | matchings | transversals | hamilton | circulant | trees
        #[arg(long)]
        pipeline: String,
        #[command(flatten)]
        instance: Instance,
        /// Where to write the emitted structures (JSON).
        #[arg(long)]
        structures_out: Option<PathBuf>,
    },
    /// Grid sweep over config keys; CSV of success rate, mean family size, runtime.
    Bench {
        #[arg(long)]
        pipeline: String,
        #[command(flatten)]
        instance: Instance,
        /// `key=v1,v2,...`; repeat for a grid.
        #[arg(long)]
        sweep: Vec<String>,
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Properness, completeness, boundedness and the pipeline gates of an instance.
    Check {
        #[command(flatten)]
        instance: Instance,
    },
    /// Re-verify a structure file against its host.
    Verify {
        #[command(flatten)]
        instance: Instance,
        /// A JSON list of edge lists, or a `run --structures-out` file.
        #[arg(long)]
        structures: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Minimum cycle length for 2-factors.
        #[arg(long, default_value_t = 3)]
        min_cycle: usize,
    },
    /// Exhaustive answers for small instances.
    Oracle {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, value_enum)]
        task: OracleTask,
    },
    /// Degree-exact subgraphs, or a Gale–Ryser realization of two sequences.
    Regularize {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        degree: Option<usize>,
        /// Comma-separated X degrees (with --cols: Gale–Ryser mode).
        #[arg(long)]
        rows: Option<String>,
        #[arg(long)]
        cols: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rainbow Hamiltonian cycles: exact circulant construction or the general pipeline.
    Hamilton {
        #[arg(long, value_enum, default_value_t = HamiltonMode::Pipeline)]
        mode: HamiltonMode,
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        structures_out: Option<PathBuf>,
    },
    /// Spanning rainbow trees of a coloured K_n.
    Trees {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        structures_out: Option<PathBuf>,
    },
    /// Disjoint transversals of a generalized Latin square.
    Transversals {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        structures_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Matching,
    PerfectMatching,
    TwoFactor,
    HamiltonianCycle,
    Forest,
    SpanningTree,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleTask {
    MaxMatching,
    Transversals,
    DisjointTransversals,
    Hamiltonian,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HamiltonMode {
    Circulant,
    Pipeline,
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::from_kv(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => PipelineConfig::default(),
    };
    for kv in &g.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("override `{kv}` is not key=value"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.trials {
        cfg.trials = t;
    }
    Ok(cfg)
}

fn read_square(path: &Path) -> Result<GeneralizedLatinSquare> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(GeneralizedLatinSquare::read_csv(file)?)
}

/// The host graph and a short description of where it came from.
fn load_instance(inst: &Instance, seed: u64) -> Result<(Graph, String)> {
    match (&inst.input, &inst.generate) {
        (Some(path), None) => {
            let g = if path.extension().is_some_and(|e| e == "csv") {
                square_to_bipartite(&read_square(path)?)?
            } else {
                let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Graph::read_text(BufReader::new(file))?
            };
            Ok((g, path.display().to_string()))
        }
        (None, Some(kind)) => {
            let n = inst.n.context("--generate needs --n")?;
            let parsed: InstanceKind = kind.parse()?;
            let g = generate(parsed, n, inst.symbols, &mut rng_from_seed(seed))?;
            let symbols = inst.symbols.map(|s| format!(" symbols={s}")).unwrap_or_default();
            Ok((g, format!("{kind} n={n}{symbols} seed={seed}")))
        }
        _ => bail!("give exactly one of --input or --generate"),
    }
}

fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.json_out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None if !global.quiet => println!("{text}"),
        None => {}
    }
    Ok(())
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Success => ExitCode::SUCCESS,
        Status::VerificationFailed => ExitCode::from(1),
        Status::RejectedHypothesis => ExitCode::from(2),
    }
}

fn run_and_emit(global: &Global, pipeline: Pipeline, inst: &Instance, config: &PipelineConfig, structures_out: Option<&PathBuf>) -> Result<ExitCode> {
    let (host, source) = load_instance(inst, config.seed)?;
    let out: RunOutput = run(pipeline, &host, &source, config)?;
    if let Some(p) = structures_out {
        fs::write(p, out.structures_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    if !global.quiet && global.json_out.is_some() {
        let key = headline_family(pipeline);
        eprintln!("{:?}: mean {key} {:.2} over {} trial(s)", out.report.status, out.report.mean_size(key), out.report.trials.len());
    }
    emit(global, &out.report.to_json())?;
    Ok(status_code(out.report.status))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| Ok(t.trim().parse()?)).collect()
}

/// Cartesian product of `key=v1,v2` sweeps; no sweeps is the single
/// default point, a sweep with no values is the empty grid.
fn grid(sweeps: &[String]) -> Result<Vec<Vec<(String, String)>>> {
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for s in sweeps {
        let (k, vs) = s.split_once('=').with_context(|| format!("sweep `{s}` is not key=v1,v2"))?;
        let values: Vec<&str> = vs.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k.trim().to_string(), v.to_string()));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

fn bench(global: &Global, pipeline: Pipeline, inst: &Instance, sweeps: &[String], csv_out: Option<&PathBuf>, base: &PipelineConfig) -> Result<ExitCode> {
    let (host, source) = load_instance(inst, base.seed)?;
    let points = grid(sweeps)?;
    let key = headline_family(pipeline);
    let rows: Vec<Result<(String, f64, f64, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let mut cfg = base.clone();
            cfg.seed = trial_seed(base.seed, 1_000_000 + i as u64);
            for (k, v) in point {
                cfg.set(k, v)?;
            }
            let start = Instant::now();
            let out = run(pipeline, &host, &source, &cfg)?;
            let trials = out.report.trials.len().max(1) as f64;
            let ok = if out.report.status == Status::Success {
                out.report.trials.iter().filter(|t| t.sizes.get(key).copied().unwrap_or(0) > 0).count() as f64
            } else {
                0.0
            };
            let label = point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
            Ok((label, ok / trials, out.report.mean_size(key), start.elapsed().as_secs_f64() * 1e3))
        })
        .collect();
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["point", "success_rate", "mean_family_size", "runtime_ms"])?;
    for row in rows {
        let (label, rate, mean, ms) = row?;
        wtr.write_record([label, format!("{rate:.4}"), format!("{mean:.4}"), format!("{ms:.1}")])?;
    }
    let text = String::from_utf8(wtr.into_inner()?)?;
    match csv_out {
        Some(p) => fs::write(p, &text)?,
        None if !global.quiet => print!("{text}"),
        None => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn check(global: &Global, inst: &Instance, cfg: &PipelineConfig) -> Result<ExitCode> {
    let (host, source) = load_instance(inst, cfg.seed)?;
    let bounds = boundedness(&host);
    let mut report = json!({
        "source": source,
        "vertices": host.n(),
        "bipartite": host.is_bipartite(),
        "edges": host.edge_count(),
        "colours": host.colour_count(),
        "proper": host.is_proper(),
        "global_bound": bounds.global_bound,
        "local_bound": bounds.local_bound,
    });
    if host.is_bipartite() {
        report["complete_bipartite"] = json!(host.is_complete_bipartite());
        report["transversal_gate"] = json!(few_large_colours(&host, cfg.eps));
        report["many_colours_gate"] = json!(many_colours_gate(&host, cfg.eps));
    } else {
        report["complete"] = json!(host.is_complete());
        report["hamilton_gate"] = json!(few_large_colours_kn(&host, cfg.hamilton_eps));
        report["trees_branch"] = json!(if few_large_colours_kn(&host, cfg.tree_eps) { "few-large" } else { "many-large" });
    }
    emit(global, &serde_json::to_string_pretty(&report)?)?;
    Ok(if host.is_proper() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn read_structures(path: &Path) -> Result<Vec<Vec<Edge>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if let Ok(plain) = serde_json::from_value::<Vec<Vec<Edge>>>(value.clone()) {
        return Ok(plain);
    }
    // run output: [{trial, families: {name: [[edge]]}}]
    let mut out = Vec::new();
    for trial in value.as_array().context("structure file is not a list")? {
        for fam in trial["families"].as_object().context("missing families")?.values() {
            out.extend(serde_json::from_value::<Vec<Vec<Edge>>>(fam.clone())?);
        }
    }
    Ok(out)
}

fn verify_file(global: &Global, inst: &Instance, path: &Path, kind: KindArg, min_cycle: usize, cfg: &PipelineConfig) -> Result<ExitCode> {
    let (host, _) = load_instance(inst, cfg.seed)?;
    let kind = match kind {
        KindArg::Matching => StructureKind::Matching,
        KindArg::PerfectMatching => StructureKind::PerfectMatching,
        KindArg::TwoFactor => StructureKind::TwoFactor { min_cycle },
        KindArg::HamiltonianCycle => StructureKind::HamiltonianCycle,
        KindArg::Forest => StructureKind::Forest,
        KindArg::SpanningTree => StructureKind::SpanningTree,
    };
    let family: Vec<RainbowForest> =
        read_structures(path)?.into_iter().map(|edges| RainbowForest { edges, spanning_tree: false }).collect();
    let reports: Vec<_> = family.iter().map(|s| verify(s, &host, kind)).collect();
    let failed = reports.iter().filter(|r| !r.is_valid()).count();
    let disjoint = verify_pairwise_disjoint(&family);
    let out = json!({
        "structures": family.len(),
        "failed": failed,
        "violations": reports.iter().enumerate().filter(|(_, r)| !r.is_valid()).map(|(i, r)| json!({"index": i, "violations": r.violations})).collect::<Vec<_>>(),
        "pairwise_disjoint": disjoint.is_valid(),
    });
    emit(global, &serde_json::to_string_pretty(&out)?)?;
    Ok(if failed == 0 && disjoint.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn oracle_cmd(global: &Global, inst: &Instance, task: OracleTask, cfg: &PipelineConfig) -> Result<ExitCode> {
    let square = || -> Result<GeneralizedLatinSquare> {
        match &inst.input {
            Some(p) if p.extension().is_some_and(|e| e == "csv") => read_square(p),
            _ => bail!("this oracle task needs a square as --input <file.csv>"),
        }
    };
    let text = match task {
        OracleTask::MaxMatching => serde_json::to_string_pretty(&oracle::max_rainbow_matching(&load_instance(inst, cfg.seed)?.0)?)?,
        OracleTask::Transversals => serde_json::to_string_pretty(&oracle::enumerate_transversals(&square()?)?)?,
        OracleTask::DisjointTransversals => serde_json::to_string_pretty(&oracle::max_disjoint_transversals(&square()?)?)?,
        OracleTask::Hamiltonian => serde_json::to_string_pretty(&oracle::rainbow_hamiltonian_exists(&load_instance(inst, cfg.seed)?.0)?)?,
    };
    emit(global, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn write_graph(g: &Graph, out: Option<&PathBuf>, quiet: bool) -> Result<()> {
    match out {
        Some(p) => g.write_text(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None if !quiet => g.write_text(io::stdout().lock())?,
        None => {}
    }
    Ok(())
}

fn regularize_cmd(global: &Global, inst: &Instance, degree: Option<usize>, rows: Option<&String>, cols: Option<&String>, out: Option<&PathBuf>, cfg: &PipelineConfig) -> Result<ExitCode> {
    if let (Some(r), Some(c)) = (rows, cols) {
        let pair = DegreeSequencePair { x_degrees: parse_list(r)?, y_degrees: parse_list(c)? };
        let result = gale_ryser_realize(&pair);
        emit(global, &serde_json::to_string_pretty(&result)?)?;
        return Ok(match result {
            GaleRyser::Realized(_) => ExitCode::SUCCESS,
            GaleRyser::Infeasible { .. } => ExitCode::from(2),
        });
    }
    let (host, _) = load_instance(inst, cfg.seed)?;
    let d = degree.context("--degree is required unless --rows/--cols are given")?;
    if host.is_bipartite() {
        match regular_bipartite_subgraph(&host, d)? {
            RegularSubgraph::Found(g) => write_graph(&g, out, global.quiet)?,
            RegularSubgraph::Infeasible { witness } => {
                emit(global, &serde_json::to_string_pretty(&json!({ "infeasible": true, "witness": witness }))?)?;
                return Ok(ExitCode::from(2));
            }
        }
    } else {
        write_graph(&regular_general_subgraph(&host, d)?, out, global.quiet)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let mut cfg = load_config(g)?;
    match &cli.command {
        Command::Generate { kind, n, symbols, out } => {
            let graph = generate(kind.parse()?, *n, *symbols, &mut rng_from_seed(cfg.seed))?;
            write_graph(&graph, out.as_ref(), g.quiet)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { pipeline, instance, structures_out } => {
            run_and_emit(g, pipeline.parse()?, instance, &cfg, structures_out.as_ref())
        }
        Command::Bench { pipeline, instance, sweep, csv_out } => bench(g, pipeline.parse()?, instance, sweep, csv_out.as_ref(), &cfg),
        Command::Check { instance } => check(g, instance, &cfg),
        Command::Verify { instance, structures, kind, min_cycle } => verify_file(g, instance, structures, *kind, *min_cycle, &cfg),
        Command::Oracle { instance, task } => oracle_cmd(g, instance, *task, &cfg),
        Command::Regularize { instance, degree, rows, cols, out } => {
            regularize_cmd(g, instance, *degree, rows.as_ref(), cols.as_ref(), out.as_ref(), &cfg)
        }
        Command::Hamilton { mode, instance, structures_out } => {
            let (pipeline, default_kind) = match mode {
                HamiltonMode::Circulant => (Pipeline::Circulant, "circulant"),
                HamiltonMode::Pipeline => (Pipeline::Hamilton, "onefactorization-kn"),
            };
            let inst = with_default_kind(instance, default_kind);
            run_and_emit(g, pipeline, &inst, &cfg, structures_out.as_ref())
        }
        Command::Trees { instance, structures_out } => {
            let inst = with_default_kind(instance, "onefactorization-kn");
            run_and_emit(g, Pipeline::Trees, &inst, &cfg, structures_out.as_ref())
        }
        Command::Transversals { instance, epsilon, structures_out } => {
            if let Some(e) = epsilon {
                cfg.eps = *e;
            }
            let inst = with_default_kind(instance, "generalized-square");
            run_and_emit(g, Pipeline::Transversals, &inst, &cfg, structures_out.as_ref())
        }
    }
}

/// `--n` alone means "generate the usual instance for this subcommand".
fn with_default_kind(inst: &Instance, kind: &str) -> Instance {
    let mut out = inst.clone();
    if out.input.is_none() && out.generate.is_none() && out.n.is_some() {
        out.generate = Some(kind.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        assert_eq!(grid(&[]).unwrap().len(), 1);
        assert_eq!(grid(&["alpha=".into()]).unwrap().len(), 0);
        let g = grid(&["alpha=0.02,0.05,0.1".into(), "p=0.1,0.2".into()]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![("alpha".to_string(), "0.02".to_string()), ("p".to_string(), "0.1".to_string())]);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("3, 2,1").unwrap(), vec![3, 2, 1]);
        assert!(parse_list("3,x").is_err());
    }
}
