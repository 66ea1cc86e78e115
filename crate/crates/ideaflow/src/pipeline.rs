//! End-to-end orchestration behind the CLI subcommands: ingest, explore,
//! evolve, run, report. Owns run-directory artifacts and their schemas.
//!
//! Artifact layout of a full run:
//! - `config_resolved.toml` — snapshot with all defaults materialized
//! - `graph.json` — persisted literature graph
//! - `trajectories.jsonl`, `search_tree.json`, `exploration_rewards.csv`,
//!   `initial_population.json` — exploration phase
//! - `population_gen_{t}.json`, `evolution_rewards.csv`, `diversity.json`
//!   — evolution phase
//! - `combined_rewards.csv` — both phases on one curve
//! - `FAILED` — diagnostic marker when a backend aborted the run

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{mock, BackendKind, BackendSet};
use crate::config::RunConfig;
use crate::corpus::{embed_query, load_corpus, Corpus, LoadOptions, Query};
use crate::error::{Error, Result};
use crate::evolve::{
    diversity_score, insight_score, run_evolution, FitnessRecord, GenerationStats, Idea,
    Population,
};
use crate::flowmcts::{run_exploration, sample_variance, ExplorationOutcome};
use crate::litgraph::{load_graph, save_graph, LiteratureGraph};
use crate::seeds::substream_seed;

pub const SCHEMA_VERSION: u32 = 1;

pub const GRAPH_FILE: &str = "graph.json";
pub const CONFIG_SNAPSHOT_FILE: &str = "config_resolved.toml";
pub const TRAJECTORIES_FILE: &str = "trajectories.jsonl";
pub const SEARCH_TREE_FILE: &str = "search_tree.json";
pub const EXPLORATION_REWARDS_FILE: &str = "exploration_rewards.csv";
pub const INITIAL_POPULATION_FILE: &str = "initial_population.json";
pub const EVOLUTION_REWARDS_FILE: &str = "evolution_rewards.csv";
pub const DIVERSITY_FILE: &str = "diversity.json";
pub const COMBINED_REWARDS_FILE: &str = "combined_rewards.csv";
pub const FAILED_MARKER_FILE: &str = "FAILED";

/// On-disk population schema shared by the exploration output, the
/// per-generation files, and externally supplied populations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationFile {
    pub schema_version: u32,
    pub generation: u32,
    pub size_target: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_text: Option<String>,
    pub members: Vec<PopulationMember>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationMember {
    pub idea: Idea,
    /// Absent in external files; scored at load when missing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitness: Option<FitnessRecord>,
}

impl PopulationFile {
    pub fn from_population(pop: &Population, query_text: Option<&str>) -> Self {
        PopulationFile {
            schema_version: SCHEMA_VERSION,
            generation: pop.generation,
            size_target: pop.size_target,
            query_text: query_text.map(str::to_string),
            members: pop
                .members
                .iter()
                .map(|(idea, fitness)| PopulationMember {
                    idea: idea.clone(),
                    fitness: Some(fitness.clone()),
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::validation(format!("serialize population: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::validation(format!("cannot read population file '{}': {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("malformed population file: {e}")))
    }
}

fn backend_seed(cfg: &RunConfig) -> u64 {
    substream_seed(cfg.seed, "backends")
}

/// Read just the `{"dim": D}` header of a corpus file.
fn peek_corpus_dim(path: &Path) -> Result<usize> {
    let file = fs::File::open(path).map_err(|e| {
        Error::validation(format!("cannot open corpus file '{}': {e}", path.display()))
    })?;
    let reader = std::io::BufReader::new(file);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        #[derive(Deserialize)]
        struct Header {
            dim: usize,
        }
        let header: Header = serde_json::from_str(&line)
            .map_err(|e| Error::validation(format!("malformed header line: {e}")))?;
        return Ok(header.dim);
    }
    Err(Error::validation("corpus file is empty (missing header line)"))
}

fn load_corpus_for(cfg: &RunConfig, corpus_path: &Path) -> Result<(Corpus, BackendSet)> {
    let dim = peek_corpus_dim(corpus_path)?;
    let backends = BackendSet::build(&cfg.backends, backend_seed(cfg), dim)?;
    let opts = LoadOptions {
        normalize_embeddings: cfg.graph.normalize_embeddings,
        embedding_mode: cfg.graph.embedding_mode,
    };
    let corpus = load_corpus(corpus_path, &opts, Some(backends.embedder.as_ref()))?;
    Ok((corpus, backends))
}

fn require_corpus_path<'a>(cfg: &'a RunConfig, flag: Option<&'a Path>) -> Result<&'a Path> {
    flag.or(cfg.corpus_path.as_deref()).ok_or_else(|| {
        Error::validation("no corpus path: pass --corpus or set corpus_path in the config")
    })
}

fn write_failed_marker(run_dir: &Path, diagnostic: &str) -> Result<()> {
    fs::write(run_dir.join(FAILED_MARKER_FILE), format!("{diagnostic}\n"))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub nodes: usize,
    pub edges: usize,
    /// Edge count per criterion; an edge may satisfy several.
    pub reason_counts: BTreeMap<String, usize>,
    pub dangling_citations: usize,
    pub graph_path: PathBuf,
}

/// Build and persist the literature graph; returns the printed summary.
pub fn cmd_ingest(cfg: &RunConfig, corpus_path: &Path, out_dir: &Path) -> Result<IngestReport> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let (corpus, _backends) = load_corpus_for(cfg, corpus_path)?;
    if corpus.is_empty() {
        return Err(Error::validation("corpus is empty; nothing to ingest"));
    }
    let graph = LiteratureGraph::build(&corpus, cfg.graph.sim_threshold)?;
    let graph_path = out_dir.join(GRAPH_FILE);
    save_graph(&graph, corpus.dim(), &graph_path)?;

    let mut reason_counts = BTreeMap::new();
    for (_, _, reasons) in graph.edges() {
        for r in reasons {
            *reason_counts.entry(format!("{r:?}")).or_insert(0) += 1;
        }
    }
    Ok(IngestReport {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        reason_counts,
        dangling_citations: corpus.dangling_citation_count(),
        graph_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExploreReport {
    pub run_dir: PathBuf,
    pub iterations: usize,
    pub population_size: usize,
    pub final_variance: f64,
    pub mean_reward: f64,
}

/// Flow-guided exploration end to end: writes trajectories, the search tree,
/// the reward curve, and the initial population into `run_dir`. Backend
/// failures leave partial artifacts plus a `FAILED` marker.
pub fn cmd_explore(
    cfg: &RunConfig,
    query_text: &str,
    graph_path: &Path,
    corpus_flag: Option<&Path>,
    run_dir: &Path,
) -> Result<ExploreReport> {
    cfg.validate()?;
    fs::create_dir_all(run_dir)?;
    let result = explore_inner(cfg, query_text, graph_path, corpus_flag, run_dir);
    if let Err(Error::Backend(diag)) = &result {
        write_failed_marker(run_dir, diag)?;
    }
    result
}

fn explore_inner(
    cfg: &RunConfig,
    query_text: &str,
    graph_path: &Path,
    corpus_flag: Option<&Path>,
    run_dir: &Path,
) -> Result<ExploreReport> {
    let (graph, graph_dim) = load_graph(graph_path)?;
    let corpus_path = require_corpus_path(cfg, corpus_flag)?;
    let (corpus, backends) = load_corpus_for(cfg, corpus_path)?;
    if corpus.dim() != graph_dim {
        return Err(Error::validation(format!(
            "corpus dimension {} does not match graph dimension {graph_dim}",
            corpus.dim()
        )));
    }
    fs::write(run_dir.join(CONFIG_SNAPSHOT_FILE), cfg.snapshot_toml()?)?;

    let query = embed_query(query_text, backends.embedder.as_ref())?;
    let outcome = run_exploration(&query, &graph, &corpus, &backends, &cfg.exploration)?;
    write_exploration_artifacts(run_dir, &outcome, &query)?;

    if let Some(diag) = &outcome.aborted {
        return Err(Error::backend(diag.clone()));
    }
    Ok(ExploreReport {
        run_dir: run_dir.to_path_buf(),
        iterations: outcome.rewards.len(),
        population_size: outcome.population.len(),
        final_variance: sample_variance(&outcome.rewards),
        mean_reward: if outcome.rewards.is_empty() {
            0.0
        } else {
            outcome.rewards.iter().sum::<f64>() / outcome.rewards.len() as f64
        },
    })
}

fn write_exploration_artifacts(
    run_dir: &Path,
    outcome: &ExplorationOutcome,
    query: &Query,
) -> Result<()> {
    let mut jsonl = String::new();
    for record in &outcome.trajectories {
        let mut value = serde_json::to_value(record)
            .map_err(|e| Error::validation(format!("serialize trajectory: {e}")))?;
        value["schema_version"] = serde_json::json!(SCHEMA_VERSION);
        writeln!(jsonl, "{value}").expect("writing to string cannot fail");
    }
    fs::write(run_dir.join(TRAJECTORIES_FILE), jsonl)?;

    let tree_doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "tree": &outcome.tree,
    });
    fs::write(
        run_dir.join(SEARCH_TREE_FILE),
        serde_json::to_string_pretty(&tree_doc)
            .map_err(|e| Error::validation(format!("serialize tree: {e}")))?,
    )?;

    let mut csv = String::from("iteration,reward,running_variance\n");
    for (i, _) in outcome.rewards.iter().enumerate() {
        let variance = sample_variance(&outcome.rewards[..=i]);
        writeln!(csv, "{},{},{}", i + 1, outcome.rewards[i], variance)
            .expect("writing to string cannot fail");
    }
    fs::write(run_dir.join(EXPLORATION_REWARDS_FILE), csv)?;

    let pop = Population {
        members: outcome.population.clone(),
        generation: 0,
        size_target: outcome.population.len(),
    };
    PopulationFile::from_population(&pop, Some(&query.text))
        .write(&run_dir.join(INITIAL_POPULATION_FILE))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub run_dir: PathBuf,
    pub generations_run: usize,
    pub initial_mean_fitness: f64,
    pub final_mean_fitness: f64,
    pub final_std_fitness: f64,
    /// Trend flag (not an invariant): final fitness std did not exceed the
    /// initial one.
    pub std_trend_non_increasing: bool,
    pub diversity: f64,
    pub stats: Vec<GenerationStats>,
}

/// Evolution end to end from a population file (either the exploration output
/// or an externally supplied population). Backend failures leave partial
/// artifacts plus a `FAILED` marker.
pub fn cmd_evolve(
    cfg: &RunConfig,
    population_path: &Path,
    graph_path: &Path,
    corpus_flag: Option<&Path>,
    query_flag: Option<&str>,
    run_dir: &Path,
) -> Result<EvolveReport> {
    cfg.validate()?;
    fs::create_dir_all(run_dir)?;
    let result = evolve_inner(cfg, population_path, graph_path, corpus_flag, query_flag, run_dir);
    if let Err(Error::Backend(diag)) = &result {
        write_failed_marker(run_dir, diag)?;
    }
    result
}

fn evolve_inner(
    cfg: &RunConfig,
    population_path: &Path,
    graph_path: &Path,
    corpus_flag: Option<&Path>,
    query_flag: Option<&str>,
    run_dir: &Path,
) -> Result<EvolveReport> {
    let (graph, graph_dim) = load_graph(graph_path)?;
    let corpus_path = require_corpus_path(cfg, corpus_flag)?;
    let (corpus, backends) = load_corpus_for(cfg, corpus_path)?;
    if corpus.dim() != graph_dim {
        return Err(Error::validation(format!(
            "corpus dimension {} does not match graph dimension {graph_dim}",
            corpus.dim()
        )));
    }
    fs::write(run_dir.join(CONFIG_SNAPSHOT_FILE), cfg.snapshot_toml()?)?;

    let file = PopulationFile::read(population_path)?;
    let query_text = query_flag
        .map(str::to_string)
        .or(file.query_text.clone())
        .ok_or_else(|| {
            Error::validation(
                "population file carries no query text; pass --query to supply one",
            )
        })?;
    let query = embed_query(&query_text, backends.embedder.as_ref())?;
    let initial = resolve_population(file, cfg, &backends)?;

    let mut rng = crate::seeds::substream(cfg.seed, "evolution");
    let outcome = run_evolution(
        initial,
        &query,
        &graph,
        &corpus,
        &backends,
        &cfg.evolution_config(),
        &mut rng,
    )?;

    for pop in &outcome.generations {
        PopulationFile::from_population(pop, Some(&query.text)).write(
            &run_dir.join(format!("population_gen_{}.json", pop.generation)),
        )?;
    }
    let mut csv = String::from("generation,mean_fitness,std_fitness,best_fitness\n");
    for s in &outcome.stats {
        writeln!(
            csv,
            "{},{},{},{}",
            s.generation, s.mean_fitness, s.std_fitness, s.best_fitness
        )
        .expect("writing to string cannot fail");
    }
    fs::write(run_dir.join(EVOLUTION_REWARDS_FILE), csv)?;

    let final_ideas: Vec<Idea> = outcome
        .final_population
        .members
        .iter()
        .map(|(i, _)| i.clone())
        .collect();
    let diversity = if final_ideas.len() >= 2 {
        diversity_score(
            &final_ideas,
            backends.embedder.as_ref(),
            cfg.report.diversity_threshold,
        )?
    } else {
        0.0
    };
    let diversity_doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "threshold": cfg.report.diversity_threshold,
        "embed_dim": corpus.dim(),
        "num_ideas": final_ideas.len(),
        "diversity_score": diversity,
    });
    fs::write(
        run_dir.join(DIVERSITY_FILE),
        serde_json::to_string_pretty(&diversity_doc)
            .map_err(|e| Error::validation(format!("serialize diversity: {e}")))?,
    )?;

    if let Some(diag) = &outcome.aborted {
        return Err(Error::backend(diag.clone()));
    }
    let std_trend_non_increasing =
        outcome.stats.last().unwrap().std_fitness <= outcome.stats[0].std_fitness;
    Ok(EvolveReport {
        run_dir: run_dir.to_path_buf(),
        generations_run: outcome.stats.len() - 1,
        initial_mean_fitness: outcome.stats[0].mean_fitness,
        final_mean_fitness: outcome.final_population.mean_fitness(),
        final_std_fitness: outcome.final_population.std_fitness(),
        std_trend_non_increasing,
        diversity,
        stats: outcome.stats,
    })
}

/// Turn a population file into a scored in-memory population. Missing
/// fitness records are scored through the reward backend; under mock
/// backends, ideas without genomes first receive one synthesized
/// deterministically from their text.
fn resolve_population(
    file: PopulationFile,
    cfg: &RunConfig,
    backends: &BackendSet,
) -> Result<Population> {
    let synthesizer = if cfg.backends.generator.kind == BackendKind::Mock {
        let landscape = mock::MockLandscape::seeded(
            backend_seed(cfg),
            cfg.backends.mock.genome_dim,
            cfg.backends.mock.landscape_radius,
        );
        Some(mock::MockGenerator::new(
            backend_seed(cfg),
            landscape,
            cfg.backends.mock.mutation_step,
            cfg.backends.mock.jitter,
        ))
    } else {
        None
    };
    let mut members = Vec::with_capacity(file.members.len());
    for mut member in file.members {
        if member.idea.genome.is_none() {
            if let Some(synth) = &synthesizer {
                member.idea.genome = Some(synth.synthesize_genome(&member.idea));
            }
        }
        let fitness = match member.fitness {
            Some(f) => f,
            None => {
                let resp = backends.reward.score_idea(&member.idea)?;
                FitnessRecord::from_response(&resp)?
            }
        };
        members.push((member.idea, fitness));
    }
    Ok(Population {
        members,
        generation: file.generation,
        size_target: file.size_target,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub run_dir: PathBuf,
    pub ingest: IngestReport,
    pub explore: ExploreReport,
    pub evolve: EvolveReport,
    /// Exploration iterations + evolution generations.
    pub combined_curve_len: usize,
}

/// Full pipeline: ingest, explore, evolve, chained with the shared seed, plus
/// a combined reward curve spanning both phases.
pub fn cmd_run(
    cfg: &RunConfig,
    query_text: &str,
    corpus_path: &Path,
    run_dir: &Path,
) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(run_dir)?;
    let ingest = cmd_ingest(cfg, corpus_path, run_dir)?;
    let explore = cmd_explore(
        cfg,
        query_text,
        &ingest.graph_path,
        Some(corpus_path),
        run_dir,
    )?;
    let evolve = cmd_evolve(
        cfg,
        &run_dir.join(INITIAL_POPULATION_FILE),
        &ingest.graph_path,
        Some(corpus_path),
        Some(query_text),
        run_dir,
    )?;

    // one curve across both phases: per-iteration rewards, then per-generation
    // mean fitness for each executed generation
    let exploration_rewards = read_rewards_csv(&run_dir.join(EXPLORATION_REWARDS_FILE))?;
    let mut csv = String::from("phase,step,value\n");
    for (i, r) in exploration_rewards.iter().enumerate() {
        writeln!(csv, "exploration,{},{}", i + 1, r).expect("writing to string cannot fail");
    }
    for s in evolve.stats.iter().skip(1) {
        writeln!(csv, "evolution,{},{}", s.generation, s.mean_fitness)
            .expect("writing to string cannot fail");
    }
    fs::write(run_dir.join(COMBINED_REWARDS_FILE), csv)?;

    let combined_curve_len = exploration_rewards.len() + (evolve.stats.len() - 1);
    Ok(RunReport {
        run_dir: run_dir.to_path_buf(),
        ingest,
        explore,
        evolve,
        combined_curve_len,
    })
}

fn read_rewards_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::validation(format!("missing artifact '{}': {e}", path.display()))
    })?;
    let mut rewards = Vec::new();
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let _iter = fields.next();
        let reward = fields
            .next()
            .and_then(|f| f.parse::<f64>().ok())
            .ok_or_else(|| Error::validation(format!("malformed rewards row: {line}")))?;
        rewards.push(reward);
    }
    Ok(rewards)
}

/// Embedding dimension for report-time recomputation: prefer the one
/// recorded in diversity.json, then the persisted graph, then a fixed
/// fallback for population-only directories.
fn report_embed_dim(run_dir: &Path) -> Result<usize> {
    let diversity_path = run_dir.join(DIVERSITY_FILE);
    if diversity_path.exists() {
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&diversity_path)?)
                .map_err(|e| Error::validation(format!("malformed diversity file: {e}")))?;
        if let Some(dim) = value.get("embed_dim").and_then(serde_json::Value::as_u64) {
            return Ok(dim as usize);
        }
    }
    let graph_path = run_dir.join(GRAPH_FILE);
    if graph_path.exists() {
        let (_, dim) = load_graph(&graph_path)?;
        return Ok(dim);
    }
    Ok(8)
}

/// Ranks file consumed by `report`: `n` generated ideas were ranked against
/// each target; `ranks` holds the target's 1-based rank per query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RanksFile {
    pub n: usize,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOutput {
    pub stats: Vec<GenerationStats>,
    pub diversity: f64,
    pub diversity_threshold: f64,
    pub insight: Option<f64>,
    pub report_txt: PathBuf,
    pub report_csv: PathBuf,
}

/// Recompute per-generation statistics and the diversity score from the
/// population files of a run directory; optionally add an insight score from
/// a ranks file. Emits plain-text and CSV reports.
pub fn cmd_report(run_dir: &Path, ranks_path: Option<&Path>) -> Result<ReportOutput> {
    let snapshot_path = run_dir.join(CONFIG_SNAPSHOT_FILE);
    if !snapshot_path.exists() {
        return Err(Error::validation(format!(
            "missing artifact '{}'",
            snapshot_path.display()
        )));
    }
    let cfg = RunConfig::load(&snapshot_path)?;

    let mut generations: Vec<(u32, PopulationFile)> = Vec::new();
    for entry in fs::read_dir(run_dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(t) = name
            .strip_prefix("population_gen_")
            .and_then(|s| s.strip_suffix(".json"))
            .and_then(|s| s.parse::<u32>().ok())
        {
            generations.push((t, PopulationFile::read(&entry.path())?));
        }
    }
    generations.sort_by_key(|(t, _)| *t);
    if generations.is_empty() {
        let initial = run_dir.join(INITIAL_POPULATION_FILE);
        if initial.exists() {
            generations.push((0, PopulationFile::read(&initial)?));
        } else {
            return Err(Error::validation(format!(
                "missing artifact '{}' (no population files found)",
                run_dir.join("population_gen_0.json").display()
            )));
        }
    }

    let mut stats = Vec::new();
    for (t, file) in &generations {
        let members: Vec<(Idea, FitnessRecord)> = file
            .members
            .iter()
            .map(|m| {
                m.fitness
                    .clone()
                    .map(|f| (m.idea.clone(), f))
                    .ok_or_else(|| {
                        Error::validation(format!(
                            "population_gen_{t} member '{}' has no fitness record",
                            m.idea.id
                        ))
                    })
            })
            .collect::<Result<_>>()?;
        let pop = Population {
            members,
            generation: *t,
            size_target: file.size_target,
        };
        stats.push(GenerationStats::of(&pop));
    }

    // diversity over the final generation's ideas, using the snapshot's
    // embedder configuration; the embedding dimension comes from the run's
    // own artifacts so the recomputation matches diversity.json
    let final_file = &generations.last().unwrap().1;
    let final_ideas: Vec<Idea> = final_file.members.iter().map(|m| m.idea.clone()).collect();
    let dim = report_embed_dim(run_dir)?;
    let backends = BackendSet::build(&cfg.backends, substream_seed(cfg.seed, "backends"), dim)?;
    let diversity = if final_ideas.len() >= 2 {
        diversity_score(
            &final_ideas,
            backends.embedder.as_ref(),
            cfg.report.diversity_threshold,
        )?
    } else {
        0.0
    };

    let insight = match ranks_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::validation(format!("missing artifact '{}': {e}", path.display()))
            })?;
            let ranks: RanksFile = serde_json::from_str(&text)
                .map_err(|e| Error::validation(format!("malformed ranks file: {e}")))?;
            Some(insight_score(&ranks.ranks, ranks.n)?)
        }
        None => None,
    };

    let mut txt = String::new();
    writeln!(txt, "generation  mean_fitness  std_fitness  best_fitness")
        .expect("writing to string cannot fail");
    for s in &stats {
        writeln!(
            txt,
            "{:>10}  {:>12.6}  {:>11.6}  {:>12.6}",
            s.generation, s.mean_fitness, s.std_fitness, s.best_fitness
        )
        .expect("writing to string cannot fail");
    }
    writeln!(txt, "\ndiversity_score: {diversity} (threshold {})", cfg.report.diversity_threshold)
        .expect("writing to string cannot fail");
    if let Some(i) = insight {
        writeln!(txt, "insight_score: {i}").expect("writing to string cannot fail");
    }
    let report_txt = run_dir.join("report.txt");
    fs::write(&report_txt, &txt)?;

    let mut csv = String::from("generation,mean_fitness,std_fitness,best_fitness\n");
    for s in &stats {
        writeln!(
            csv,
            "{},{},{},{}",
            s.generation, s.mean_fitness, s.std_fitness, s.best_fitness
        )
        .expect("writing to string cannot fail");
    }
    let report_csv = run_dir.join("report.csv");
    fs::write(&report_csv, &csv)?;

    Ok(ReportOutput {
        stats,
        diversity,
        diversity_threshold: cfg.report.diversity_threshold,
        insight,
        report_txt,
        report_csv,
    })
}
