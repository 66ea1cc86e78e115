//! Command-line front end over the pipeline library.
//!
//! Exit codes: 0 success, 2 validation error, 3 backend failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ideaflow::backends::BackendKind;
use ideaflow::config::RunConfig;
use ideaflow::error::Result;
use ideaflow::pipeline;

#[derive(Parser)]
#[command(
    name = "ideaflow",
    about = "Idea evolution over a literature graph: flow-guided exploration plus evolutionary refinement"
)]
struct Cli {
    /// Configuration file (TOML); flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for run artifacts.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Force every backend role to this kind.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendFlag>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendFlag {
    Mock,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Build and persist the literature graph from a corpus file.
    Ingest {
        /// Line-delimited corpus file.
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Flow-guided literature exploration producing the initial population.
    Explore {
        /// Research topic to explore.
        #[arg(long)]
        query: String,
        /// Persisted graph file from `ingest`.
        #[arg(long)]
        graph: PathBuf,
        /// Corpus file (defaults to corpus_path from the config).
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Evolve a population file (exploration output or external ideas).
    Evolve {
        /// Population file to evolve.
        #[arg(long)]
        population: PathBuf,
        /// Persisted graph file from `ingest`.
        #[arg(long)]
        graph: PathBuf,
        /// Corpus file (defaults to corpus_path from the config).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Query text when the population file does not carry one.
        #[arg(long)]
        query: Option<String>,
    },
    /// Full pipeline: ingest, explore, evolve, with a combined reward curve.
    Run {
        #[arg(long)]
        query: String,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Recompute per-generation stats, diversity, and optional insight score.
    Report {
        /// Run directory produced by explore/evolve/run.
        #[arg(long)]
        run: PathBuf,
        /// JSON file {"n": ..., "ranks": [...]} for the insight score.
        #[arg(long)]
        ranks: Option<PathBuf>,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(kind) = cli.backend {
        cfg.backends.set_kind(match kind {
            BackendFlag::Mock => BackendKind::Mock,
            BackendFlag::Remote => BackendKind::Remote,
        });
    }
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("ideaflow-out"))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let out = output_dir(&cfg);
    match &cli.command {
        Command::Ingest { corpus } => {
            let report = pipeline::cmd_ingest(&cfg, corpus, &out)?;
            println!("graph written to {}", report.graph_path.display());
            println!("nodes: {}", report.nodes);
            println!("edges: {}", report.edges);
            for (reason, count) in &report.reason_counts {
                println!("  {reason}: {count}");
            }
            if report.dangling_citations > 0 {
                println!("dangling citations dropped: {}", report.dangling_citations);
            }
        }
        Command::Explore { query, graph, corpus } => {
            let report =
                pipeline::cmd_explore(&cfg, query, graph, corpus.as_deref(), &out)?;
            println!("run directory: {}", report.run_dir.display());
            println!("iterations: {}", report.iterations);
            println!("ideas generated: {}", report.population_size);
            println!("mean reward: {:.4}", report.mean_reward);
            println!("final reward variance: {:.6}", report.final_variance);
        }
        Command::Evolve {
            population,
            graph,
            corpus,
            query,
        } => {
            let report = pipeline::cmd_evolve(
                &cfg,
                population,
                graph,
                corpus.as_deref(),
                query.as_deref(),
                &out,
            )?;
            println!("run directory: {}", report.run_dir.display());
            println!("generations run: {}", report.generations_run);
            println!(
                "mean fitness: {:.4} -> {:.4}",
                report.initial_mean_fitness, report.final_mean_fitness
            );
            println!("final fitness std: {:.4}", report.final_std_fitness);
            println!(
                "fitness std trend non-increasing: {}",
                report.std_trend_non_increasing
            );
            println!("diversity: {:.4}", report.diversity);
        }
        Command::Run { query, corpus } => {
            let report = pipeline::cmd_run(&cfg, query, corpus, &out)?;
            println!("run directory: {}", report.run_dir.display());
            println!(
                "graph: {} nodes, {} edges",
                report.ingest.nodes, report.ingest.edges
            );
            println!(
                "exploration: {} iterations, mean reward {:.4}",
                report.explore.iterations, report.explore.mean_reward
            );
            println!(
                "evolution: {} generations, mean fitness {:.4} -> {:.4}",
                report.evolve.generations_run,
                report.evolve.initial_mean_fitness,
                report.evolve.final_mean_fitness
            );
            println!("combined curve length: {}", report.combined_curve_len);
        }
        Command::Report { run, ranks } => {
            let report = pipeline::cmd_report(run, ranks.as_deref())?;
            let text = std::fs::read_to_string(&report.report_txt)?;
            print!("{text}");
            println!("reports written: {}, {}", report.report_txt.display(), report.report_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
