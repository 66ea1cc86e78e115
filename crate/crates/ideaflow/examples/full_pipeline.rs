//! The whole pipeline through the library API: ingest a corpus, explore it
//! into an initial idea population, evolve that population, and inspect the
//! run directory artifacts.
//!
//! Run with: cargo run --example full_pipeline

use std::path::Path;

use ideaflow::config::RunConfig;
use ideaflow::pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl");
    let out = std::env::temp_dir().join("ideaflow-example-run");
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }

    let mut cfg = RunConfig {
        seed: 2024,
        ..Default::default()
    };
    cfg.exploration.k = 3;
    cfg.exploration.n_min = 6;
    cfg.exploration.n_max = 15;
    cfg.evolution.population_size = 6;
    cfg.evolution.t_max = 8;

    let report = pipeline::cmd_run(&cfg, "adaptive control for robot swarms", &corpus, &out)?;
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
    println!("diversity of the final population: {:.4}", report.evolve.diversity);

    println!("\nartifacts:");
    let mut names: Vec<String> = std::fs::read_dir(&out)?
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }

    println!("\ncombined reward curve:");
    let curve = std::fs::read_to_string(out.join("combined_rewards.csv"))?;
    print!("{curve}");
    Ok(())
}
