//! Test-time idea evolution on the seeded mock landscape: crossover averages
//! parent genomes, mutation steps toward isolation-island centroids, and
//! tournament selection keeps the population climbing toward the optimum.
//!
//! Run with: cargo run --example evolve_ideas

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ideaflow::backends::mock::{MockEmbedder, MockGenerator, MockLandscape, MockRewardModel};
use ideaflow::backends::BackendSet;
use ideaflow::corpus::{load_corpus, LoadOptions, Query};
use ideaflow::evolve::{
    run_evolution, EvolutionConfig, FitnessRecord, Idea, Operator, Population, Provenance,
};
use ideaflow::litgraph::LiteratureGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl");
    let corpus = load_corpus(&corpus_path, &LoadOptions::default(), None)?;
    let graph = LiteratureGraph::build(&corpus, 0.80)?;

    let seed = 3;
    let landscape = MockLandscape::seeded(seed, 2, 1.0);
    println!(
        "landscape target {:?} (fitness 1.0 exactly there)",
        landscape.target
    );
    let backends = BackendSet {
        generator: Box::new(MockGenerator::new(seed, landscape.clone(), 0.5, 0.02)),
        reward: Box::new(MockRewardModel::new(landscape.clone())),
        embedder: Box::new(MockEmbedder::new(seed, corpus.dim())),
    };
    let query = Query {
        text: "climbing the mock landscape".into(),
        embedding: vec![1.0, 0.0, 0.0, 0.0],
    };

    // initial population: random genomes in the unit square
    let mut grng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<(Idea, FitnessRecord)> = (0..8)
        .map(|i| {
            let genome: Vec<f64> = (0..2).map(|_| grng.random_range(0.0..1.0)).collect();
            let (n, f) = landscape.scores(&genome).unwrap();
            let idea = Idea {
                id: format!("init-{i}"),
                motivation: format!("starting point {i}"),
                method: format!("genome {genome:?}"),
                experimental_plan: "evaluate on the landscape".into(),
                auxiliary: None,
                genome: Some(genome),
                provenance: Provenance {
                    operator: Operator::Initial,
                    parent_ids: vec![],
                    trajectory_ids: vec![],
                    generation: 0,
                },
            };
            (idea, FitnessRecord::new(n, f).unwrap())
        })
        .collect();
    let initial = Population {
        members,
        generation: 0,
        size_target: 8,
    };

    let cfg = EvolutionConfig {
        population_size: 8,
        offspring_count: Some(8),
        rho: 0.3,
        t_max: 20,
        std_threshold: 0.005,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = run_evolution(initial, &query, &graph, &corpus, &backends, &cfg, &mut rng)?;

    println!("\ngeneration  mean     std      best");
    for s in &out.stats {
        println!(
            "{:>10}  {:.4}  {:.4}  {:.4}",
            s.generation, s.mean_fitness, s.std_fitness, s.best_fitness
        );
    }
    println!(
        "\nmutations applied: {}, ideas created in total: {}",
        out.mutation_count,
        out.all_ideas.len()
    );
    let (best, fit) = out
        .final_population
        .members
        .iter()
        .max_by(|a, b| a.1.fitness.partial_cmp(&b.1.fitness).unwrap())
        .unwrap();
    println!(
        "best final idea '{}' (fitness {:.4}), genome {:?}",
        best.id,
        fit.fitness,
        best.genome.as_ref().unwrap()
    );
    Ok(())
}
