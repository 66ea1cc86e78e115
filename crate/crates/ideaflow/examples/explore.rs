//! Flow-guided exploration over the literature graph with mock backends:
//! watch the reward buffer fill and the root flow probabilities drift toward
//! the branches that produced the better-scored ideas.
//!
//! Run with: cargo run --example explore

use std::path::Path;

use ideaflow::backends::mock::{MockEmbedder, MockGenerator, MockLandscape, MockRewardModel};
use ideaflow::backends::BackendSet;
use ideaflow::corpus::{embed_query, load_corpus, LoadOptions};
use ideaflow::flowmcts::{run_exploration, ExplorationConfig, SearchTree};
use ideaflow::litgraph::LiteratureGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl");
    let corpus = load_corpus(&corpus_path, &LoadOptions::default(), None)?;
    let graph = LiteratureGraph::build(&corpus, 0.80)?;

    let seed = 7;
    let landscape = MockLandscape::seeded(seed, 2, 1.0);
    let backends = BackendSet {
        generator: Box::new(MockGenerator::new(seed, landscape.clone(), 0.5, 0.02)),
        reward: Box::new(MockRewardModel::new(landscape)),
        embedder: Box::new(MockEmbedder::new(seed, corpus.dim())),
    };
    let query = embed_query(
        "fault-tolerant control loops for autonomous platforms",
        backends.embedder.as_ref(),
    )?;

    let cfg = ExplorationConfig {
        k: 4,
        n_min: 8,
        n_max: 30,
        ..Default::default()
    };
    println!("exploring with k={}, n_min={}, n_max={}", cfg.k, cfg.n_min, cfg.n_max);

    let out = run_exploration(&query, &graph, &corpus, &backends, &cfg)?;
    println!("\niteration  reward   trajectory");
    for record in &out.trajectories {
        println!(
            "{:>9}  {:>6.4}   {}",
            record.iteration,
            record.reward.unwrap_or(f64::NAN),
            record.doc_ids.join(" -> ")
        );
    }

    println!("\nroot children after exploration:");
    let root = &out.tree.nodes[SearchTree::ROOT];
    for &ek in &root.children {
        let edge = &out.tree.edges[ek];
        let child = &out.tree.nodes[edge.child];
        println!(
            "  {:<4}  P_f={:.4}  Q={:.4}  visits={}",
            child.doc_id().unwrap_or("?"),
            edge.flow_prob,
            edge.q_value,
            edge.visit_count
        );
    }
    println!(
        "\ngenerated {} ideas over {} iterations",
        out.population.len(),
        out.rewards.len()
    );
    Ok(())
}
