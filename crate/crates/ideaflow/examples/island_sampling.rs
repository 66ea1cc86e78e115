//! Isolation-island sampling: pick literature that is topologically distant
//! from a neighborhood, preferring disconnected components, then nodes at
//! least min_hops away, then the max-min-distance fallback.
//!
//! Run with: cargo run --example island_sampling

use std::collections::BTreeSet;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ideaflow::corpus::{load_corpus, LoadOptions};
use ideaflow::litgraph::{sample_isolation_island, LiteratureGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl");
    let corpus = load_corpus(&corpus_path, &LoadOptions::default(), None)?;
    let graph = LiteratureGraph::build(&corpus, 0.80)?;

    println!("components: {:?}", graph.connected_components());

    // neighborhood around the control-theory cluster
    let excluded: BTreeSet<String> = ["p03", "p04", "p05"].iter().map(|s| s.to_string()).collect();
    println!("\nexcluded neighborhood: {excluded:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let island = sample_isolation_island(&graph, &corpus, &excluded, 3, 3, &mut rng)?;
    println!(
        "island of 3 (min_hops 3): {:?}  distance: {:?}  shortfall: {}",
        island.docs, island.min_distance_achieved, island.shortfall
    );
    for id in &island.docs {
        println!("  [{id}] {}", corpus.get(id).unwrap().abstract_text);
    }

    // excluding one whole component forces the sampler into the other one
    let excluded2: BTreeSet<String> = ["p08", "p09", "p10"].iter().map(|s| s.to_string()).collect();
    let island2 = sample_isolation_island(&graph, &corpus, &excluded2, 4, 3, &mut rng)?;
    println!(
        "\nexcluding the chemistry component -> sample {:?} ({:?})",
        island2.docs, island2.min_distance_achieved
    );

    // excluding almost everything demonstrates the shortfall flag
    let mut excluded3: BTreeSet<String> =
        graph.node_ids().iter().take(8).cloned().collect();
    excluded3.remove("p07");
    let island3 = sample_isolation_island(&graph, &corpus, &excluded3, 5, 3, &mut rng)?;
    println!(
        "\nonly {} eligible nodes for a request of 5 -> {:?} shortfall: {}",
        island3.docs.len(),
        island3.docs,
        island3.shortfall
    );
    Ok(())
}
