//! Build a literature graph from the bundled corpus and inspect its
//! structure: edge criteria, neighborhoods, components, and top-k retrieval.
//!
//! Run with: cargo run --example build_graph

use std::path::Path;

use ideaflow::backends::mock::MockEmbedder;
use ideaflow::corpus::{embed_query, load_corpus, LoadOptions};
use ideaflow::litgraph::{retrieve_topk, LiteratureGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus_10.jsonl");
    let corpus = load_corpus(&corpus_path, &LoadOptions::default(), None)?;
    println!("loaded {} docs (dim {})", corpus.len(), corpus.dim());

    let graph = LiteratureGraph::build(&corpus, 0.80)?;
    println!(
        "graph: {} nodes, {} edges (similarity threshold 0.80)",
        graph.node_count(),
        graph.edge_count()
    );
    for (a, b, reasons) in graph.edges() {
        println!("  {a} -- {b}  {reasons:?}");
    }

    println!("\nconnected components:");
    for comp in graph.connected_components() {
        println!("  {comp:?}");
    }

    let embedder = MockEmbedder::new(42, corpus.dim());
    let query = embed_query("model predictive control for flying robots", &embedder)?;
    let top = retrieve_topk(&graph, &corpus, &query, 3)?;
    println!("\ntop-3 docs for the query: {top:?}");
    for id in &top {
        let doc = corpus.get(id).unwrap();
        println!("  [{id}] {}", doc.abstract_text);
    }
    Ok(())
}
