//! Diversity and insight scoring of an idea set: the share of idea pairs
//! below the similarity threshold, and the rank-based insight score of a
//! reference idea against generated ones.
//!
//! Run with: cargo run --example diversity_report

use ideaflow::backends::mock::MockEmbedder;
use ideaflow::evolve::{diversity_score, insight_score, Idea, Operator, Provenance};

fn idea(id: &str, motivation: &str, method: &str) -> Idea {
    Idea {
        id: id.to_string(),
        motivation: motivation.to_string(),
        method: method.to_string(),
        experimental_plan: "compare against the strongest published baseline".into(),
        auxiliary: None,
        genome: None,
        provenance: Provenance {
            operator: Operator::Initial,
            parent_ids: vec![],
            trajectory_ids: vec![],
            generation: 0,
        },
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let embedder = MockEmbedder::new(5, 32);

    let varied = vec![
        idea("v1", "reduce actuator wear", "predictive duty cycling"),
        idea("v2", "speed up trajectory replanning", "cached motion primitives"),
        idea("v3", "harden perception to glare", "polarization-aware fusion"),
        idea("v4", "cut fleet energy use", "load-aware task routing"),
    ];
    let d = diversity_score(&varied, &embedder, 0.65)?;
    println!("diversity of 4 distinct ideas: {d:.4}");

    let mut repetitive = varied.clone();
    repetitive[1] = idea("v2", "reduce actuator wear", "predictive duty cycling");
    repetitive[3] = idea("v4", "reduce actuator wear", "predictive duty cycling");
    let d2 = diversity_score(&repetitive, &embedder, 0.65)?;
    println!("diversity after duplicating one idea twice: {d2:.4}");

    // a reference idea ranked against n = 4 generated ideas per query:
    // rank 1 means the reference beat everything, rank n+1 = 5 means every
    // generated idea beat the reference
    let ranks = [3, 5, 1, 4];
    let score = insight_score(&ranks, 4)?;
    println!("\ninsight score for target ranks {ranks:?} (n = 4): {score:.4}");
    println!("  0.0 = the reference always wins, 1.0 = generated ideas always win");
    Ok(())
}
