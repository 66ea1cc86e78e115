//! Idea-evolution engine over a literature graph.
//!
//! The crate couples two stages behind pluggable backends:
//!
//! 1. **Exploration** — flow-guided Monte Carlo tree search over a patent
//!    literature graph. Each trajectory of documents conditions one generated
//!    idea; the idea's reward reshapes the edge flow so promising literature
//!    regions are revisited without collapsing onto a single path.
//! 2. **Evolution** — the explored ideas seed a population that is refined by
//!    fitness-proportional parent selection, crossover, isolation-island
//!    mutation, and tournament survival.
//!
//! Generator, reward, and embedder backends are trait objects with
//! deterministic mock implementations, so the whole pipeline runs offline and
//! reproducibly from a single seed. See the `examples/` directory for runnable
//! walkthroughs of each capability.

pub mod backends;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evolve;
pub mod flowmcts;
pub mod litgraph;
pub mod pipeline;
pub mod seeds;

pub use config::RunConfig;
pub use corpus::{cosine_similarity, embed_query, load_corpus, Corpus, PatentDoc, Query};
pub use error::{Error, Result};
pub use evolve::{
    aggregate_fitness, diversity_score, insight_score, run_evolution, FitnessRecord, Idea,
    Population,
};
pub use flowmcts::{run_exploration, ExplorationOutcome, SearchTree};
pub use litgraph::{retrieve_topk, sample_isolation_island, EdgeReason, LiteratureGraph};
