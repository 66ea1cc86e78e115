//! Run configuration: one TOML file plus flag overrides (flags win).
//!
//! Every knob has a default, and a resolved snapshot with all defaults
//! materialized is written into each run directory so the run can be
//! reproduced bit-for-bit from that snapshot under mock backends.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::BackendsConfig;
use crate::corpus::EmbeddingMode;
use crate::error::{Error, Result};
use crate::evolve::EvolutionConfig;
use crate::flowmcts::ExplorationConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSection {
    /// Strict lower bound for similarity edges.
    pub sim_threshold: f64,
    /// Rescale off-norm embeddings at load instead of rejecting them.
    pub normalize_embeddings: bool,
    pub embedding_mode: EmbeddingMode,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            sim_threshold: 0.80,
            normalize_embeddings: false,
            embedding_mode: EmbeddingMode::FromFile,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionSection {
    pub population_size: usize,
    /// Offspring per generation; defaults to population_size.
    pub offspring_count: Option<usize>,
    pub rho: f64,
    /// Tournament subset size; defaults to max(2, ceil(|pool| / 4)).
    pub subset_size: Option<usize>,
    pub t_max: usize,
    pub std_threshold: f64,
    pub delta_reward_threshold: Option<f64>,
    pub max_backend_retries: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        EvolutionSection {
            population_size: d.population_size,
            offspring_count: d.offspring_count,
            rho: d.rho,
            subset_size: d.subset_size,
            t_max: d.t_max,
            std_threshold: d.std_threshold,
            delta_reward_threshold: d.delta_reward_threshold,
            max_backend_retries: d.max_backend_retries,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IslandSection {
    pub size: usize,
    pub min_hops: usize,
}

impl Default for IslandSection {
    fn default() -> Self {
        IslandSection {
            size: 3,
            min_hops: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportSection {
    /// Cosine threshold above which two ideas count as similar.
    pub diversity_threshold: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            diversity_threshold: 0.65,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub graph: GraphSection,
    pub exploration: ExplorationConfig,
    pub evolution: EvolutionSection,
    pub island: IslandSection,
    pub report: ReportSection,
    pub backends: BackendsConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::validation(format!("cannot read config '{}': {e}", path.display()))
        })?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::validation(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.exploration.validate()?;
        self.evolution_config().validate()?;
        self.backends.validate()?;
        if !(self.graph.sim_threshold > 0.0 && self.graph.sim_threshold < 1.0) {
            return Err(Error::validation(format!(
                "graph.sim_threshold must lie in (0, 1), got {}",
                self.graph.sim_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.report.diversity_threshold) {
            return Err(Error::validation(format!(
                "report.diversity_threshold must lie in [0, 1], got {}",
                self.report.diversity_threshold
            )));
        }
        if self.island.size == 0 {
            return Err(Error::validation("island.size must be at least 1"));
        }
        Ok(())
    }

    /// Engine-facing evolution config with the island section folded in.
    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.evolution.population_size,
            offspring_count: self.evolution.offspring_count,
            rho: self.evolution.rho,
            subset_size: self.evolution.subset_size,
            t_max: self.evolution.t_max,
            std_threshold: self.evolution.std_threshold,
            delta_reward_threshold: self.evolution.delta_reward_threshold,
            island_size: self.island.size,
            island_min_hops: self.island.min_hops,
            max_backend_retries: self.evolution.max_backend_retries,
        }
    }

    /// Serialized snapshot with all defaults materialized. The output
    /// directory is runtime context and is omitted so two runs of the same
    /// configuration produce byte-identical run directories.
    pub fn snapshot_toml(&self) -> Result<String> {
        let mut snap = self.clone();
        snap.output_dir = None;
        toml::to_string(&snap).map_err(|e| Error::validation(format!("serialize config: {e}")))
    }
}
