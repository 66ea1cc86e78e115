//! Pluggable generator / reward / embedder backends.
//!
//! The engine only sees the three traits below. `mock` provides pure,
//! seed-deterministic implementations that make every algorithmic property
//! testable offline; `remote` speaks the generic chat-completion wire format.

pub mod mock;
pub mod remote;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{PatentDoc, Query};
use crate::error::{Error, Result};
use crate::evolve::Idea;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

/// Configuration for one backend role.
///
/// Remote backends require `base_url` and `model_name`; the API key is read
/// from the environment variable named by `api_key_env`, never from the
/// config file itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub model_name: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub temperature: f64,
    /// Dotted path to the generated text inside the response document.
    pub extraction_path: String,
    /// Upper bound on concurrent in-flight remote requests.
    pub max_in_flight: usize,
    /// When set, every request/response is appended here with secrets redacted.
    pub log_path: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            base_url: None,
            model_name: None,
            api_key_env: None,
            timeout_secs: 30.0,
            max_retries: 3,
            backoff_base_secs: 1.0,
            temperature: 0.7,
            extraction_path: "choices.0.message.content".to_string(),
            max_in_flight: 4,
            log_path: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self, role: &str) -> Result<()> {
        if self.kind == BackendKind::Remote {
            if self.base_url.is_none() {
                return Err(Error::validation(format!(
                    "{role} backend is remote but base_url is missing"
                )));
            }
            if self.model_name.is_none() {
                return Err(Error::validation(format!(
                    "{role} backend is remote but model_name is missing"
                )));
            }
        }
        if self.max_retries == 0 {
            return Err(Error::validation(format!(
                "{role} backend max_retries must be at least 1"
            )));
        }
        if self.timeout_secs <= 0.0 || self.backoff_base_secs < 0.0 {
            return Err(Error::validation(format!(
                "{role} backend timeout/backoff out of range"
            )));
        }
        Ok(())
    }
}

/// Scores returned by the reward backend, on the 1-5 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub novelty_score: f64,
    pub feasibility_score: f64,
    /// Original backend payload, kept for auditing and error reports.
    pub raw_text: String,
}

/// Backend output before the engine assigns an id and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct IdeaDraft {
    pub motivation: String,
    pub method: String,
    pub experimental_plan: String,
    pub auxiliary: Option<String>,
    pub genome: Option<Vec<f64>>,
    /// Mutation with no island context passes the input through unchanged.
    pub passthrough: bool,
    /// Set when remote section markers were missing and the text degraded to
    /// whole-text-as-method.
    pub parse_warning: bool,
}

impl IdeaDraft {
    pub fn new(motivation: String, method: String, experimental_plan: String) -> Self {
        IdeaDraft {
            motivation,
            method,
            experimental_plan,
            auxiliary: None,
            genome: None,
            passthrough: false,
            parse_warning: false,
        }
    }
}

/// Produces idea text (and, for mocks, a genome) from literature context.
pub trait GeneratorBackend: Send + Sync {
    fn generate_initial(&self, query: &Query, trajectory_docs: &[&PatentDoc]) -> Result<IdeaDraft>;

    fn crossover_idea(
        &self,
        query: &Query,
        parent_a: &Idea,
        score_a: f64,
        parent_b: &Idea,
        score_b: f64,
        context_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft>;

    fn mutate_idea(
        &self,
        query: &Query,
        idea: &Idea,
        score: f64,
        island_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft>;
}

/// Scores an idea on novelty and feasibility (1-5 each).
pub trait RewardBackend: Send + Sync {
    fn score_idea(&self, idea: &Idea) -> Result<RewardResponse>;
}

/// Maps text to a unit vector of a fixed dimension.
pub trait EmbedderBackend: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>>;
    fn dim(&self) -> usize;
}

/// The three backend handles an engine run needs.
pub struct BackendSet {
    pub generator: Box<dyn GeneratorBackend>,
    pub reward: Box<dyn RewardBackend>,
    pub embedder: Box<dyn EmbedderBackend>,
}

/// Mock-specific knobs (landscape shape and mutation dynamics).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSettings {
    pub genome_dim: usize,
    pub landscape_radius: f64,
    pub mutation_step: f64,
    pub jitter: f64,
}

impl Default for MockSettings {
    fn default() -> Self {
        MockSettings {
            genome_dim: 2,
            landscape_radius: 1.0,
            mutation_step: 0.5,
            jitter: 0.02,
        }
    }
}

/// Per-role backend configuration plus the shared mock settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendsConfig {
    pub generator: BackendConfig,
    pub reward: BackendConfig,
    pub embedder: BackendConfig,
    pub mock: MockSettings,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        BackendsConfig {
            generator: BackendConfig::default(),
            // judging wants low-variance decoding
            reward: BackendConfig {
                temperature: 0.2,
                ..Default::default()
            },
            embedder: BackendConfig::default(),
            mock: MockSettings::default(),
        }
    }
}

impl BackendsConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate("generator")?;
        self.reward.validate("reward")?;
        self.embedder.validate("embedder")?;
        if self.mock.genome_dim == 0 {
            return Err(Error::validation("mock genome_dim must be at least 1"));
        }
        if self.mock.landscape_radius <= 0.0 {
            return Err(Error::validation("mock landscape_radius must be positive"));
        }
        Ok(())
    }

    /// Force every role to the given kind (the CLI `--backend` override).
    pub fn set_kind(&mut self, kind: BackendKind) {
        self.generator.kind = kind;
        self.reward.kind = kind;
        self.embedder.kind = kind;
    }
}

impl BackendSet {
    /// Instantiate backends for a run. `backend_seed` drives every mock;
    /// `embed_dim` is the corpus embedding dimension the embedder must match.
    pub fn build(cfg: &BackendsConfig, backend_seed: u64, embed_dim: usize) -> Result<BackendSet> {
        cfg.validate()?;
        let landscape =
            mock::MockLandscape::seeded(backend_seed, cfg.mock.genome_dim, cfg.mock.landscape_radius);

        let generator: Box<dyn GeneratorBackend> = match cfg.generator.kind {
            BackendKind::Mock => Box::new(mock::MockGenerator::new(
                backend_seed,
                landscape.clone(),
                cfg.mock.mutation_step,
                cfg.mock.jitter,
            )),
            BackendKind::Remote => Box::new(remote::RemoteGenerator::new(&cfg.generator)?),
        };
        let reward: Box<dyn RewardBackend> = match cfg.reward.kind {
            BackendKind::Mock => Box::new(mock::MockRewardModel::new(landscape.clone())),
            BackendKind::Remote => Box::new(remote::RemoteRewardModel::new(&cfg.reward)?),
        };
        let embedder: Box<dyn EmbedderBackend> = match cfg.embedder.kind {
            BackendKind::Mock => Box::new(mock::MockEmbedder::new(backend_seed, embed_dim)),
            BackendKind::Remote => Box::new(remote::RemoteEmbedder::new(&cfg.embedder, embed_dim)?),
        };
        Ok(BackendSet {
            generator,
            reward,
            embedder,
        })
    }
}
