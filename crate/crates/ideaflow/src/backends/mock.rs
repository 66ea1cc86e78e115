//! Deterministic mock backends.
//!
//! Every mock is a pure function of its inputs and the construction seed, so
//! repeated calls are identical and whole runs replay byte-for-byte. The
//! reward mock scores genomes against a seeded landscape whose optimum is
//! known, which lets convergence tests assert real improvements instead of
//! eyeballing LLM output.
//!
//! Declared genome contracts:
//! - initial generation: genome = seeded hash of (query, doc id sequence),
//!   mapped into the unit cube;
//! - crossover: genome = elementwise mean of the parent genomes;
//! - mutation: genome moves a fixed step toward the island centroid, plus
//!   seeded jitter.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PatentDoc, Query};
use crate::error::{Error, Result};
use crate::evolve::Idea;
use crate::seeds::stable_hash64;

use super::{EmbedderBackend, GeneratorBackend, IdeaDraft, RewardBackend, RewardResponse};

/// Smooth bounded reward surface with a known optimum:
/// `reward(g) = 1 - min(1, |g - target| / radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MockLandscape {
    pub target: Vec<f64>,
    pub radius: f64,
}

impl MockLandscape {
    /// Target drawn uniformly from `[0.25, 0.75]^dim` so random genomes in the
    /// unit cube leave headroom both below and above.
    pub fn seeded(seed: u64, dim: usize, radius: f64) -> Self {
        let mut rng = rng_for(&["landscape-target", &format!("{seed:016x}")]);
        let target = (0..dim).map(|_| rng.random_range(0.25..0.75)).collect();
        MockLandscape { target, radius }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn reward(&self, genome: &[f64]) -> Result<f64> {
        if genome.len() != self.target.len() {
            return Err(Error::backend(format!(
                "genome dimension {} does not match landscape dimension {}",
                genome.len(),
                self.target.len()
            )));
        }
        let dist = genome
            .iter()
            .zip(&self.target)
            .map(|(g, t)| (g - t) * (g - t))
            .sum::<f64>()
            .sqrt();
        Ok(1.0 - (dist / self.radius).min(1.0))
    }

    /// Novelty and feasibility on the 1-5 scale; both peak at the target, so
    /// the aggregated fitness of the optimum is exactly 1.0.
    pub fn scores(&self, genome: &[f64]) -> Result<(f64, f64)> {
        let r = self.reward(genome)?;
        Ok((1.0 + 4.0 * r, 1.0 + 4.0 * r))
    }
}

fn rng_for(parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stable_hash64(parts))
}

/// Seeded hash-derived unit vectors.
pub struct MockEmbedder {
    seed: u64,
    dim: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64, dim: usize) -> Self {
        MockEmbedder { seed, dim }
    }
}

impl EmbedderBackend for MockEmbedder {
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        if text.is_empty() {
            return Err(Error::backend("cannot embed empty text"));
        }
        let mut rng = rng_for(&["mock-embed", &format!("{:016x}", self.seed), text]);
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                return Ok(v.into_iter().map(|x| x / norm).collect());
            }
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Generator whose genome rules are simple enough to prove things about.
pub struct MockGenerator {
    seed: u64,
    landscape: MockLandscape,
    mutation_step: f64,
    jitter: f64,
}

impl MockGenerator {
    pub fn new(seed: u64, landscape: MockLandscape, mutation_step: f64, jitter: f64) -> Self {
        MockGenerator {
            seed,
            landscape,
            mutation_step,
            jitter,
        }
    }

    fn genome_from_hash(&self, parts: &[&str]) -> Vec<f64> {
        let mut all = vec!["mock-genome", ""];
        let seed_hex = format!("{:016x}", self.seed);
        all[1] = &seed_hex;
        all.extend_from_slice(parts);
        let mut rng = rng_for(&all);
        (0..self.landscape.dim())
            .map(|_| rng.random_range(0.0..1.0))
            .collect()
    }

    /// Deterministic landscape-space point a document maps to; island
    /// centroids are means of these points.
    pub fn landscape_point(&self, doc_id: &str) -> Vec<f64> {
        self.genome_from_hash(&["doc-point", doc_id])
    }

    /// Genome for an idea that arrived without one (externally supplied
    /// populations): hashed from its text sections.
    pub fn synthesize_genome(&self, idea: &Idea) -> Vec<f64> {
        self.genome_from_hash(&[
            "from-text",
            &idea.motivation,
            &idea.method,
            &idea.experimental_plan,
        ])
    }

    fn genome_of(&self, idea: &Idea) -> Vec<f64> {
        idea.genome
            .clone()
            .unwrap_or_else(|| self.synthesize_genome(idea))
    }
}

/// The declared mutation arithmetic: step toward the centroid plus jitter.
pub fn mutation_step_arithmetic(
    genome: &[f64],
    centroid: &[f64],
    step: f64,
    jitter: &[f64],
) -> Vec<f64> {
    genome
        .iter()
        .zip(centroid)
        .zip(jitter)
        .map(|((g, c), j)| g + step * (c - g) + j)
        .collect()
}

fn describe_docs(docs: &[&PatentDoc]) -> String {
    if docs.is_empty() {
        return "no literature".to_string();
    }
    docs.iter()
        .map(|d| d.id.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_genome(genome: &[f64]) -> String {
    genome
        .iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join("/")
}

impl GeneratorBackend for MockGenerator {
    fn generate_initial(&self, query: &Query, trajectory_docs: &[&PatentDoc]) -> Result<IdeaDraft> {
        if trajectory_docs.is_empty() {
            return Err(Error::backend("cannot generate from an empty trajectory"));
        }
        let mut parts: Vec<&str> = vec!["gen-init", &query.text];
        for d in trajectory_docs {
            parts.push(&d.id);
        }
        let genome = self.genome_from_hash(&parts);
        let ids = describe_docs(trajectory_docs);
        let g = fmt_genome(&genome);
        let mut draft = IdeaDraft::new(
            format!("Address '{}' by connecting findings from {ids}.", query.text),
            format!("Synthesize the technical elements of {ids} into one mechanism [{g}]."),
            format!("Validate against baselines drawn from {ids} with ablations on each element."),
        );
        draft.genome = Some(genome);
        Ok(draft)
    }

    fn crossover_idea(
        &self,
        query: &Query,
        parent_a: &Idea,
        _score_a: f64,
        parent_b: &Idea,
        _score_b: f64,
        context_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft> {
        let ga = self.genome_of(parent_a);
        let gb = self.genome_of(parent_b);
        if ga.len() != gb.len() {
            return Err(Error::backend("parent genome dimensions differ"));
        }
        let genome: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| (a + b) / 2.0).collect();
        let ids = describe_docs(context_docs);
        let g = fmt_genome(&genome);
        let mut draft = IdeaDraft::new(
            format!(
                "Fuse the motivations of {} and {} for '{}'.",
                parent_a.id, parent_b.id, query.text
            ),
            format!(
                "Recombine the core features of {} and {} guided by {ids} [{g}].",
                parent_a.id, parent_b.id
            ),
            format!(
                "Compare the fused design against both parent designs on shared benchmarks ({ids})."
            ),
        );
        draft.genome = Some(genome);
        Ok(draft)
    }

    fn mutate_idea(
        &self,
        query: &Query,
        idea: &Idea,
        _score: f64,
        island_docs: &[&PatentDoc],
    ) -> Result<IdeaDraft> {
        if island_docs.is_empty() {
            let mut draft = IdeaDraft::new(
                idea.motivation.clone(),
                idea.method.clone(),
                idea.experimental_plan.clone(),
            );
            draft.genome = idea.genome.clone();
            draft.passthrough = true;
            return Ok(draft);
        }
        let genome = self.genome_of(idea);
        let mut centroid = vec![0.0; genome.len()];
        for d in island_docs {
            for (c, p) in centroid.iter_mut().zip(self.landscape_point(&d.id)) {
                *c += p;
            }
        }
        for c in &mut centroid {
            *c /= island_docs.len() as f64;
        }
        let mut parts: Vec<&str> = vec!["mutate-jitter", &idea.id];
        for d in island_docs {
            parts.push(&d.id);
        }
        let mut jrng = {
            let mut all = vec!["mock-genome", ""];
            let seed_hex = format!("{:016x}", self.seed);
            all[1] = &seed_hex;
            all.extend_from_slice(&parts);
            rng_for(&all)
        };
        let jitter: Vec<f64> = (0..genome.len())
            .map(|_| jrng.random_range(-self.jitter..=self.jitter))
            .collect();
        let mutated = mutation_step_arithmetic(&genome, &centroid, self.mutation_step, &jitter);
        let ids = describe_docs(island_docs);
        let g = fmt_genome(&mutated);
        let mut draft = IdeaDraft::new(
            format!(
                "Extend '{}' with out-of-domain perspectives from {ids}.",
                query.text
            ),
            format!("Shift the mechanism of {} toward concepts found in {ids} [{g}].", idea.id),
            format!("Re-run the original evaluation plus transfer tests against {ids}."),
        );
        draft.genome = Some(mutated);
        Ok(draft)
    }
}

/// Scores genomes against the landscape.
pub struct MockRewardModel {
    landscape: MockLandscape,
}

impl MockRewardModel {
    pub fn new(landscape: MockLandscape) -> Self {
        MockRewardModel { landscape }
    }

    pub fn landscape(&self) -> &MockLandscape {
        &self.landscape
    }
}

impl RewardBackend for MockRewardModel {
    fn score_idea(&self, idea: &Idea) -> Result<RewardResponse> {
        let genome = idea
            .genome
            .as_ref()
            .ok_or_else(|| Error::backend(format!("idea '{}' carries no genome to score", idea.id)))?;
        let (novelty, feasibility) = self.landscape.scores(genome)?;
        Ok(RewardResponse {
            novelty_score: novelty,
            feasibility_score: feasibility,
            raw_text: format!(
                "{{\"novelty_score\": {novelty}, \"feasibility_score\": {feasibility}}}"
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{Idea, Operator, Provenance};

    fn idea_with_genome(id: &str, genome: Vec<f64>) -> Idea {
        Idea {
            id: id.to_string(),
            motivation: "m".into(),
            method: "x".into(),
            experimental_plan: "p".into(),
            auxiliary: None,
            genome: Some(genome),
            provenance: Provenance {
                operator: Operator::Initial,
                parent_ids: vec![],
                trajectory_ids: vec![],
                generation: 0,
            },
        }
    }

    fn query() -> Query {
        Query {
            text: "test topic".into(),
            embedding: vec![1.0, 0.0],
        }
    }

    fn docs2() -> Vec<PatentDoc> {
        vec![
            crate::litgraph::tests::doc("p1", &["f"], vec![1.0, 0.0], &[]),
            crate::litgraph::tests::doc("p2", &["g"], vec![0.0, 1.0], &[]),
        ]
    }

    #[test]
    fn embedder_is_deterministic_unit_and_collision_free() {
        let e = MockEmbedder::new(5, 16);
        let a = e.embed_text("alpha").unwrap();
        assert_eq!(a, e.embed_text("alpha").unwrap());
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);

        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            let v = e.embed_text(&format!("fixture string {i}")).unwrap();
            let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            assert!(seen.insert(key), "collision at fixture string {i}");
        }
    }

    #[test]
    fn generate_initial_is_deterministic_and_trajectory_sensitive() {
        let gen = MockGenerator::new(11, MockLandscape::seeded(11, 2, 1.0), 0.5, 0.0);
        let docs = docs2();
        let refs: Vec<&PatentDoc> = docs.iter().collect();
        let d1 = gen.generate_initial(&query(), &refs).unwrap();
        let d2 = gen.generate_initial(&query(), &refs).unwrap();
        assert_eq!(d1, d2);
        let swapped: Vec<&PatentDoc> = docs.iter().rev().collect();
        let d3 = gen.generate_initial(&query(), &swapped).unwrap();
        assert_ne!(d1.genome, d3.genome);
        let shorter = gen.generate_initial(&query(), &refs[..1]).unwrap();
        assert_ne!(d1.genome, shorter.genome);
        assert!(!d1.motivation.is_empty() && !d1.method.is_empty());
        assert!(gen.generate_initial(&query(), &[]).is_err());
    }

    #[test]
    fn crossover_genome_is_parent_mean() {
        let gen = MockGenerator::new(11, MockLandscape::seeded(11, 2, 1.0), 0.5, 0.0);
        let a = idea_with_genome("a", vec![0.0, 0.0]);
        let b = idea_with_genome("b", vec![2.0, 2.0]);
        let draft = gen.crossover_idea(&query(), &a, 0.5, &b, 0.5, &[]).unwrap();
        assert_eq!(draft.genome.unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn mutation_arithmetic_and_empty_island_passthrough() {
        let zero = [0.0, 0.0];
        let centroid = [2.0, 2.0];
        let moved = mutation_step_arithmetic(&zero, &centroid, 0.5, &[0.0, 0.0]);
        assert_eq!(moved, vec![1.0, 1.0]);

        let gen = MockGenerator::new(11, MockLandscape::seeded(11, 2, 1.0), 0.5, 0.0);
        let a = idea_with_genome("a", vec![0.25, 0.25]);
        let draft = gen.mutate_idea(&query(), &a, 0.5, &[]).unwrap();
        assert!(draft.passthrough);
        assert_eq!(draft.genome, a.genome);
        assert_eq!(draft.method, a.method);
    }

    #[test]
    fn mutation_with_zero_jitter_moves_toward_island_centroid() {
        let gen = MockGenerator::new(11, MockLandscape::seeded(11, 2, 1.0), 0.5, 0.0);
        let docs = docs2();
        let refs: Vec<&PatentDoc> = docs.iter().collect();
        let mut centroid = vec![0.0, 0.0];
        for d in &refs {
            for (c, p) in centroid.iter_mut().zip(gen.landscape_point(&d.id)) {
                *c += p;
            }
        }
        for c in &mut centroid {
            *c /= refs.len() as f64;
        }
        let start = vec![0.0, 0.0];
        let a = idea_with_genome("a", start.clone());
        let draft = gen.mutate_idea(&query(), &a, 0.5, &refs).unwrap();
        let expected = mutation_step_arithmetic(&start, &centroid, 0.5, &[0.0, 0.0]);
        assert_eq!(draft.genome.unwrap(), expected);
    }

    #[test]
    fn reward_peaks_at_landscape_target() {
        let landscape = MockLandscape::seeded(3, 2, 1.0);
        let reward = MockRewardModel::new(landscape.clone());
        let at_target = idea_with_genome("t", landscape.target.clone());
        let resp = reward.score_idea(&at_target).unwrap();
        assert_eq!(resp.novelty_score, 5.0);
        assert_eq!(resp.feasibility_score, 5.0);
        // consistency with fitness aggregation: the optimum scores exactly 1.0
        let fitness = crate::evolve::aggregate_fitness(resp.novelty_score, resp.feasibility_score)
            .unwrap();
        assert_eq!(fitness, 1.0);

        let off = idea_with_genome("o", vec![landscape.target[0] + 0.3, landscape.target[1]]);
        let resp2 = reward.score_idea(&off).unwrap();
        assert!(resp2.novelty_score < 5.0 && resp2.novelty_score >= 1.0);

        let no_genome = Idea {
            genome: None,
            ..idea_with_genome("n", vec![])
        };
        assert!(reward.score_idea(&no_genome).is_err());
    }
}
