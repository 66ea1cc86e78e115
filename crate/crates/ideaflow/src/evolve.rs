//! Test-time idea evolution: parent selection, crossover, isolation-island
//! mutation, reward-model fitness, and tournament survival.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backends::{BackendSet, GeneratorBackend, IdeaDraft, RewardResponse};
use crate::corpus::{Corpus, PatentDoc, Query};
use crate::error::{Error, Result};
use crate::litgraph::{sample_isolation_island, LiteratureGraph};

/// How an idea came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Initial,
    Crossover,
    Mutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub operator: Operator,
    pub parent_ids: Vec<String>,
    /// Literature ids conditioning this idea (trajectory docs for initial
    /// ideas, the union of parent contexts for offspring).
    pub trajectory_ids: Vec<String>,
    pub generation: u32,
}

/// A structured idea: motivation, method, and experimental plan, plus an
/// optional mock genome used by the deterministic backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Idea {
    pub id: String,
    pub motivation: String,
    pub method: String,
    pub experimental_plan: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genome: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl Idea {
    /// Attach an id and provenance to a backend draft, enforcing the
    /// section and parent-count invariants.
    pub fn from_draft(
        draft: IdeaDraft,
        id: String,
        operator: Operator,
        parent_ids: Vec<String>,
        trajectory_ids: Vec<String>,
        generation: u32,
    ) -> Result<Idea> {
        let expected_parents = match operator {
            Operator::Initial => 0,
            Operator::Crossover => 2,
            Operator::Mutation => 1,
        };
        if parent_ids.len() != expected_parents {
            return Err(Error::validation(format!(
                "{operator:?} idea '{id}' must have {expected_parents} parents, got {}",
                parent_ids.len()
            )));
        }
        if draft.motivation.is_empty()
            || draft.method.is_empty()
            || draft.experimental_plan.is_empty()
        {
            return Err(Error::backend(format!(
                "backend returned an empty section for idea '{id}'"
            )));
        }
        Ok(Idea {
            id,
            motivation: draft.motivation,
            method: draft.method,
            experimental_plan: draft.experimental_plan,
            auxiliary: draft.auxiliary,
            genome: draft.genome,
            provenance: Provenance {
                operator,
                parent_ids,
                trajectory_ids,
                generation,
            },
        })
    }

    /// Concatenated text sections, the payload sent to embedders and judges.
    pub fn full_text(&self) -> String {
        format!(
            "{}\n{}\n{}",
            self.motivation, self.method, self.experimental_plan
        )
    }
}

/// Novelty and feasibility on the 1-5 scale plus the aggregated fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub novelty: f64,
    pub feasibility: f64,
    pub fitness: f64,
}

impl FitnessRecord {
    pub fn new(novelty: f64, feasibility: f64) -> Result<Self> {
        Ok(FitnessRecord {
            novelty,
            feasibility,
            fitness: aggregate_fitness(novelty, feasibility)?,
        })
    }

    pub fn from_response(resp: &RewardResponse) -> Result<Self> {
        FitnessRecord::new(resp.novelty_score, resp.feasibility_score)
    }
}

/// Mean of the two component scores min-max rescaled from [1, 5] onto [0, 1].
pub fn aggregate_fitness(novelty: f64, feasibility: f64) -> Result<f64> {
    for (name, v) in [("novelty", novelty), ("feasibility", feasibility)] {
        if !(1.0..=5.0).contains(&v) || !v.is_finite() {
            return Err(Error::validation(format!(
                "{name} score {v} outside the 1-5 scale"
            )));
        }
    }
    Ok(((novelty - 1.0) / 4.0 + (feasibility - 1.0) / 4.0) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<(Idea, FitnessRecord)>,
    pub generation: u32,
    pub size_target: usize,
}

impl Population {
    pub fn mean_fitness(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        self.members.iter().map(|(_, f)| f.fitness).sum::<f64>() / self.members.len() as f64
    }

    /// Population (not sample) standard deviation of the fitness values.
    pub fn std_fitness(&self) -> f64 {
        let n = self.members.len();
        if n == 0 {
            return 0.0;
        }
        let mean = self.mean_fitness();
        let var = self
            .members
            .iter()
            .map(|(_, f)| (f.fitness - mean) * (f.fitness - mean))
            .sum::<f64>()
            / n as f64;
        var.sqrt()
    }

    pub fn best_fitness(&self) -> f64 {
        self.members
            .iter()
            .map(|(_, f)| f.fitness)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Draw one index with probability proportional to `weights`; all-zero
/// weights degenerate to a uniform draw over `eligible`.
fn weighted_index(weights: &[f64], eligible: &[usize], rng: &mut impl Rng) -> usize {
    let total: f64 = eligible.iter().map(|&i| weights[i]).sum();
    if total <= 0.0 {
        return eligible[rng.random_range(0..eligible.len())];
    }
    let x = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &i in eligible {
        acc += weights[i];
        if x < acc {
            return i;
        }
    }
    // x landed on the accumulated total due to rounding; take the last
    // positive-weight candidate
    *eligible
        .iter()
        .rev()
        .find(|&&i| weights[i] > 0.0)
        .unwrap_or(eligible.last().unwrap())
}

/// Fitness-proportional sampling of two distinct parents, returned in
/// fitness-descending order (ties by ascending id).
pub fn select_parents(
    population: &Population,
    rng: &mut impl Rng,
) -> Result<((Idea, FitnessRecord), (Idea, FitnessRecord))> {
    if population.members.len() < 2 {
        return Err(Error::validation(
            "parent selection requires at least 2 population members",
        ));
    }
    let weights: Vec<f64> = population.members.iter().map(|(_, f)| f.fitness).collect();
    let all: Vec<usize> = (0..population.members.len()).collect();
    let first = weighted_index(&weights, &all, rng);
    let rest: Vec<usize> = all.into_iter().filter(|&i| i != first).collect();
    let second = weighted_index(&weights, &rest, rng);

    let (mut a, mut b) = (
        population.members[first].clone(),
        population.members[second].clone(),
    );
    let swap = b.1.fitness > a.1.fitness || (b.1.fitness == a.1.fitness && b.0.id < a.0.id);
    if swap {
        std::mem::swap(&mut a, &mut b);
    }
    Ok((a, b))
}

/// Produce a crossover offspring from two distinct parents.
pub fn crossover(
    query: &Query,
    parent_a: &(Idea, FitnessRecord),
    parent_b: &(Idea, FitnessRecord),
    context_docs: &[&PatentDoc],
    generator: &dyn GeneratorBackend,
    new_id: &str,
    generation: u32,
) -> Result<Idea> {
    if parent_a.0.id == parent_b.0.id {
        return Err(Error::validation(format!(
            "crossover requires distinct parents, got '{}' twice",
            parent_a.0.id
        )));
    }
    let draft = generator.crossover_idea(
        query,
        &parent_a.0,
        parent_a.1.fitness,
        &parent_b.0,
        parent_b.1.fitness,
        context_docs,
    )?;
    let mut trajectory: BTreeSet<String> = parent_a.0.provenance.trajectory_ids.iter().cloned().collect();
    trajectory.extend(parent_b.0.provenance.trajectory_ids.iter().cloned());
    Idea::from_draft(
        draft,
        new_id.to_string(),
        Operator::Crossover,
        vec![parent_a.0.id.clone(), parent_b.0.id.clone()],
        trajectory.into_iter().collect(),
        generation,
    )
}

/// Static context threaded through mutation.
pub struct MutationContext<'a> {
    pub query: &'a Query,
    pub graph: &'a LiteratureGraph,
    pub corpus: &'a Corpus,
    pub island_size: usize,
    pub island_min_hops: usize,
    pub generator: &'a dyn GeneratorBackend,
}

pub struct MutationOutcome {
    pub idea: Idea,
    pub mutated: bool,
    pub island_shortfall: bool,
}

/// With probability `rho` (one seeded draw, always consumed) replace the idea
/// by its isolation-island mutation; otherwise pass it through unchanged.
#[allow(clippy::too_many_arguments)]
pub fn maybe_mutate(
    idea: &Idea,
    score: f64,
    rho: f64,
    excluded: &BTreeSet<String>,
    ctx: &MutationContext,
    new_id: &str,
    generation: u32,
    rng: &mut impl Rng,
) -> Result<MutationOutcome> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::validation(format!(
            "mutation rate must lie in [0, 1], got {rho}"
        )));
    }
    let triggered = rng.random::<f64>() < rho;
    if !triggered {
        return Ok(MutationOutcome {
            idea: idea.clone(),
            mutated: false,
            island_shortfall: false,
        });
    }
    let island = sample_isolation_island(
        ctx.graph,
        ctx.corpus,
        excluded,
        ctx.island_size,
        ctx.island_min_hops,
        rng,
    )?;
    let island_docs: Vec<&PatentDoc> = island
        .docs
        .iter()
        .filter_map(|id| ctx.corpus.get(id))
        .collect();
    let draft = ctx.generator.mutate_idea(ctx.query, idea, score, &island_docs)?;
    if draft.passthrough {
        return Ok(MutationOutcome {
            idea: idea.clone(),
            mutated: false,
            island_shortfall: island.shortfall,
        });
    }
    let mut trajectory: BTreeSet<String> =
        idea.provenance.trajectory_ids.iter().cloned().collect();
    trajectory.extend(island.docs.iter().cloned());
    let mutated = Idea::from_draft(
        draft,
        new_id.to_string(),
        Operator::Mutation,
        vec![idea.id.clone()],
        trajectory.into_iter().collect(),
        generation,
    )?;
    Ok(MutationOutcome {
        idea: mutated,
        mutated: true,
        island_shortfall: island.shortfall,
    })
}

/// Repeated tournaments without replacement: draw `subset_size` distinct
/// candidates from the remaining pool (the whole pool if smaller), promote the
/// fittest (ties by ascending id), remove it, until `n` survivors are chosen.
pub fn tournament_select(
    candidates: &[(Idea, FitnessRecord)],
    n: usize,
    subset_size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(Idea, FitnessRecord)>> {
    if candidates.len() < n {
        return Err(Error::validation(format!(
            "tournament needs at least {n} candidates, got {}",
            candidates.len()
        )));
    }
    if subset_size == 0 {
        return Err(Error::validation("tournament subset_size must be at least 1"));
    }
    let mut pool: Vec<usize> = (0..candidates.len()).collect();
    let mut survivors = Vec::with_capacity(n);
    for _ in 0..n {
        let m = subset_size.min(pool.len());
        for i in 0..m {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let winner_pos = (0..m)
            .max_by(|&x, &y| {
                let (cx, cy) = (&candidates[pool[x]], &candidates[pool[y]]);
                cx.1.fitness
                    .partial_cmp(&cy.1.fitness)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| cy.0.id.cmp(&cx.0.id))
            })
            .expect("subset is non-empty");
        let winner = pool.remove(winner_pos);
        survivors.push(candidates[winner].clone());
    }
    Ok(survivors)
}

/// Default tournament subset size: moderate pressure across pool sizes.
pub fn default_subset_size(pool_len: usize) -> usize {
    2.max(pool_len.div_ceil(4))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Population size N maintained after every survival selection.
    pub population_size: usize,
    /// Offspring per generation; defaults to N when absent.
    pub offspring_count: Option<usize>,
    /// Mutation rate rho.
    pub rho: f64,
    /// Tournament subset size; absent means max(2, ceil(|pool| / 4)).
    pub subset_size: Option<usize>,
    /// Maximum number of evolution generations.
    pub t_max: usize,
    /// Stop once the population fitness std drops below this.
    pub std_threshold: f64,
    /// Alternative convergence test on |mean(t) - mean(t-1)|; disabled by default.
    pub delta_reward_threshold: Option<f64>,
    pub island_size: usize,
    pub island_min_hops: usize,
    /// Abort the run after this many consecutive backend failures.
    pub max_backend_retries: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 8,
            offspring_count: None,
            rho: 0.3,
            subset_size: None,
            t_max: 20,
            std_threshold: 0.05,
            delta_reward_threshold: None,
            island_size: 3,
            island_min_hops: 3,
            max_backend_retries: 3,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::validation("population_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::validation(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.std_threshold < 0.0 {
            return Err(Error::validation("std_threshold must be non-negative"));
        }
        if self.subset_size == Some(0) {
            return Err(Error::validation("subset_size must be at least 1"));
        }
        if self.island_size == 0 {
            return Err(Error::validation("island_size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub mean_fitness: f64,
    pub std_fitness: f64,
    pub best_fitness: f64,
}

impl GenerationStats {
    pub fn of(pop: &Population) -> Self {
        GenerationStats {
            generation: pop.generation,
            mean_fitness: pop.mean_fitness(),
            std_fitness: pop.std_fitness(),
            best_fitness: pop.best_fitness(),
        }
    }
}

pub struct EvolutionOutcome {
    pub final_population: Population,
    /// Snapshot of every generation, index 0 being the initial population.
    pub generations: Vec<Population>,
    pub stats: Vec<GenerationStats>,
    /// Every idea created during the run (initial members, crossover
    /// intermediates, mutations), in creation order.
    pub all_ideas: Vec<Idea>,
    pub island_shortfalls: usize,
    pub mutation_count: usize,
    /// Diagnostic when the run aborted on consecutive backend failures.
    pub aborted: Option<String>,
}

/// Run the evolution loop: per generation produce offspring by crossover and
/// optional isolation-island mutation, score them, merge with the parents,
/// and tournament-select the next population.
pub fn run_evolution(
    initial: Population,
    query: &Query,
    graph: &LiteratureGraph,
    corpus: &Corpus,
    backends: &BackendSet,
    cfg: &EvolutionConfig,
    rng: &mut impl Rng,
) -> Result<EvolutionOutcome> {
    cfg.validate()?;
    if initial.members.is_empty() {
        return Err(Error::validation("initial population is empty"));
    }
    let n = cfg.population_size;
    let m = cfg.offspring_count.unwrap_or(n);

    let mut pop = Population {
        generation: 0,
        size_target: n,
        ..initial
    };
    let mut all_ideas: Vec<Idea> = pop.members.iter().map(|(i, _)| i.clone()).collect();
    let mut stats = vec![GenerationStats::of(&pop)];
    let mut generations = vec![pop.clone()];
    let mut island_shortfalls = 0usize;
    let mut mutation_count = 0usize;
    let mut aborted = None;

    let mutation_ctx = MutationContext {
        query,
        graph,
        corpus,
        island_size: cfg.island_size,
        island_min_hops: cfg.island_min_hops,
        generator: backends.generator.as_ref(),
    };

    'outer: for t in 1..=cfg.t_max as u32 {
        if pop.std_fitness() < cfg.std_threshold {
            break;
        }
        if let Some(delta) = cfg.delta_reward_threshold {
            if stats.len() >= 2 {
                let prev = stats[stats.len() - 2].mean_fitness;
                let last = stats[stats.len() - 1].mean_fitness;
                if (last - prev).abs() < delta {
                    break;
                }
            }
        }
        if pop.members.len() < 2 && m > 0 {
            return Err(Error::validation(
                "population has fewer than 2 members; cannot select parents",
            ));
        }

        let mut offspring: Vec<(Idea, FitnessRecord)> = Vec::with_capacity(m);
        let mut consecutive_failures = 0usize;
        let mut k = 0usize;
        while offspring.len() < m {
            k += 1;
            let result = (|| -> Result<(Idea, FitnessRecord, bool, bool)> {
                let (pa, pb) = select_parents(&pop, rng)?;
                let mut context_ids: BTreeSet<String> =
                    pa.0.provenance.trajectory_ids.iter().cloned().collect();
                context_ids.extend(pb.0.provenance.trajectory_ids.iter().cloned());
                let context_docs: Vec<&PatentDoc> =
                    context_ids.iter().filter_map(|id| corpus.get(id)).collect();
                let child_id = format!("idea-g{t}-c{k}");
                let child = crossover(
                    query,
                    &pa,
                    &pb,
                    &context_docs,
                    backends.generator.as_ref(),
                    &child_id,
                    t,
                )?;
                // The crossover offspring is not scored before mutation
                // (one reward call per offspring); the mutation prompt's
                // score slot carries the parents' mean fitness.
                let parent_score = (pa.1.fitness + pb.1.fitness) / 2.0;
                let excluded: BTreeSet<String> =
                    child.provenance.trajectory_ids.iter().cloned().collect();
                let outcome = maybe_mutate(
                    &child,
                    parent_score,
                    cfg.rho,
                    &excluded,
                    &mutation_ctx,
                    &format!("idea-g{t}-m{k}"),
                    t,
                    rng,
                )?;
                let finalized = if outcome.mutated {
                    all_ideas.push(child.clone());
                    outcome.idea
                } else {
                    outcome.idea
                };
                let response = backends.reward.score_idea(&finalized)?;
                let fitness = FitnessRecord::from_response(&response)?;
                Ok((finalized, fitness, outcome.mutated, outcome.island_shortfall))
            })();
            match result {
                Ok((idea, fitness, mutated, shortfall)) => {
                    consecutive_failures = 0;
                    if mutated {
                        mutation_count += 1;
                    }
                    if shortfall {
                        island_shortfalls += 1;
                    }
                    all_ideas.push(idea.clone());
                    offspring.push((idea, fitness));
                }
                Err(Error::Backend(msg)) => {
                    consecutive_failures += 1;
                    log::warn!("offspring {k} of generation {t} failed: {msg}");
                    if consecutive_failures > cfg.max_backend_retries {
                        aborted = Some(format!(
                            "aborted at generation {t} after {consecutive_failures} consecutive backend failures: {msg}"
                        ));
                        break 'outer;
                    }
                }
                Err(e) => return Err(e),
            }
        }

        let mut candidates = pop.members.clone();
        candidates.extend(offspring);
        if candidates.len() < n {
            return Err(Error::validation(format!(
                "candidate pool ({}) smaller than population size ({n})",
                candidates.len()
            )));
        }
        let subset = cfg.subset_size.unwrap_or_else(|| default_subset_size(candidates.len()));
        let next = tournament_select(&candidates, n, subset, rng)?;
        pop = Population {
            members: next,
            generation: t,
            size_target: n,
        };
        stats.push(GenerationStats::of(&pop));
        generations.push(pop.clone());
    }

    Ok(EvolutionOutcome {
        final_population: pop,
        generations,
        stats,
        all_ideas,
        island_shortfalls,
        mutation_count,
        aborted,
    })
}

/// Fraction of idea pairs whose embeddings do NOT exceed the similarity
/// threshold: 1 means all pairwise-distinct, 0 means all similar.
pub fn diversity_score(
    ideas: &[Idea],
    embedder: &dyn crate::backends::EmbedderBackend,
    threshold: f64,
) -> Result<f64> {
    if ideas.len() < 2 {
        return Err(Error::validation(
            "diversity_score needs at least 2 ideas",
        ));
    }
    let embeddings: Vec<Vec<f64>> = ideas
        .iter()
        .map(|i| embedder.embed_text(&i.full_text()))
        .collect::<Result<_>>()?;
    let mut similar = 0usize;
    let mut total = 0usize;
    for i in 0..embeddings.len() {
        for j in (i + 1)..embeddings.len() {
            total += 1;
            if crate::corpus::cosine_similarity(&embeddings[i], &embeddings[j])? > threshold {
                similar += 1;
            }
        }
    }
    Ok(1.0 - similar as f64 / total as f64)
}

/// Rank-based score of how often generated ideas beat a reference:
/// mean over targets of (rank - 1) / n, where rank n+1 means every generated
/// idea outranked the target.
pub fn insight_score(target_ranks: &[usize], n: usize) -> Result<f64> {
    if target_ranks.is_empty() {
        return Err(Error::validation("insight_score needs at least one rank"));
    }
    if n == 0 {
        return Err(Error::validation("insight_score needs n >= 1"));
    }
    let mut sum = 0.0;
    for &r in target_ranks {
        if r < 1 || r > n + 1 {
            return Err(Error::validation(format!(
                "rank {r} outside [1, {}]",
                n + 1
            )));
        }
        sum += (r - 1) as f64 / n as f64;
    }
    Ok(sum / target_ranks.len() as f64)
}

/// Verify that provenance forms a DAG over `all` (creation order): parents
/// exist, were created earlier, and crossover parents come from strictly
/// earlier generations.
pub fn verify_provenance_dag(all: &[Idea]) -> Result<()> {
    use std::collections::HashMap;
    let mut seen: HashMap<&str, (usize, u32)> = HashMap::new();
    for (idx, idea) in all.iter().enumerate() {
        for pid in &idea.provenance.parent_ids {
            match seen.get(pid.as_str()) {
                None => {
                    return Err(Error::validation(format!(
                        "idea '{}' references unknown or later parent '{pid}'",
                        idea.id
                    )))
                }
                Some(&(pidx, pgen)) => {
                    if pidx >= idx {
                        return Err(Error::validation(format!(
                            "idea '{}' created before its parent '{pid}'",
                            idea.id
                        )));
                    }
                    match idea.provenance.operator {
                        Operator::Crossover if pgen >= idea.provenance.generation => {
                            return Err(Error::validation(format!(
                                "crossover idea '{}' has parent '{pid}' from generation {pgen}",
                                idea.id
                            )));
                        }
                        Operator::Mutation if pgen > idea.provenance.generation => {
                            return Err(Error::validation(format!(
                                "mutation idea '{}' has parent '{pid}' from later generation {pgen}",
                                idea.id
                            )));
                        }
                        _ => {}
                    }
                }
            }
        }
        if seen.insert(&idea.id, (idx, idea.provenance.generation)).is_some() {
            return Err(Error::validation(format!("duplicate idea id '{}'", idea.id)));
        }
    }
    Ok(())
}
