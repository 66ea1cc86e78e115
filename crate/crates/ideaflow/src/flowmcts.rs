//! Flow-guided Monte Carlo tree search over the literature graph.
//!
//! The search tree's root is the query with flow 1. Each edge carries a visit
//! count, a running value estimate Q, and a flow probability P_f that is
//! uniform at initialization and reshaped by idea rewards. Selection uses the
//! flow-guided bound `Q + c * P_f * sqrt(N(s)) / (1 + N(s'|s))`; after each
//! generated idea is scored, the depth-decayed reward updates P_f by moving
//! average, every touched sibling group is renormalized, and node flows are
//! recomputed top-down so that `F(child) = F(parent) * P_f` holds everywhere.

use serde::{Deserialize, Serialize};

use crate::backends::BackendSet;
use crate::corpus::{Corpus, PatentDoc, Query};
use crate::error::{Error, Result};
use crate::evolve::{FitnessRecord, Idea, Operator};
use crate::litgraph::{retrieve_topk, LiteratureGraph};

pub type NodeKey = usize;
pub type EdgeKey = usize;

/// Tolerance for the flow conservation and decomposition invariants.
pub const FLOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeContent {
    Root,
    Doc(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub content: NodeContent,
    /// Global flow mass reaching this node; 1 at the root.
    pub flow: f64,
    pub visits: u64,
    pub depth: usize,
    pub children: Vec<EdgeKey>,
    /// Adjacent doc ids not yet expanded, ascending; expansion pops the front.
    pub untried: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_edge: Option<EdgeKey>,
}

impl TreeNode {
    pub fn doc_id(&self) -> Option<&str> {
        match &self.content {
            NodeContent::Root => None,
            NodeContent::Doc(id) => Some(id),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeStats {
    pub parent: NodeKey,
    pub child: NodeKey,
    pub visit_count: u64,
    pub q_value: f64,
    pub flow_prob: f64,
    /// Audit trail of the rewards averaged into Q.
    pub applied_rewards: Vec<f64>,
}

/// Whether Q averages the depth-decayed rewards or the raw trajectory reward.
/// The flow update always uses the decayed reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QRewardMode {
    #[default]
    Decayed,
    Raw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchTree {
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<EdgeStats>,
}

/// One root-to-leaf exploration path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub node_keys: Vec<NodeKey>,
    pub doc_ids: Vec<String>,
    pub generated_idea_id: Option<String>,
    pub reward: Option<f64>,
}

/// Rewards of completed iterations; its sample variance drives termination.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBuffer {
    rewards: Vec<f64>,
}

impl RewardBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: f64) {
        self.rewards.push(r);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Unbiased sample variance; +inf with fewer than two samples.
    pub fn sample_variance(&self) -> f64 {
        sample_variance(&self.rewards)
    }
}

/// Sample variance with the n-1 denominator; +inf for fewer than 2 values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Flow-guided upper confidence bound.
pub fn ucb(edge: &EdgeStats, parent_visits: u64, c: f64) -> f64 {
    edge.q_value
        + c * edge.flow_prob * (parent_visits as f64).sqrt() / (1.0 + edge.visit_count as f64)
}

/// Depth-decayed reward `R * gamma^(T - t)` for the edge at depth `t` of a
/// trajectory with `t_max` edges; deeper literature keeps more credit.
pub fn depth_decayed_reward(reward: f64, gamma: f64, t_max: usize, t: usize) -> f64 {
    debug_assert!((1..=t_max).contains(&t));
    reward * gamma.powi((t_max - t) as i32)
}

/// Moving-average flow update, before sibling renormalization:
/// `(1 - alpha) * P_f + alpha * decayed_reward`.
pub fn flow_update(flow_prob: f64, alpha: f64, decayed_reward: f64) -> f64 {
    (1.0 - alpha) * flow_prob + alpha * decayed_reward
}

/// True once the iteration budget is exhausted, or the minimum iteration
/// count is reached and the reward variance has fallen below epsilon.
pub fn should_terminate(buffer: &RewardBuffer, epsilon: f64, n_min: usize, n_max: usize) -> bool {
    let n = buffer.len();
    if n >= n_max {
        return true;
    }
    n >= n_min && buffer.sample_variance() < epsilon
}

impl SearchTree {
    pub const ROOT: NodeKey = 0;

    /// Root the tree at the query and attach the top-k retrieved docs as
    /// children, each with uniform flow probability 1/k.
    pub fn init_root(
        query: &Query,
        graph: &LiteratureGraph,
        corpus: &Corpus,
        k: usize,
    ) -> Result<SearchTree> {
        let top = retrieve_topk(graph, corpus, query, k)?;
        let mut tree = SearchTree {
            nodes: vec![TreeNode {
                content: NodeContent::Root,
                flow: 1.0,
                visits: 0,
                depth: 0,
                children: Vec::new(),
                untried: Vec::new(),
                parent_edge: None,
            }],
            edges: Vec::new(),
        };
        let p = 1.0 / top.len() as f64;
        for doc_id in top {
            let node_key = tree.nodes.len();
            let untried = tree.untried_for(graph, &doc_id, Self::ROOT)?;
            tree.nodes.push(TreeNode {
                content: NodeContent::Doc(doc_id),
                flow: p,
                visits: 0,
                depth: 1,
                children: Vec::new(),
                untried,
                parent_edge: Some(tree.edges.len()),
            });
            tree.edges.push(EdgeStats {
                parent: Self::ROOT,
                child: node_key,
                visit_count: 0,
                q_value: 0.0,
                flow_prob: p,
                applied_rewards: Vec::new(),
            });
            tree.nodes[Self::ROOT].children.push(tree.edges.len() - 1);
        }
        Ok(tree)
    }

    pub fn node(&self, key: NodeKey) -> &TreeNode {
        &self.nodes[key]
    }

    pub fn edge(&self, key: EdgeKey) -> &EdgeStats {
        &self.edges[key]
    }

    /// Doc ids on the path from the root to `node` (inclusive).
    pub fn path_doc_ids(&self, node: NodeKey) -> Vec<String> {
        let mut ids = Vec::new();
        let mut cur = node;
        loop {
            if let Some(id) = self.nodes[cur].doc_id() {
                ids.push(id.to_string());
            }
            match self.nodes[cur].parent_edge {
                Some(e) => cur = self.edges[e].parent,
                None => break,
            }
        }
        ids.reverse();
        ids
    }

    /// Graph neighbors of `doc_id` minus docs already on the path through
    /// `parent`, sorted ascending. Keeps every root-to-leaf path free of
    /// repeated documents.
    fn untried_for(
        &self,
        graph: &LiteratureGraph,
        doc_id: &str,
        parent: NodeKey,
    ) -> Result<Vec<String>> {
        let mut on_path: Vec<String> = self.path_doc_ids(parent);
        on_path.push(doc_id.to_string());
        let mut untried: Vec<String> = graph
            .neighbors(doc_id)?
            .iter()
            .filter(|n| !on_path.contains(n))
            .cloned()
            .collect();
        untried.sort();
        Ok(untried)
    }

    /// Argmax of the flow-guided bound over the node's children; ties break
    /// toward the lower doc id.
    pub fn select_child(&self, node: NodeKey, c: f64) -> Result<EdgeKey> {
        let parent_visits = self.nodes[node].visits;
        let mut best: Option<(EdgeKey, f64, &str)> = None;
        for &ek in &self.nodes[node].children {
            let edge = &self.edges[ek];
            let score = ucb(edge, parent_visits, c);
            let child_id = self.nodes[edge.child].doc_id().unwrap_or("");
            let better = match best {
                None => true,
                Some((_, bs, bid)) => score > bs || (score == bs && child_id < bid),
            };
            if better {
                best = Some((ek, score, child_id));
            }
        }
        best.map(|(ek, _, _)| ek)
            .ok_or_else(|| Error::validation(format!("node {node} has no children to select")))
    }

    /// Expand the lowest-id untried neighbor into a new child. Existing
    /// sibling flow mass is rescaled by n/(n+1) and the newcomer receives
    /// 1/(n+1), preserving learned preferences while restoring the sum to 1.
    /// Returns None when the node is exhausted.
    pub fn expand(&mut self, node: NodeKey, graph: &LiteratureGraph) -> Result<Option<EdgeKey>> {
        if self.nodes[node].untried.is_empty() {
            return Ok(None);
        }
        let doc_id = self.nodes[node].untried.remove(0);
        let n = self.nodes[node].children.len();
        let scale = n as f64 / (n + 1) as f64;
        let child_keys: Vec<EdgeKey> = self.nodes[node].children.clone();
        for ek in child_keys {
            self.edges[ek].flow_prob *= scale;
        }
        let newcomer_p = 1.0 / (n + 1) as f64;

        let untried = self.untried_for(graph, &doc_id, node)?;
        let node_key = self.nodes.len();
        let edge_key = self.edges.len();
        self.nodes.push(TreeNode {
            content: NodeContent::Doc(doc_id),
            flow: 0.0, // set by the flow recomputation below
            visits: 0,
            depth: self.nodes[node].depth + 1,
            children: Vec::new(),
            untried,
            parent_edge: Some(edge_key),
        });
        self.edges.push(EdgeStats {
            parent: node,
            child: node_key,
            visit_count: 0,
            q_value: 0.0,
            flow_prob: newcomer_p,
            applied_rewards: Vec::new(),
        });
        self.nodes[node].children.push(edge_key);
        self.recompute_flows();
        Ok(Some(edge_key))
    }

    /// Apply a trajectory reward: bump visit counts, fold the depth-decayed
    /// reward into Q and P_f along the path, renormalize each touched sibling
    /// group, and recompute all flows top-down.
    pub fn backpropagate(
        &mut self,
        trajectory: &Trajectory,
        reward: f64,
        gamma: f64,
        alpha: f64,
        q_mode: QRewardMode,
    ) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::validation(format!(
                "reward must lie in [0, 1], got {reward}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::validation(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        let keys = &trajectory.node_keys;
        if keys.first() != Some(&Self::ROOT) {
            return Err(Error::validation("trajectory must start at the root"));
        }
        if keys.len() < 2 {
            return Err(Error::validation("trajectory has no edges"));
        }
        let t_max = keys.len() - 1;
        let mut edge_keys = Vec::with_capacity(t_max);
        for t in 1..=t_max {
            let (parent, child) = (keys[t - 1], keys[t]);
            let ek = self.nodes[parent]
                .children
                .iter()
                .copied()
                .find(|&e| self.edges[e].child == child)
                .ok_or_else(|| {
                    Error::validation(format!("trajectory step {parent}->{child} is not a tree edge"))
                })?;
            edge_keys.push(ek);
        }

        for (idx, &ek) in edge_keys.iter().enumerate() {
            let t = idx + 1;
            let decayed = depth_decayed_reward(reward, gamma, t_max, t);
            let applied = match q_mode {
                QRewardMode::Decayed => decayed,
                QRewardMode::Raw => reward,
            };
            let edge = &mut self.edges[ek];
            edge.visit_count += 1;
            edge.applied_rewards.push(applied);
            edge.q_value =
                edge.applied_rewards.iter().sum::<f64>() / edge.applied_rewards.len() as f64;
            edge.flow_prob = flow_update(edge.flow_prob, alpha, decayed);
            let parent = edge.parent;
            self.normalize_children(parent);
        }
        for &nk in keys {
            self.nodes[nk].visits += 1;
        }
        self.recompute_flows();
        Ok(())
    }

    fn normalize_children(&mut self, node: NodeKey) {
        let children: Vec<EdgeKey> = self.nodes[node].children.clone();
        if children.is_empty() {
            return;
        }
        let sum: f64 = children.iter().map(|&e| self.edges[e].flow_prob).sum();
        if sum > 0.0 {
            for &e in &children {
                self.edges[e].flow_prob /= sum;
            }
        } else {
            let uniform = 1.0 / children.len() as f64;
            for &e in &children {
                self.edges[e].flow_prob = uniform;
            }
        }
    }

    /// Full top-down pass enforcing `F(child) = F(parent) * P_f` exactly.
    pub fn recompute_flows(&mut self) {
        self.nodes[Self::ROOT].flow = 1.0;
        let mut stack = vec![Self::ROOT];
        while let Some(nk) = stack.pop() {
            let flow = self.nodes[nk].flow;
            let children: Vec<EdgeKey> = self.nodes[nk].children.clone();
            for ek in children {
                let child = self.edges[ek].child;
                self.nodes[child].flow = flow * self.edges[ek].flow_prob;
                stack.push(child);
            }
        }
    }

    /// Verify the structural invariants: flow conservation (sibling P_f sums
    /// to 1), flow decomposition (F(child) = F(parent) * P_f), monotone flow,
    /// P_f in [0, 1], Q consistency with its audit trail, and path uniqueness.
    pub fn check_flow_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        if (self.nodes[Self::ROOT].flow - 1.0).abs() > tol {
            return Err(format!("root flow {} != 1", self.nodes[Self::ROOT].flow));
        }
        for (nk, node) in self.nodes.iter().enumerate() {
            if !node.children.is_empty() {
                let sum: f64 = node.children.iter().map(|&e| self.edges[e].flow_prob).sum();
                if (sum - 1.0).abs() > tol {
                    return Err(format!("node {nk}: sibling P_f sums to {sum}"));
                }
            }
        }
        for (ek, edge) in self.edges.iter().enumerate() {
            if !(0.0..=1.0 + tol).contains(&edge.flow_prob) {
                return Err(format!("edge {ek}: P_f {} outside [0, 1]", edge.flow_prob));
            }
            let expected = self.nodes[edge.parent].flow * edge.flow_prob;
            let actual = self.nodes[edge.child].flow;
            if (expected - actual).abs() > tol {
                return Err(format!(
                    "edge {ek}: F(child) {actual} != F(parent)*P_f {expected}"
                ));
            }
            if actual > self.nodes[edge.parent].flow + tol {
                return Err(format!("edge {ek}: child flow exceeds parent flow"));
            }
            if edge.visit_count > 0 {
                let mean = edge.applied_rewards.iter().sum::<f64>()
                    / edge.applied_rewards.len() as f64;
                if (edge.q_value - mean).abs() > tol {
                    return Err(format!(
                        "edge {ek}: Q {} != mean of applied rewards {mean}",
                        edge.q_value
                    ));
                }
            }
        }
        // path uniqueness: walk every leaf's path
        for nk in 0..self.nodes.len() {
            let ids = self.path_doc_ids(nk);
            let mut dedup = ids.clone();
            dedup.sort();
            dedup.dedup();
            if dedup.len() != ids.len() {
                return Err(format!("node {nk}: repeated doc on root path"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    /// Children retrieved for the root.
    pub k: usize,
    /// Exploration rate in the flow-guided bound.
    pub c: f64,
    /// Moving-average weight of the flow update.
    pub alpha: f64,
    /// Depth-decay factor of the reward.
    pub gamma: f64,
    /// Reward-variance termination threshold.
    pub epsilon: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Maximum trajectory depth in edges.
    pub depth_cap: usize,
    pub q_reward_mode: QRewardMode,
    /// Abort the run after this many consecutive backend failures.
    pub max_backend_retries: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            k: 5,
            c: std::f64::consts::SQRT_2,
            alpha: 0.2,
            gamma: 0.9,
            epsilon: 0.05,
            n_min: 5,
            n_max: 50,
            depth_cap: 10,
            q_reward_mode: QRewardMode::Decayed,
            max_backend_retries: 3,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::validation("exploration k must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::validation(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::validation("epsilon must be positive"));
        }
        if self.n_min > self.n_max || self.n_max == 0 {
            return Err(Error::validation(format!(
                "need 0 < n_min <= n_max, got {} and {}",
                self.n_min, self.n_max
            )));
        }
        if self.depth_cap == 0 {
            return Err(Error::validation("depth_cap must be at least 1"));
        }
        if self.c < 0.0 {
            return Err(Error::validation("exploration rate c must be non-negative"));
        }
        Ok(())
    }
}

/// Per-iteration record kept for run artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub doc_ids: Vec<String>,
    pub idea_id: Option<String>,
    pub reward: Option<f64>,
    /// Decayed reward applied at each depth, root edge first.
    pub decayed_rewards: Vec<f64>,
}

pub struct ExplorationOutcome {
    /// Every generated idea with its fitness, in generation order.
    pub population: Vec<(Idea, FitnessRecord)>,
    pub tree: SearchTree,
    pub rewards: Vec<f64>,
    pub trajectories: Vec<TrajectoryRecord>,
    /// Diagnostic when the run aborted on consecutive backend failures.
    pub aborted: Option<String>,
}

/// Run the exploration loop with a no-op observer.
pub fn run_exploration(
    query: &Query,
    graph: &LiteratureGraph,
    corpus: &Corpus,
    backends: &BackendSet,
    cfg: &ExplorationConfig,
) -> Result<ExplorationOutcome> {
    run_exploration_observed(query, graph, corpus, backends, cfg, |_, _| {})
}

/// Exploration loop with an observer invoked after every backpropagation,
/// used by invariant and convergence tests.
pub fn run_exploration_observed(
    query: &Query,
    graph: &LiteratureGraph,
    corpus: &Corpus,
    backends: &BackendSet,
    cfg: &ExplorationConfig,
    mut observer: impl FnMut(&SearchTree, &Trajectory),
) -> Result<ExplorationOutcome> {
    cfg.validate()?;
    let mut tree = SearchTree::init_root(query, graph, corpus, cfg.k)?;
    let mut buffer = RewardBuffer::new();
    let mut population = Vec::new();
    let mut trajectories = Vec::new();
    let mut aborted = None;
    let mut consecutive_failures = 0usize;
    let mut iteration = 0usize;

    while !should_terminate(&buffer, cfg.epsilon, cfg.n_min, cfg.n_max) {
        iteration += 1;

        // Descend by the flow-guided bound; expanding a node ends the
        // trajectory at that node for this iteration.
        let mut current = SearchTree::ROOT;
        let mut node_keys = vec![current];
        loop {
            if node_keys.len() > cfg.depth_cap {
                break;
            }
            if !tree.node(current).untried.is_empty() {
                tree.expand(current, graph)?;
                break;
            }
            if tree.node(current).children.is_empty() {
                break; // dead end: nothing expanded, nothing untried
            }
            let ek = tree.select_child(current, cfg.c)?;
            current = tree.edge(ek).child;
            node_keys.push(current);
        }

        let doc_ids = tree.path_doc_ids(current);
        let mut trajectory = Trajectory {
            node_keys,
            doc_ids: doc_ids.clone(),
            generated_idea_id: None,
            reward: None,
        };

        let iteration_result = (|| -> Result<(Idea, FitnessRecord)> {
            let docs: Vec<&PatentDoc> = doc_ids
                .iter()
                .map(|id| corpus.require(id))
                .collect::<Result<_>>()?;
            let draft = backends.generator.generate_initial(query, &docs)?;
            let idea = Idea::from_draft(
                draft,
                format!("idea-x{iteration:04}"),
                Operator::Initial,
                vec![],
                doc_ids.clone(),
                0,
            )?;
            let response = backends.reward.score_idea(&idea)?;
            let fitness = FitnessRecord::from_response(&response)?;
            Ok((idea, fitness))
        })();

        match iteration_result {
            Ok((idea, fitness)) => {
                consecutive_failures = 0;
                let reward = fitness.fitness;
                trajectory.generated_idea_id = Some(idea.id.clone());
                trajectory.reward = Some(reward);
                tree.backpropagate(&trajectory, reward, cfg.gamma, cfg.alpha, cfg.q_reward_mode)?;
                buffer.push(reward);
                let t_max = trajectory.node_keys.len() - 1;
                trajectories.push(TrajectoryRecord {
                    iteration,
                    doc_ids,
                    idea_id: Some(idea.id.clone()),
                    reward: Some(reward),
                    decayed_rewards: (1..=t_max)
                        .map(|t| depth_decayed_reward(reward, cfg.gamma, t_max, t))
                        .collect(),
                });
                population.push((idea, fitness));
                observer(&tree, &trajectory);
            }
            Err(Error::Backend(msg)) => {
                consecutive_failures += 1;
                log::warn!("exploration iteration {iteration} failed: {msg}");
                trajectories.push(TrajectoryRecord {
                    iteration,
                    doc_ids,
                    idea_id: None,
                    reward: None,
                    decayed_rewards: Vec::new(),
                });
                if consecutive_failures > cfg.max_backend_retries {
                    aborted = Some(format!(
                        "aborted at iteration {iteration} after {consecutive_failures} consecutive backend failures: {msg}"
                    ));
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }

    Ok(ExplorationOutcome {
        population,
        rewards: buffer.rewards().to_vec(),
        tree,
        trajectories,
        aborted,
    })
}
