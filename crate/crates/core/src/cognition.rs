//! Knowledge graph, biased random-walk thoughts, goals and plans.
//!
//! A thought is a walk over an undirected weighted concept graph. From node
//! `u` the walk moves to neighbour `v` with probability proportional to
//!
//! ```text
//! w(u, v) * (1 + alpha * relevance(v, goal) + beta * emotion[affect(v)])
//! ```
//!
//! so with `alpha = beta = 0` it is the plain weighted walk.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{Emotion, EmotionVector};
use crate::registry::{ActionDescriptor, Registry, StateError, StateSeq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CognitionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("graph line {line}: {message}")]
    Graph { line: usize, message: String },
    #[error("goal `{0}` has no means")]
    EmptyMeans(String),
    #[error("stage `{label}`: {source}")]
    Stage {
        label: String,
        #[source]
        source: StateError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub id: String,
    pub affect: Option<Emotion>,
    pub relevance: BTreeMap<String, f64>,
}

/// Undirected graph with strictly positive edge weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    nodes: Vec<ConceptNode>,
    index: BTreeMap<String, usize>,
    /// Neighbours per node in edge declaration order.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::parse(crate::bundled::GRAPH).expect("bundled graph is valid")
    }

    pub fn add_node(&mut self, node: ConceptNode) -> Result<usize, CognitionError> {
        if self.index.contains_key(&node.id) {
            return Err(CognitionError::InvalidArgument(format!(
                "node `{}` declared twice",
                node.id
            )));
        }
        if let Some((tag, r)) = node.relevance.iter().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
            return Err(CognitionError::InvalidArgument(format!(
                "relevance {r} for `{tag}` outside [0, 1]"
            )));
        }
        let i = self.nodes.len();
        self.index.insert(node.id.clone(), i);
        self.nodes.push(node);
        self.adjacency.push(Vec::new());
        Ok(i)
    }

    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) -> Result<(), CognitionError> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(CognitionError::InvalidArgument(format!(
                "edge weight {weight} must be > 0"
            )));
        }
        let ia = self.node_index(a)?;
        let ib = self.node_index(b)?;
        if ia == ib {
            return Err(CognitionError::InvalidArgument(format!("self-loop on `{a}`")));
        }
        if self.adjacency[ia].iter().any(|&(n, _)| n == ib) {
            return Err(CognitionError::InvalidArgument(format!("duplicate edge `{a}`-`{b}`")));
        }
        self.adjacency[ia].push((ib, weight));
        self.adjacency[ib].push((ia, weight));
        Ok(())
    }

    /// Parses `node <id> [affect=<emotion>] [rel:<tag>=<r>]...` and
    /// `edge <a> <b> <weight>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CognitionError> {
        let mut g = KnowledgeGraph::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| CognitionError::Graph { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            match toks[0] {
                "node" => {
                    let id = toks.get(1).ok_or_else(|| err("missing node id".into()))?;
                    let mut node = ConceptNode {
                        id: id.to_string(),
                        affect: None,
                        relevance: BTreeMap::new(),
                    };
                    for tok in &toks[2..] {
                        if let Some(e) = tok.strip_prefix("affect=") {
                            node.affect = Some(e.parse().map_err(|e: crate::affect::AffectError| err(e.to_string()))?);
                        } else if let Some(rel) = tok.strip_prefix("rel:") {
                            let (tag, v) = rel
                                .split_once('=')
                                .ok_or_else(|| err(format!("expected rel:<tag>=<value>, got `{tok}`")))?;
                            let v: f64 = v.parse().map_err(|_| err(format!("`{v}` is not a number")))?;
                            node.relevance.insert(tag.to_string(), v);
                        } else {
                            return Err(err(format!("unexpected `{tok}`")));
                        }
                    }
                    g.add_node(node).map_err(|e| err(e.to_string()))?;
                }
                "edge" => {
                    if toks.len() != 4 {
                        return Err(err("expected `edge <a> <b> <weight>`".into()));
                    }
                    let w: f64 = toks[3]
                        .parse()
                        .map_err(|_| err(format!("`{}` is not a number", toks[3])))?;
                    g.add_edge(toks[1], toks[2], w).map_err(|e| err(e.to_string()))?;
                }
                other => return Err(err(format!("unknown declaration `{other}`"))),
            }
        }
        Ok(g)
    }

    fn node_index(&self, id: &str) -> Result<usize, CognitionError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| CognitionError::InvalidArgument(format!("unknown node `{id}`")))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ConceptNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&ConceptNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn neighbours(&self, id: &str) -> Vec<(&str, f64)> {
        self.index
            .get(id)
            .map(|&i| {
                self.adjacency[i]
                    .iter()
                    .map(|&(j, w)| (self.nodes[j].id.as_str(), w))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        let ia = *self.index.get(a)?;
        let ib = *self.index.get(b)?;
        self.adjacency[ia].iter().find(|&&(n, _)| n == ib).map(|&(_, w)| w)
    }

    pub fn relevance(&self, id: &str, goal_tag: &str) -> f64 {
        self.node(id)
            .and_then(|n| n.relevance.get(goal_tag).copied())
            .unwrap_or(0.0)
    }

    /// Most relevant node for the goal tag; first declared node when nothing is relevant.
    pub fn start_for(&self, goal_tag: &str) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for n in &self.nodes {
            let r = n.relevance.get(goal_tag).copied().unwrap_or(0.0);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((n.id.as_str(), r));
            }
        }
        best.map(|(id, _)| id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThoughtTrigger {
    Idle,
    Emotion,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thought {
    pub path: Vec<String>,
    pub trigger: ThoughtTrigger,
}

/// Walk parameters bound to one graph, goal and emotional state.
#[derive(Debug, Clone)]
pub struct BiasedWalker<'g> {
    graph: &'g KnowledgeGraph,
    goal_tag: String,
    emotion: EmotionVector,
    alpha: f64,
    beta: f64,
}

impl<'g> BiasedWalker<'g> {
    pub fn new(
        graph: &'g KnowledgeGraph,
        goal_tag: &str,
        emotion: EmotionVector,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, CognitionError> {
        if alpha.is_nan() || beta.is_nan() || alpha < 0.0 || beta < 0.0 {
            return Err(CognitionError::InvalidArgument(format!(
                "walk biases must be >= 0 (alpha {alpha}, beta {beta})"
            )));
        }
        Ok(Self {
            graph,
            goal_tag: goal_tag.to_string(),
            emotion,
            alpha,
            beta,
        })
    }

    fn goal_term(&self, i: usize) -> f64 {
        self.alpha
            * self.graph.nodes[i]
                .relevance
                .get(&self.goal_tag)
                .copied()
                .unwrap_or(0.0)
    }

    fn affect_term(&self, i: usize) -> f64 {
        self.graph.nodes[i]
            .affect
            .map_or(0.0, |e| self.beta * self.emotion.get(e))
    }

    /// Unnormalised transition weights out of node `i`.
    fn weights(&self, i: usize) -> Vec<(usize, f64)> {
        self.graph.adjacency[i]
            .iter()
            .map(|&(j, w)| (j, w * (1.0 + self.goal_term(j) + self.affect_term(j))))
            .collect()
    }

    /// Normalised transition probabilities out of `id`, in neighbour order.
    pub fn transition_probabilities(&self, id: &str) -> Result<Vec<(&'g str, f64)>, CognitionError> {
        let i = self.graph.node_index(id)?;
        let ws = self.weights(i);
        let total: f64 = ws.iter().map(|&(_, w)| w).sum();
        Ok(ws
            .into_iter()
            .map(|(j, w)| (self.graph.nodes[j].id.as_str(), w / total))
            .collect())
    }

    fn step_index<R: Rng>(&self, i: usize, rng: &mut R) -> Option<usize> {
        let ws = self.weights(i);
        let total: f64 = ws.iter().map(|&(_, w)| w).sum();
        let (&(last, _), _) = ws.split_last()?;
        let mut r = rng.gen::<f64>() * total;
        for &(j, w) in &ws {
            if r < w {
                return Some(j);
            }
            r -= w;
        }
        Some(last)
    }

    /// One transition from `id`; `None` for an isolated node.
    pub fn step<R: Rng>(&self, id: &str, rng: &mut R) -> Result<Option<&'g str>, CognitionError> {
        let i = self.graph.node_index(id)?;
        Ok(self.step_index(i, rng).map(|j| self.graph.nodes[j].id.as_str()))
    }

    /// An `n`-step walk from `start`. Stops early only at an isolated node.
    pub fn walk<R: Rng>(&self, start: &str, n: usize, rng: &mut R) -> Result<Thought, CognitionError> {
        let mut at = self.graph.node_index(start)?;
        let mut path = vec![at];
        for _ in 0..n {
            match self.step_index(at, rng) {
                Some(next) => {
                    path.push(next);
                    at = next;
                }
                None => break,
            }
        }
        let (goal, affect) = path[1..].iter().fold((0.0, 0.0), |(g, a), &i| {
            (g + self.goal_term(i), a + self.affect_term(i))
        });
        let trigger = if goal == 0.0 && affect == 0.0 {
            ThoughtTrigger::Idle
        } else if goal >= affect {
            ThoughtTrigger::Goal
        } else {
            ThoughtTrigger::Emotion
        };
        Ok(Thought {
            path: path.into_iter().map(|i| self.graph.nodes[i].id.clone()).collect(),
            trigger,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub steps: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            steps: 8,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Seeded thought generation. Returns one thought whose path holds `n`
/// transitions (fewer only when `start` is isolated).
pub fn generate_thoughts(
    graph: &KnowledgeGraph,
    start: &str,
    goal_tag: &str,
    emotion: &EmotionVector,
    params: WalkParams,
    seed: u64,
) -> Result<Vec<Thought>, CognitionError> {
    if params.steps == 0 {
        return Err(CognitionError::InvalidArgument("thought length must be >= 1".into()));
    }
    let walker = BiasedWalker::new(graph, goal_tag, *emotion, params.alpha, params.beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![walker.walk(start, params.steps, &mut rng)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalStatus {
    Pending,
    Active,
    Achieved,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub id: String,
    pub description: String,
    pub priority: f64,
    pub status: GoalStatus,
}

impl Goal {
    pub fn new(id: impl Into<String>, description: impl Into<String>, priority: f64) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            priority,
            status: GoalStatus::Pending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeansStep {
    pub label: String,
    pub action: ActionDescriptor,
    pub note: String,
    /// Explicit override; `None` means memorable iff the action emotes or recalls.
    pub memorable: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub steps: Vec<MeansStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStage {
    pub label: String,
    pub action: ActionDescriptor,
    pub note: String,
    pub memorable: bool,
    pub states: StateSeq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub goal_id: String,
    pub stages: Vec<PlanStage>,
}

/// Pairs each declared step with its derived states and marks the goal active.
pub fn plan_goal(goal: &mut Goal, means: &Means, registry: &Registry) -> Result<Plan, CognitionError> {
    if means.steps.is_empty() {
        return Err(CognitionError::EmptyMeans(goal.id.clone()));
    }
    let stages = means
        .steps
        .iter()
        .map(|s| {
            let states = registry.derive(&s.action).map_err(|source| CognitionError::Stage {
                label: s.label.clone(),
                source,
            })?;
            let memorable = s.memorable.unwrap_or_else(|| {
                s.action.involves(crate::registry::Verb::Emote) || s.action.involves(crate::registry::Verb::Recall)
            });
            Ok(PlanStage {
                label: s.label.clone(),
                action: s.action.clone(),
                note: s.note.clone(),
                memorable,
                states,
            })
        })
        .collect::<Result<Vec<_>, CognitionError>>()?;
    goal.status = GoalStatus::Active;
    Ok(Plan {
        goal_id: goal.id.clone(),
        stages,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevisitPolicy {
    pub factor: f64,
    pub floor: f64,
}

impl Default for RevisitPolicy {
    fn default() -> Self {
        Self {
            factor: 0.5,
            floor: 0.05,
        }
    }
}

/// Re-queues failed goals as pending at the back of the book with reduced
/// priority (`max(p * factor, floor)`, at most 1). Other goals keep their
/// places; re-queued goals keep their relative order.
pub fn revisit_failed(goals: &[Goal], policy: RevisitPolicy) -> Vec<Goal> {
    let (failed, mut rest): (Vec<Goal>, Vec<Goal>) =
        goals.iter().cloned().partition(|g| g.status == GoalStatus::Failed);
    rest.extend(failed.into_iter().map(|mut g| {
        g.priority = (g.priority * policy.factor).max(policy.floor).min(1.0);
        g.status = GoalStatus::Pending;
        g
    }));
    rest
}
