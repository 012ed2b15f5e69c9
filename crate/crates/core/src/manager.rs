//! The qualia manager: the agent's root scheduling loop.
//!
//! Each goal is planned from its declared means and then driven one cycle
//! at a time. A cycle first advances the bodily drives; if one of them
//! crosses its threshold the cycle is spent attending to it and the plan
//! stage waits. Otherwise the next stage runs. Reaching the end of the plan,
//! or a scripted terminal event, closes the goal with an expression and a
//! memory write. Between goals the agent lets its thoughts wander and puts
//! failed goals back on its list.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{
    expression_mode, select_challenge, tick_instincts, update_emotion, AffectError, ChallengeSource, Emotion,
    EmotionVector, ExpressionMode, InstinctKind, InstinctSignal, PersonalityProfile,
};
use crate::cognition::{
    generate_thoughts, plan_goal, revisit_failed, CognitionError, Goal, GoalStatus, KnowledgeGraph, Means, Plan,
    PlanStage, Thought,
};
use crate::config::{ConfigError, EngineConfig};
use crate::memory::{MemoryRecord, MemoryStores};
use crate::perception::{fuse, FusedObservation, Percept, PerceptionError};
use crate::registry::{ActionDescriptor, Registry, StateSeq, StepKind, TraceStep, Verb};

#[derive(Debug, Error)]
pub enum ManagerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("agent is not alive")]
    Dead,
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("goal `{0}` is not pending")]
    GoalNotPending(String),
    #[error("a plan is still active for goal `{0}`")]
    PlanActive(String),
    #[error(transparent)]
    Plan(#[from] CognitionError),
    #[error(transparent)]
    Affect(#[from] AffectError),
    #[error("goal `{goal}` stuck at stage `{stage}` after {cycles} cycles")]
    Stalled { goal: String, stage: String, cycles: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalResult {
    Success,
    Failure,
}

impl fmt::Display for TerminalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalResult::Success => "success",
            TerminalResult::Failure => "failure",
        })
    }
}

/// Something that reaches the agent from outside, applied at the next cycle boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentEvent {
    Percept(Percept),
    /// Emotional stimulus applied when the next plan stage runs.
    Stimulus(EmotionVector),
    Instinct {
        kind: InstinctKind,
        level: f64,
    },
    /// Ends the goal after the next plan stage runs.
    Terminal(TerminalResult),
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpressionKind {
    Action,
    Gesture,
    Emotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expression {
    pub kind: ExpressionKind,
    pub mode: ExpressionMode,
    pub emotion: Option<Emotion>,
    pub payload: String,
    pub goal_id: String,
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryOrigin {
    Stage,
    Challenge,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryLogEntry {
    pub origin: MemoryOrigin,
    pub goal_id: String,
    pub long_term: bool,
    pub record: MemoryRecord,
}

impl MemoryLogEntry {
    /// `tick|salience|stores|states|event`, stores being `S` or `S,L`.
    pub fn export_line(&self) -> String {
        let r = &self.record;
        format!(
            "{}|{:.3}|{}|{}|{}",
            r.tick,
            r.salience,
            if self.long_term { "S,L" } else { "S" },
            r.states,
            r.event
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Fused(FusedObservation),
    Ambiguous { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationEntry {
    pub tick: u64,
    pub goal_id: String,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub goal_id: String,
    pub result: TerminalResult,
    pub trace: Vec<TraceStep>,
}

/// Everything one cycle produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutput {
    pub step: TraceStep,
    pub mode: ExpressionMode,
    /// Emotion after the cycle's update.
    pub emotion: EmotionVector,
    /// True when the offered plan stage ran.
    pub consumed: bool,
    pub terminal: Option<TerminalResult>,
    pub expressions: Vec<Expression>,
    pub memory: Vec<MemoryLogEntry>,
    pub observations: Vec<ObservationEntry>,
    /// Thoughts from a stage whose action involves `think`.
    pub thoughts: Vec<Thought>,
}

/// A thought and where it arose: inside a stage, or between goals when
/// `stage` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtRecord {
    pub goal_id: String,
    pub stage: Option<String>,
    pub tick: u64,
    pub thought: Thought,
}

/// A trace step with the affect readings taken when it ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: TraceStep,
    pub mode: ExpressionMode,
    pub fear: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalRun {
    pub outcome: Outcome,
    pub steps: Vec<StepRecord>,
    pub expressions: Vec<Expression>,
    pub memory: Vec<MemoryLogEntry>,
    pub observations: Vec<ObservationEntry>,
    pub thoughts: Vec<ThoughtRecord>,
}

/// Events keyed by the stage label they are anchored to.
pub type StageEvents = BTreeMap<String, Vec<AgentEvent>>;

#[derive(Debug, Clone)]
pub struct AgentState {
    pub config: EngineConfig,
    pub personality: PersonalityProfile,
    pub emotion: EmotionVector,
    pub instincts: Vec<InstinctSignal>,
    pub stores: MemoryStores,
    pub graph: Arc<KnowledgeGraph>,
    pub registry: Arc<Registry>,
    pub goals: Vec<Goal>,
    pub active_plan: Option<Plan>,
    pub tick: u64,
    pub seed: u64,
    pub alive: bool,
    queue: VecDeque<AgentEvent>,
    pending_stimulus: Option<EmotionVector>,
    pending_terminal: Option<TerminalResult>,
    thoughts_generated: u64,
}

impl AgentState {
    /// Queues an event for the next cycle boundary.
    pub fn inject(&mut self, event: AgentEvent) {
        self.queue.push_back(event);
    }

    pub fn instinct(&self, kind: InstinctKind) -> Option<&InstinctSignal> {
        self.instincts.iter().find(|s| s.kind == kind)
    }

    pub fn expression_mode(&self) -> ExpressionMode {
        expression_mode(&self.emotion, &self.personality, &self.config.expression)
    }

    pub fn goal(&self, id: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.id == id)
    }
}

pub fn init_agent(
    config: &EngineConfig,
    graph: Arc<KnowledgeGraph>,
    registry: Arc<Registry>,
    seed: u64,
) -> Result<AgentState, ManagerError> {
    config.validate()?;
    let instincts = InstinctKind::ALL
        .into_iter()
        .map(|k| {
            let c = config.instinct(k);
            InstinctSignal::new(k, c.initial, c.threshold, c.weight)
        })
        .collect();
    Ok(AgentState {
        config: config.clone(),
        personality: config.personality,
        emotion: EmotionVector::zero(),
        instincts,
        stores: MemoryStores::new(config.memory_capacity(), config.long_term_threshold),
        graph,
        registry,
        goals: Vec::new(),
        active_plan: None,
        tick: 0,
        seed,
        alive: true,
        queue: VecDeque::new(),
        pending_stimulus: None,
        pending_terminal: None,
        thoughts_generated: 0,
    })
}

fn challenge_verb(kind: InstinctKind) -> Verb {
    match kind {
        InstinctKind::Pain => Verb::Emote,
        InstinctKind::Hunger => Verb::Decide,
        InstinctKind::Fatigue => Verb::Relax,
    }
}

fn emotive_expression(agent: &AgentState, goal_id: &str, what: &str, fallback: ExpressionKind) -> Expression {
    let dominant = agent.emotion.dominant();
    let (kind, payload) = match dominant {
        Some(e) => (ExpressionKind::Emotion, format!("{what}: {e}")),
        None => (fallback, format!("{what}: neutral")),
    };
    Expression {
        kind,
        mode: agent.expression_mode(),
        emotion: dominant,
        payload,
        goal_id: goal_id.to_string(),
        tick: agent.tick,
    }
}

/// One seeded thought starting from the concept most relevant to
/// `goal_tag`, biased by the current emotion. Each call draws a fresh
/// stream derived from the agent seed and a running count.
fn wander(agent: &mut AgentState, goal_tag: &str) -> Result<Vec<Thought>, ManagerError> {
    let Some(start) = agent.graph.start_for(goal_tag) else {
        return Ok(Vec::new());
    };
    let seed = splitmix64(agent.seed ^ splitmix64(agent.thoughts_generated));
    agent.thoughts_generated += 1;
    Ok(generate_thoughts(
        &agent.graph,
        start,
        goal_tag,
        &agent.emotion,
        agent.config.walk(),
        seed,
    )?)
}

/// Runs one cycle: drain queued events, advance drives, then either attend
/// the strongest challenge (leaving `next_stage` pending) or run
/// `next_stage`. With no challenge and no stage the agent idles.
pub fn qualia_cycle(
    agent: &mut AgentState,
    goal_id: &str,
    next_stage: Option<&PlanStage>,
    injected: impl IntoIterator<Item = AgentEvent>,
) -> Result<CycleOutput, ManagerError> {
    if !agent.alive {
        return Err(ManagerError::Dead);
    }
    agent.queue.extend(injected);
    let mut percepts = Vec::new();
    let mut halt = false;
    while let Some(ev) = agent.queue.pop_front() {
        match ev {
            AgentEvent::Percept(mut p) => {
                p.tick = agent.tick;
                percepts.push(p);
            }
            AgentEvent::Stimulus(s) => {
                let merged = agent.pending_stimulus.map_or(s, |p| p.merge_max(&s));
                agent.pending_stimulus = Some(merged);
            }
            AgentEvent::Instinct { kind, level } => {
                if let Some(sig) = agent.instincts.iter_mut().find(|s| s.kind == kind) {
                    sig.level = crate::affect::clamp01(level);
                }
            }
            AgentEvent::Terminal(t) => agent.pending_terminal = Some(t),
            AgentEvent::Halt => halt = true,
        }
    }

    agent.instincts = tick_instincts(&agent.instincts, 1.0, &agent.config.load, &agent.config.rates);
    let decay = agent.config.emotion_decay;
    let index = agent.tick + 1;

    let mut expressions = Vec::new();
    let mut memory = Vec::new();
    let mut consumed = false;
    let mut terminal = None;
    let mut thoughts = Vec::new();

    let step = if let Some(challenge) = select_challenge(&agent.instincts) {
        let ChallengeSource::Instinct(kind) = challenge.source else {
            unreachable!("drives only raise instinct challenges")
        };
        let states = agent.config.challenge_states[&kind].clone();
        let stimulus = EmotionVector::single(kind.felt_as(), challenge.severity);
        agent.emotion = update_emotion(&agent.emotion, &stimulus, &agent.personality, 1.0, decay)?;
        let note = format!("attend to {kind} (severity {:.3})", challenge.severity);
        let stored = agent
            .stores
            .record_experience(note.clone(), &agent.emotion, states.clone(), index);
        memory.push(MemoryLogEntry {
            origin: MemoryOrigin::Challenge,
            goal_id: goal_id.to_string(),
            long_term: stored.long_term,
            record: stored.record,
        });
        if let Some(sig) = agent.instincts.iter_mut().find(|s| s.kind == kind) {
            sig.level = 0.0;
        }
        TraceStep {
            index,
            goal_id: goal_id.to_string(),
            label: format!("!{kind}"),
            kind: StepKind::Challenge,
            action: ActionDescriptor::verb(challenge_verb(kind)),
            states,
            note,
        }
    } else if let Some(stage) = next_stage {
        let stimulus = agent.pending_stimulus.take().unwrap_or_default();
        agent.emotion = update_emotion(&agent.emotion, &stimulus, &agent.personality, 1.0, decay)?;
        consumed = true;
        terminal = agent.pending_terminal.take();
        agent.tick = index;
        if stage.action.involves(Verb::Express) {
            expressions.push(emotive_expression(agent, goal_id, &stage.note, ExpressionKind::Gesture));
        }
        if stage.action.involves(Verb::Think) {
            thoughts = wander(agent, goal_id)?;
        }
        if stage.memorable {
            let stored =
                agent
                    .stores
                    .record_experience(stage.note.clone(), &agent.emotion, stage.states.clone(), index);
            memory.push(MemoryLogEntry {
                origin: MemoryOrigin::Stage,
                goal_id: goal_id.to_string(),
                long_term: stored.long_term,
                record: stored.record,
            });
        }
        TraceStep {
            index,
            goal_id: goal_id.to_string(),
            label: stage.label.clone(),
            kind: StepKind::Stage,
            action: stage.action.clone(),
            states: stage.states.clone(),
            note: stage.note.clone(),
        }
    } else {
        agent.emotion = update_emotion(&agent.emotion, &EmotionVector::zero(), &agent.personality, 1.0, decay)?;
        let action = ActionDescriptor::verb(Verb::Observe);
        let states = agent.registry.derive(&action).unwrap_or_default();
        TraceStep {
            index,
            goal_id: goal_id.to_string(),
            label: "idle".into(),
            kind: StepKind::Idle,
            action,
            states,
            note: "idle".into(),
        }
    };
    agent.tick = index;

    let mut observations = Vec::new();
    if !percepts.is_empty() {
        let observation = match fuse(&percepts) {
            Ok(f) => Observation::Fused(f),
            Err(PerceptionError::Ambiguous { labels, .. }) => Observation::Ambiguous { labels },
            Err(e) => unreachable!("percepts are range-checked and share a tick: {e}"),
        };
        observations.push(ObservationEntry {
            tick: index,
            goal_id: goal_id.to_string(),
            observation,
        });
    }
    if halt {
        agent.alive = false;
    }

    Ok(CycleOutput {
        step,
        mode: agent.expression_mode(),
        emotion: agent.emotion,
        consumed,
        terminal,
        expressions,
        memory,
        observations,
        thoughts,
    })
}

/// Closes a goal: status update, one expression, one memory write.
fn close_goal(
    agent: &mut AgentState,
    goal_id: &str,
    result: TerminalResult,
    last_states: StateSeq,
) -> (Expression, MemoryLogEntry) {
    if let Some(g) = agent.goals.iter_mut().find(|g| g.id == goal_id) {
        g.status = match result {
            TerminalResult::Success => GoalStatus::Achieved,
            TerminalResult::Failure => GoalStatus::Failed,
        };
    }
    agent.active_plan = None;
    agent.pending_stimulus = None;
    agent.pending_terminal = None;
    let fallback = match result {
        TerminalResult::Success => ExpressionKind::Action,
        TerminalResult::Failure => ExpressionKind::Gesture,
    };
    let event = format!("{goal_id} {result}");
    let expression = emotive_expression(agent, goal_id, &event, fallback);
    let stored = agent
        .stores
        .record_experience(event, &agent.emotion, last_states, agent.tick);
    let entry = MemoryLogEntry {
        origin: MemoryOrigin::Terminal,
        goal_id: goal_id.to_string(),
        long_term: stored.long_term,
        record: stored.record,
    };
    (expression, entry)
}

/// Cycles allowed per goal before it is declared stalled.
fn cycle_budget(stages: usize, scripted_instincts: usize) -> u64 {
    (10 * (stages + 1) + scripted_instincts) as u64
}

/// Drives one goal cycle by cycle. [`run_goal`] runs it to the end; the
/// REPL steps it by hand.
#[derive(Debug, Clone)]
pub struct GoalDriver {
    goal_id: String,
    plan: Option<Plan>,
    events: StageEvents,
    cursor: usize,
    injected_for: Option<usize>,
    cycles: u64,
    budget: u64,
    terminal: Option<TerminalResult>,
    last_states: StateSeq,
    steps: Vec<StepRecord>,
    expressions: Vec<Expression>,
    memory: Vec<MemoryLogEntry>,
    observations: Vec<ObservationEntry>,
    thoughts: Vec<ThoughtRecord>,
}

impl GoalDriver {
    /// Plans the goal. Empty means produce a driver that is already failed.
    pub fn start(
        agent: &mut AgentState,
        goal_id: &str,
        means: &Means,
        events: StageEvents,
    ) -> Result<Self, ManagerError> {
        let idx = agent
            .goals
            .iter()
            .position(|g| g.id == goal_id)
            .ok_or_else(|| ManagerError::UnknownGoal(goal_id.to_string()))?;
        if agent.goals[idx].status != GoalStatus::Pending {
            return Err(ManagerError::GoalNotPending(goal_id.to_string()));
        }
        if let Some(p) = &agent.active_plan {
            return Err(ManagerError::PlanActive(p.goal_id.clone()));
        }
        if !agent.alive {
            return Err(ManagerError::Dead);
        }
        let registry = Arc::clone(&agent.registry);
        let (plan, terminal) = match plan_goal(&mut agent.goals[idx], means, &registry) {
            Ok(plan) => (Some(plan), None),
            Err(CognitionError::EmptyMeans(_)) => (None, Some(TerminalResult::Failure)),
            Err(e) => return Err(e.into()),
        };
        agent.active_plan = plan.clone();
        let scripted_instincts = events
            .values()
            .flatten()
            .filter(|e| matches!(e, AgentEvent::Instinct { .. }))
            .count();
        let stages = plan.as_ref().map_or(0, |p| p.stages.len());
        Ok(Self {
            goal_id: goal_id.to_string(),
            plan,
            events,
            cursor: 0,
            injected_for: None,
            cycles: 0,
            budget: cycle_budget(stages, scripted_instincts),
            terminal,
            last_states: StateSeq::empty(),
            steps: Vec::new(),
            expressions: Vec::new(),
            memory: Vec::new(),
            observations: Vec::new(),
            thoughts: Vec::new(),
        })
    }

    pub fn goal_id(&self) -> &str {
        &self.goal_id
    }

    pub fn thought_count(&self) -> usize {
        self.thoughts.len()
    }

    /// Thoughts recorded after the first `n`.
    pub fn thoughts_since(&self, n: usize) -> &[ThoughtRecord] {
        &self.thoughts[n.min(self.thoughts.len())..]
    }

    /// The stage that runs next unless a challenge intervenes.
    pub fn next_stage(&self) -> Option<&PlanStage> {
        self.plan.as_ref().and_then(|p| p.stages.get(self.cursor))
    }

    /// `Some` once the goal has reached an end.
    pub fn result(&self, agent: &AgentState) -> Option<TerminalResult> {
        if let Some(t) = self.terminal {
            return Some(t);
        }
        if self.next_stage().is_none() {
            return Some(TerminalResult::Success);
        }
        if !agent.alive {
            return Some(TerminalResult::Failure);
        }
        None
    }

    /// Runs one cycle against the pending stage. Events anchored to that
    /// stage are injected the first time it is pending.
    pub fn step(&mut self, agent: &mut AgentState) -> Result<&StepRecord, ManagerError> {
        let Some(stage) = self.plan.as_ref().and_then(|p| p.stages.get(self.cursor)) else {
            return Err(ManagerError::GoalNotPending(self.goal_id.clone()));
        };
        if self.cycles >= self.budget {
            agent.active_plan = None;
            return Err(ManagerError::Stalled {
                goal: self.goal_id.clone(),
                stage: stage.label.clone(),
                cycles: self.cycles,
            });
        }
        let injected = if self.injected_for != Some(self.cursor) {
            self.injected_for = Some(self.cursor);
            self.events.get(&stage.label).cloned().unwrap_or_default()
        } else {
            Vec::new()
        };
        let out = qualia_cycle(agent, &self.goal_id, Some(stage), injected)?;
        self.cycles += 1;
        self.last_states = out.step.states.clone();
        if out.consumed {
            self.cursor += 1;
            self.terminal = out.terminal;
        }
        self.expressions.extend(out.expressions);
        self.memory.extend(out.memory);
        self.observations.extend(out.observations);
        let (goal_id, label) = (&self.goal_id, &out.step.label);
        self.thoughts
            .extend(out.thoughts.into_iter().map(|thought| ThoughtRecord {
                goal_id: goal_id.clone(),
                stage: Some(label.clone()),
                tick: out.step.index,
                thought,
            }));
        self.steps.push(StepRecord {
            step: out.step,
            mode: out.mode,
            fear: out.emotion.fear,
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    /// Closes the goal with its result: one expression and one memory write.
    pub fn finish(mut self, agent: &mut AgentState) -> GoalRun {
        let result = self.result(agent).unwrap_or(TerminalResult::Failure);
        let (e, m) = close_goal(agent, &self.goal_id, result, self.last_states);
        self.expressions.push(e);
        self.memory.push(m);
        GoalRun {
            outcome: Outcome {
                goal_id: self.goal_id,
                result,
                trace: self.steps.iter().map(|s| s.step.clone()).collect(),
            },
            steps: self.steps,
            expressions: self.expressions,
            memory: self.memory,
            observations: self.observations,
            thoughts: self.thoughts,
        }
    }
}

/// Plans the goal and drives it to completion or a scripted terminal event.
/// Empty means fail the goal immediately.
pub fn run_goal(
    agent: &mut AgentState,
    goal_id: &str,
    means: &Means,
    events: &StageEvents,
) -> Result<GoalRun, ManagerError> {
    let mut driver = GoalDriver::start(agent, goal_id, means, events.clone())?;
    while driver.result(agent).is_none() {
        driver.step(agent)?;
    }
    Ok(driver.finish(agent))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Between goals: one wandering thought biased by the last goal and the
/// current emotion, then failed goals go back on the list.
pub fn post_goal_phase(agent: &mut AgentState, goal_tag: &str) -> Result<Vec<Thought>, ManagerError> {
    if let Some(p) = &agent.active_plan {
        return Err(ManagerError::PlanActive(p.goal_id.clone()));
    }
    let thoughts = wander(agent, goal_tag)?;
    agent.goals = revisit_failed(&agent.goals, agent.config.revisit);
    Ok(thoughts)
}
