//! Scenario execution, run reports, trace text and trace comparison.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cognition::{CognitionError, Goal, GoalStatus, KnowledgeGraph};
use crate::config::{ConfigError, EngineConfig};
use crate::manager::{
    init_agent, post_goal_phase, run_goal, Expression, ManagerError, MemoryLogEntry, ObservationEntry, StepRecord,
    TerminalResult, ThoughtRecord,
};
use crate::registry::{Registry, StateError, StateSeq, StepKind, TraceStep};
use crate::scenario::{Scenario, StageRef};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("at {at}: {source}")]
    Runtime {
        at: String,
        #[source]
        source: ManagerError,
    },
}

impl RunError {
    fn at_goal(goal: &str, source: ManagerError) -> Self {
        let at = match &source {
            ManagerError::Plan(CognitionError::Stage { label, .. }) => format!("{goal}.{label}"),
            ManagerError::Stalled { stage, .. } => format!("{goal}.{stage}"),
            _ => goal.to_string(),
        };
        RunError::Runtime { at, source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalOutcome {
    pub goal_id: String,
    pub result: TerminalResult,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub expressions: Vec<Expression>,
    pub memory_log: Vec<MemoryLogEntry>,
    pub observations: Vec<ObservationEntry>,
    pub thoughts: Vec<ThoughtRecord>,
    pub outcomes: Vec<GoalOutcome>,
    pub final_goals: Vec<Goal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub stage_steps: usize,
    pub challenge_steps: usize,
    pub expressions: usize,
    pub memory_writes: usize,
    pub long_term_writes: usize,
    pub goals: Vec<(String, GoalStatus)>,
}

impl RunReport {
    pub fn trace(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().map(|s| &s.step)
    }

    /// State sequences of executed plan stages, challenge steps left out.
    pub fn stage_states(&self) -> Vec<(StageRef, StateSeq)> {
        self.trace()
            .filter(|s| s.kind == StepKind::Stage)
            .map(|s| (StageRef::new(&s.goal_id, &s.label), s.states.clone()))
            .collect()
    }

    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format_trace_line(s));
            out.push('\n');
        }
        out
    }

    pub fn memory_text(&self) -> String {
        let mut out = String::new();
        for m in &self.memory_log {
            out.push_str(&m.export_line());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            steps: self.steps.len(),
            stage_steps: self.trace().filter(|s| s.kind == StepKind::Stage).count(),
            challenge_steps: self.trace().filter(|s| s.kind == StepKind::Challenge).count(),
            expressions: self.expressions.len(),
            memory_writes: self.memory_log.len(),
            long_term_writes: self.memory_log.iter().filter(|m| m.long_term).count(),
            goals: self.final_goals.iter().map(|g| (g.id.clone(), g.status)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable report: trace, expressions, thoughts, memory log.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# scenario \"{}\" seed {}", self.scenario, self.seed);
        out.push_str(&self.trace_text());
        for e in &self.expressions {
            let _ = writeln!(
                out,
                "# expression tick={} goal={} kind={:?} mode={} {}",
                e.tick,
                e.goal_id,
                e.kind,
                e.mode.short(),
                e.payload
            );
        }
        for o in &self.outcomes {
            let _ = writeln!(out, "# outcome {} {} steps={}", o.goal_id, o.result, o.steps);
        }
        for t in &self.thoughts {
            let _ = writeln!(
                out,
                "# thought goal={} stage={} tick={} trigger={:?} path={}",
                t.goal_id,
                t.stage.as_deref().unwrap_or("-"),
                t.tick,
                t.thought.trigger,
                t.thought.path.join(">")
            );
        }
        for m in &self.memory_log {
            let _ = writeln!(out, "# memory {}", m.export_line());
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// `step <n> <goal>.<label> states=[..] action=<verb> mode=<vol|invol> fear=<x> note="..."`
pub fn format_trace_line(s: &StepRecord) -> String {
    format!(
        "step {} {}.{} states=[{}] action={} mode={} fear={:.3} note=\"{}\"",
        s.step.index,
        s.step.goal_id,
        s.step.label,
        s.step.states,
        s.step.action,
        s.mode.short(),
        s.fear,
        escape(&s.step.note)
    )
}

/// The parts of a trace line needed for comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub index: u64,
    pub at: StageRef,
    pub states: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Reads `step` lines; blank lines and `#` comments are skipped. State ids
/// are kept raw so out-of-range ids can be reported by validation.
pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>, TraceParseError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| TraceParseError { line: n + 1, message };
        let mut toks = line.split_whitespace();
        if toks.next() != Some("step") {
            return Err(err("expected `step`".into()));
        }
        let index: u64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err("missing step index".into()))?;
        let at = toks.next().ok_or_else(|| err("missing <goal>.<label>".into()))?;
        let (goal, label) = at
            .split_once('.')
            .ok_or_else(|| err(format!("expected <goal>.<label>, found `{at}`")))?;
        let states = toks
            .next()
            .and_then(|t| t.strip_prefix("states=["))
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| err("missing states=[...]".into()))?;
        let states = if states.is_empty() {
            Vec::new()
        } else {
            states
                .split(',')
                .map(|s| s.parse::<i64>().map_err(|_| err(format!("`{s}` is not a state id"))))
                .collect::<Result<_, _>>()?
        };
        out.push(TraceLine {
            index,
            at: StageRef::new(goal, label),
            states,
        });
    }
    Ok(out)
}

impl TraceLine {
    pub fn state_seq(&self) -> Result<StateSeq, StateError> {
        StateSeq::from_ids(&self.states)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub position: usize,
    pub expected_at: StageRef,
    pub actual_at: StageRef,
    pub expected: StateSeq,
    pub actual: StateSeq,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDiff {
    pub mismatches: Vec<Mismatch>,
    /// `actual.len() - expected.len()`.
    pub length_delta: i64,
}

impl TraceDiff {
    pub fn is_empty(&self) -> bool {
        self.mismatches.is_empty() && self.length_delta == 0
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        for m in &self.mismatches {
            let _ = writeln!(
                out,
                "position {}: expected {} [{}], got {} [{}]",
                m.position + 1,
                m.expected_at,
                m.expected,
                m.actual_at,
                m.actual
            );
        }
        if self.length_delta != 0 {
            let _ = writeln!(out, "length differs by {}", self.length_delta);
        }
        out
    }
}

/// Position-by-position comparison. Order within a sequence is significant
/// and a differing stage reference at the same position is a mismatch.
pub fn diff_trace(actual: &[(StageRef, StateSeq)], expected: &[(StageRef, StateSeq)]) -> TraceDiff {
    let mismatches = actual
        .iter()
        .zip(expected)
        .enumerate()
        .filter(|(_, (a, e))| a != e)
        .map(|(position, (a, e))| Mismatch {
            position,
            expected_at: e.0.clone(),
            actual_at: a.0.clone(),
            expected: e.1.clone(),
            actual: a.1.clone(),
        })
        .collect();
    TraceDiff {
        mismatches,
        length_delta: actual.len() as i64 - expected.len() as i64,
    }
}

/// Compares a run's executed stages with the scenario's `expect` lines.
///
/// `strict` compares the whole stage trace position by position, so every
/// executed stage must be expected. Otherwise only stages that carry an
/// expectation are compared, still in order.
pub fn check_expectations(scenario: &Scenario, report: &RunReport, strict: bool) -> TraceDiff {
    let expected: Vec<_> = scenario
        .expected
        .iter()
        .map(|x| (x.at.clone(), x.states.clone()))
        .collect();
    let mut actual = report.stage_states();
    if !strict {
        actual.retain(|(at, _)| expected.iter().any(|(e, _)| e == at));
    }
    diff_trace(&actual, &expected)
}

/// Registry, knowledge graph and base configuration for running scenarios.
#[derive(Debug, Clone)]
pub struct Engine {
    pub registry: Arc<Registry>,
    pub graph: Arc<KnowledgeGraph>,
    pub config: EngineConfig,
}

impl Engine {
    pub fn bundled() -> Self {
        Self {
            registry: Arc::new(Registry::bundled()),
            graph: Arc::new(KnowledgeGraph::bundled()),
            config: EngineConfig::default(),
        }
    }

    /// Runs every goal in order, each followed by the between-goals phase.
    /// Only thought generation draws on `seed`.
    pub fn run(&self, scenario: &Scenario, seed: u64) -> Result<RunReport, RunError> {
        let config = scenario.apply_config(&self.config)?;
        let mut agent =
            init_agent(&config, Arc::clone(&self.graph), Arc::clone(&self.registry), seed).map_err(|e| match e {
                ManagerError::Config(c) => RunError::Config(c),
                other => RunError::at_goal("init", other),
            })?;
        agent.goals = scenario.goals.iter().map(|g| g.goal.clone()).collect();

        let mut report = RunReport {
            scenario: scenario.name.clone(),
            seed,
            steps: Vec::new(),
            expressions: Vec::new(),
            memory_log: Vec::new(),
            observations: Vec::new(),
            thoughts: Vec::new(),
            outcomes: Vec::new(),
            final_goals: Vec::new(),
        };

        for sg in &scenario.goals {
            if !agent.alive {
                break;
            }
            let id = sg.goal.id.as_str();
            let run =
                run_goal(&mut agent, id, &sg.means, &scenario.events_for(id)).map_err(|e| RunError::at_goal(id, e))?;
            report.outcomes.push(GoalOutcome {
                goal_id: id.to_string(),
                result: run.outcome.result,
                steps: run.steps.len(),
            });
            report.steps.extend(run.steps);
            report.expressions.extend(run.expressions);
            report.memory_log.extend(run.memory);
            report.observations.extend(run.observations);
            report.thoughts.extend(run.thoughts);
            let thoughts = post_goal_phase(&mut agent, id).map_err(|e| RunError::at_goal(id, e))?;
            report
                .thoughts
                .extend(thoughts.into_iter().map(|thought| ThoughtRecord {
                    goal_id: id.to_string(),
                    stage: None,
                    tick: agent.tick,
                    thought,
                }));
        }
        agent.alive = false;
        report.final_goals = agent.goals;
        Ok(report)
    }
}

/// Runs a scenario on the bundled registry, graph and default configuration.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<RunReport, RunError> {
    Engine::bundled().run(scenario, seed)
}
