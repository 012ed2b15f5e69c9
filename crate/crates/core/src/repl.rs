//! Interactive session: declare goals and stages line by line, inject events
//! and step the agent one cycle at a time.
//!
//! Lines starting with a scenario keyword (`goal`, `stage`, `event at`, ...)
//! extend the session script, which is re-parsed as a whole so the same
//! validation applies as for script files. A bare event (`stimulus fear=1`,
//! `percept audio bell conf 0.9`, ...) goes straight to the agent's queue.

use std::sync::Arc;

use thiserror::Error;

use crate::cognition::GoalStatus;
use crate::config::ConfigError;
use crate::manager::{init_agent, post_goal_phase, AgentState, GoalDriver, ManagerError};
use crate::runner::{format_trace_line, Engine};
use crate::scenario::{parse_event, parse_scenario, ParseError, Scenario};

const DECLARATIONS: [&str; 7] = ["scenario", "config", "goal", "stage", "event", "expect", "halt"];
const EVENTS: [&str; 4] = ["percept", "stimulus", "instinct", "terminal"];

pub const HELP: &str = "\
declarations: scenario, config, goal, stage, event at, expect (same syntax as script files)
events:       percept <modality> <label> conf <c> | stimulus <emotion>=<v>[,..] |
              instinct <kind>=<v> | terminal <success|failure>
commands:     step            run one cycle of the current goal
              run             run every remaining goal to its end
              status          tick, emotion, drives and goals
              memory          short- and long-term stores
              recall <words>  memories matching every word
              script          the session script so far
              help            this text
              quit | exit     leave";

#[derive(Debug, Error)]
pub enum ReplError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Manager(#[from] ManagerError),
    #[error("config cannot change once the agent has started")]
    Started,
    #[error("no pending goal; declare one with `goal`")]
    NoGoal,
    #[error("unknown command `{0}` (try `help`)")]
    UnknownCommand(String),
}

/// What a line produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reply {
    pub lines: Vec<String>,
    pub quit: bool,
}

impl Reply {
    fn text(lines: Vec<String>) -> Self {
        Self { lines, quit: false }
    }
}

#[derive(Debug)]
pub struct Repl {
    engine: Engine,
    seed: u64,
    script: Vec<String>,
    scenario: Scenario,
    agent: Option<AgentState>,
    driver: Option<GoalDriver>,
    /// Goals from the script that have been started, in order.
    started: Vec<String>,
}

impl Repl {
    pub fn new(engine: Engine, seed: u64) -> Self {
        Self {
            engine,
            seed,
            script: Vec::new(),
            scenario: Scenario::default(),
            agent: None,
            driver: None,
            started: Vec::new(),
        }
    }

    pub fn agent(&self) -> Option<&AgentState> {
        self.agent.as_ref()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn handle_line(&mut self, line: &str) -> Result<Reply, ReplError> {
        let trimmed = line.trim();
        let Some(word) = trimmed.split_whitespace().next() else {
            return Ok(Reply::default());
        };
        if word.starts_with('#') {
            return Ok(Reply::default());
        }
        if DECLARATIONS.contains(&word) {
            return self.declare(trimmed);
        }
        if EVENTS.contains(&word) {
            let event = parse_event(trimmed)?;
            let agent = self.ensure_agent()?;
            agent.inject(event.to_agent_event());
            return Ok(Reply::text(vec![format!("queued {event}")]));
        }
        let rest = trimmed[word.len()..].trim();
        match word {
            "step" => self.step(),
            "run" => self.run(),
            "status" => Ok(Reply::text(self.status())),
            "memory" => Ok(Reply::text(self.memory())),
            "recall" => Ok(Reply::text(self.recall(rest))),
            "script" => Ok(Reply::text(self.script.clone())),
            "help" => Ok(Reply::text(HELP.lines().map(str::to_string).collect())),
            "quit" | "exit" => Ok(Reply {
                lines: Vec::new(),
                quit: true,
            }),
            other => Err(ReplError::UnknownCommand(other.to_string())),
        }
    }

    fn declare(&mut self, line: &str) -> Result<Reply, ReplError> {
        if line.starts_with("config") && self.agent.is_some() {
            return Err(ReplError::Started);
        }
        let mut text = String::new();
        for l in self.script.iter().map(String::as_str).chain([line]) {
            text.push_str(l);
            text.push('\n');
        }
        let parsed = parse_scenario(&text).map_err(|mut e| {
            // report columns against the line as typed
            if e.line == self.script.len() + 1 {
                e.line = 1;
            }
            e
        })?;
        if line.starts_with("config") {
            parsed.apply_config(&self.engine.config)?.validate()?;
        }
        let halt = parsed.halt;
        self.script.push(line.to_string());
        self.scenario = parsed;
        if halt {
            return Ok(Reply {
                lines: vec!["halted".into()],
                quit: true,
            });
        }
        Ok(Reply::text(vec!["ok".into()]))
    }

    fn ensure_agent(&mut self) -> Result<&mut AgentState, ReplError> {
        if self.agent.is_none() {
            let config = self.scenario.apply_config(&self.engine.config)?;
            let agent = init_agent(
                &config,
                Arc::clone(&self.engine.graph),
                Arc::clone(&self.engine.registry),
                self.seed,
            )?;
            self.agent = Some(agent);
        }
        Ok(self.agent.as_mut().expect("agent just created"))
    }

    /// Starts the next declared goal that has not run yet.
    fn start_next(&mut self) -> Result<bool, ReplError> {
        let Some(sg) = self
            .scenario
            .goals
            .iter()
            .find(|g| !self.started.contains(&g.goal.id))
            .cloned()
        else {
            return Ok(false);
        };
        let events = self.scenario.events_for(&sg.goal.id);
        let agent = self.ensure_agent()?;
        if agent.goal(&sg.goal.id).is_none() {
            agent.goals.push(sg.goal.clone());
        }
        let driver = GoalDriver::start(agent, &sg.goal.id, &sg.means, events)?;
        self.started.push(sg.goal.id.clone());
        self.driver = Some(driver);
        Ok(true)
    }

    fn step(&mut self) -> Result<Reply, ReplError> {
        if self.driver.is_none() && !self.start_next()? {
            return Err(ReplError::NoGoal);
        }
        let mut lines = Vec::new();
        let agent = self.agent.as_mut().expect("driver implies agent");
        let driver = self.driver.as_mut().expect("driver started");
        if driver.result(agent).is_none() {
            let seen = driver.thought_count();
            let rec = driver.step(agent)?;
            lines.push(format_trace_line(rec));
            for t in driver.thoughts_since(seen) {
                lines.push(format!("thought {}", t.thought.path.join(" > ")));
            }
        }
        if driver.result(agent).is_some() {
            lines.extend(self.finish_goal()?);
        }
        Ok(Reply::text(lines))
    }

    fn finish_goal(&mut self) -> Result<Vec<String>, ReplError> {
        let agent = self.agent.as_mut().expect("driver implies agent");
        let driver = self.driver.take().expect("driver started");
        let id = driver.goal_id().to_string();
        let run = driver.finish(agent);
        let mut lines = vec![format!("goal {id} {}", run.outcome.result)];
        for e in run.expressions.iter().filter(|e| e.tick == agent.tick) {
            lines.push(format!("expression {} ({})", e.payload, e.mode.short()));
        }
        for t in post_goal_phase(agent, &id)? {
            lines.push(format!("thought {}", t.path.join(" > ")));
        }
        Ok(lines)
    }

    fn run(&mut self) -> Result<Reply, ReplError> {
        let mut lines = Vec::new();
        loop {
            if self.driver.is_none() && !self.start_next()? {
                break;
            }
            lines.extend(self.step()?.lines);
        }
        if lines.is_empty() {
            lines.push("nothing to run".into());
        }
        Ok(Reply::text(lines))
    }

    fn status(&self) -> Vec<String> {
        let Some(agent) = &self.agent else {
            return vec![format!(
                "not started; {} goal(s), {} stage(s) declared",
                self.scenario.goals.len(),
                self.scenario.stage_count()
            )];
        };
        let emotion = agent
            .emotion
            .components()
            .iter()
            .map(|(e, v)| format!("{e}={v:.3}"))
            .collect::<Vec<_>>()
            .join(" ");
        let drives = agent
            .instincts
            .iter()
            .map(|s| format!("{}={:.3}", s.kind, s.level))
            .collect::<Vec<_>>()
            .join(" ");
        let mut lines = vec![
            format!("tick {} mode {}", agent.tick, agent.expression_mode().short()),
            format!("emotion {emotion}"),
            format!("drives {drives}"),
        ];
        for g in &agent.goals {
            let marker = match (&self.driver, g.status) {
                (Some(d), _) if d.goal_id() == g.id => " <- current",
                (_, GoalStatus::Failed) => " (failed)",
                _ => "",
            };
            lines.push(format!(
                "goal {} {:?} priority {:.2}{marker}",
                g.id, g.status, g.priority
            ));
        }
        if let Some(stage) = self.driver.as_ref().and_then(|d| d.next_stage()) {
            lines.push(format!("next stage {} [{}]", stage.label, stage.states));
        }
        lines
    }

    fn memory(&self) -> Vec<String> {
        let Some(agent) = &self.agent else {
            return vec!["no memories".into()];
        };
        let fmt = |r: &crate::memory::MemoryRecord| {
            format!(
                "#{} tick {} salience {:.3} [{}] {}",
                r.id, r.tick, r.salience, r.states, r.event
            )
        };
        let mut lines = vec![format!(
            "short-term ({}/{})",
            agent.stores.short_term().len(),
            agent.stores.capacity()
        )];
        lines.extend(agent.stores.short_term().map(fmt));
        lines.push(format!("long-term ({})", agent.stores.long_term().len()));
        lines.extend(agent.stores.long_term().iter().map(fmt));
        lines
    }

    fn recall(&self, query: &str) -> Vec<String> {
        let hits = self
            .agent
            .as_ref()
            .map(|a| a.stores.recall(query, 5))
            .unwrap_or_default();
        if hits.is_empty() {
            return vec!["no match".into()];
        }
        hits.iter()
            .map(|r| format!("#{} salience {:.3} [{}] {}", r.id, r.salience, r.states, r.event))
            .collect()
    }
}
