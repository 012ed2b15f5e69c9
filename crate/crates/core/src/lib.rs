//! Deterministic simulator of an affective machine-consciousness model.
//!
//! An agent works through goals stage by stage. Each stage's action maps to
//! an ordered sequence of numbered consciousness states, while emotions,
//! instinctive drives, memory and perception evolve alongside. Runs are
//! reproducible: the same scenario and seed give the same report.
//!
//! - [`registry`]: states, actions and the action-to-state rule table.
//! - [`affect`]: emotions, personality, instincts and expression mode.
//! - [`memory`]: short- and long-term stores with salience-ranked recall.
//! - [`perception`]: percept parsing and multi-modal fusion.
//! - [`cognition`]: knowledge graph, biased thought walks, goals and plans.
//! - [`manager`]: the agent state and its per-step cycle.
//! - [`scenario`] and [`runner`]: the scenario language and batch runs.
//! - [`repl`]: an interactive session over the same engine.

pub mod affect;
pub mod bundled;
pub mod cognition;
pub mod config;
pub mod manager;
pub mod memory;
pub mod perception;
pub mod registry;
pub mod repl;
pub mod runner;
pub mod scenario;

pub use affect::{Emotion, EmotionVector, ExpressionMode, InstinctKind, PersonalityProfile};
pub use cognition::{Goal, GoalStatus, KnowledgeGraph};
pub use config::EngineConfig;
pub use manager::{init_agent, qualia_cycle, run_goal, AgentEvent, AgentState, TerminalResult};
pub use registry::{ActionDescriptor, Registry, StateId, StateSeq, Verb};
pub use runner::{diff_trace, run_scenario, Engine, RunReport, TraceDiff};
pub use scenario::{parse_scenario, Scenario, StageRef};
