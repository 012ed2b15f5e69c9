//! Engine configuration: `key=value` lines, `#` comments.
//!
//! Values are stored as given and range-checked by [`EngineConfig::validate`],
//! which reports every offending key at once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{ExpressionThreshold, InstinctKind, InstinctRates, MachineLoad, PersonalityProfile};
use crate::cognition::{RevisitPolicy, WalkParams};
use crate::memory::{DEFAULT_CAPACITY, DEFAULT_LONG_TERM_THRESHOLD};
use crate::registry::StateSeq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: bad value `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {}", keys.join(", "))]
    Invalid { keys: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstinctConfig {
    pub threshold: f64,
    pub weight: f64,
    pub initial: f64,
}

impl Default for InstinctConfig {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            weight: 1.0,
            initial: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub personality: PersonalityProfile,
    pub emotion_decay: f64,
    pub instincts: BTreeMap<InstinctKind, InstinctConfig>,
    pub rates: InstinctRates,
    pub load: MachineLoad,
    pub memory_capacity: i64,
    pub long_term_threshold: f64,
    pub expression: ExpressionThreshold,
    pub walk_steps: i64,
    pub walk_alpha: f64,
    pub walk_beta: f64,
    pub revisit: RevisitPolicy,
    /// State nominated when attending each kind of challenge.
    pub challenge_states: BTreeMap<InstinctKind, StateSeq>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let walk = WalkParams::default();
        Self {
            personality: PersonalityProfile::default(),
            emotion_decay: 0.5,
            instincts: InstinctKind::ALL
                .into_iter()
                .map(|k| (k, InstinctConfig::default()))
                .collect(),
            rates: InstinctRates::default(),
            load: MachineLoad::default(),
            memory_capacity: DEFAULT_CAPACITY as i64,
            long_term_threshold: DEFAULT_LONG_TERM_THRESHOLD,
            expression: ExpressionThreshold::default(),
            walk_steps: walk.steps as i64,
            walk_alpha: walk.alpha,
            walk_beta: walk.beta,
            revisit: RevisitPolicy::default(),
            challenge_states: [
                (InstinctKind::Pain, &[8][..]),
                (InstinctKind::Hunger, &[2][..]),
                (InstinctKind::Fatigue, &[3][..]),
            ]
            .into_iter()
            .map(|(k, ids)| (k, StateSeq::from_ids(ids).expect("valid default")))
            .collect(),
        }
    }
}

impl EngineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys and unparseable values are errors; ranges
    /// are checked later by [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<i64>().map_err(|_| bad());
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["emotion", "decay"] => self.emotion_decay = num()?,
            ["personality", t] => {
                let x = num()?;
                let p = &mut self.personality;
                match *t {
                    "openness" => p.openness = x,
                    "conscientiousness" => p.conscientiousness = x,
                    "extraversion" => p.extraversion = x,
                    "agreeableness" => p.agreeableness = x,
                    "neuroticism" => p.neuroticism = x,
                    _ => return Err(ConfigError::UnknownKey(key.into())),
                }
            }
            ["instinct", kind, field] => {
                let kind: InstinctKind = kind.parse().map_err(|_| ConfigError::UnknownKey(key.into()))?;
                match (*field, kind) {
                    ("rate", InstinctKind::Hunger) => self.rates.hunger = num()?,
                    ("rate", InstinctKind::Fatigue) => self.rates.fatigue = num()?,
                    ("threshold", _) => self.instinct_mut(kind).threshold = num()?,
                    ("weight", _) => self.instinct_mut(kind).weight = num()?,
                    ("initial", _) => self.instinct_mut(kind).initial = num()?,
                    _ => return Err(ConfigError::UnknownKey(key.into())),
                }
            }
            ["load", "battery_drain"] => self.load.battery_drain = num()?,
            ["load", "process"] => self.load.process_load = num()?,
            ["memory", "capacity"] => self.memory_capacity = int()?,
            ["memory", "long_term_threshold"] => self.long_term_threshold = num()?,
            ["expression", "base"] => self.expression.base = num()?,
            ["expression", "k"] => self.expression.neuroticism_slope = num()?,
            ["thought", "steps"] => self.walk_steps = int()?,
            ["thought", "alpha"] => self.walk_alpha = num()?,
            ["thought", "beta"] => self.walk_beta = num()?,
            ["revisit", "factor"] => self.revisit.factor = num()?,
            ["revisit", "floor"] => self.revisit.floor = num()?,
            ["challenge", kind, "states"] => {
                let kind: InstinctKind = kind.parse().map_err(|_| ConfigError::UnknownKey(key.into()))?;
                let seq: StateSeq = value.parse().map_err(|_| bad())?;
                if seq.is_empty() {
                    return Err(bad());
                }
                self.challenge_states.insert(kind, seq);
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    fn instinct_mut(&mut self, kind: InstinctKind) -> &mut InstinctConfig {
        self.instincts.entry(kind).or_default()
    }

    pub fn instinct(&self, kind: InstinctKind) -> InstinctConfig {
        self.instincts.get(&kind).copied().unwrap_or_default()
    }

    pub fn walk(&self) -> WalkParams {
        WalkParams {
            steps: self.walk_steps.max(1) as usize,
            alpha: self.walk_alpha,
            beta: self.walk_beta,
        }
    }

    pub fn memory_capacity(&self) -> usize {
        self.memory_capacity.max(1) as usize
    }

    /// Lists every key whose value is out of range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let mut keys = Vec::new();
        for (name, v) in self.personality.traits() {
            if !unit(v) {
                keys.push(format!("personality.{name}"));
            }
        }
        if !(self.emotion_decay > 0.0 && self.emotion_decay <= 1.0) {
            keys.push("emotion.decay".into());
        }
        for (kind, c) in &self.instincts {
            if !unit(c.threshold) {
                keys.push(format!("instinct.{kind}.threshold"));
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                keys.push(format!("instinct.{kind}.weight"));
            }
            if !unit(c.initial) {
                keys.push(format!("instinct.{kind}.initial"));
            }
        }
        if !(self.rates.hunger >= 0.0 && self.rates.hunger.is_finite()) {
            keys.push("instinct.hunger.rate".into());
        }
        if !(self.rates.fatigue >= 0.0 && self.rates.fatigue.is_finite()) {
            keys.push("instinct.fatigue.rate".into());
        }
        if !unit(self.load.battery_drain) {
            keys.push("load.battery_drain".into());
        }
        if !unit(self.load.process_load) {
            keys.push("load.process".into());
        }
        if self.memory_capacity < 1 {
            keys.push("memory.capacity".into());
        }
        if !unit(self.long_term_threshold) {
            keys.push("memory.long_term_threshold".into());
        }
        if !self.expression.base.is_finite() {
            keys.push("expression.base".into());
        }
        if !(self.expression.neuroticism_slope >= 0.0 && self.expression.neuroticism_slope.is_finite()) {
            keys.push("expression.k".into());
        }
        if self.walk_steps < 1 {
            keys.push("thought.steps".into());
        }
        if !(self.walk_alpha >= 0.0 && self.walk_alpha.is_finite()) {
            keys.push("thought.alpha".into());
        }
        if !(self.walk_beta >= 0.0 && self.walk_beta.is_finite()) {
            keys.push("thought.beta".into());
        }
        if !(self.revisit.factor > 0.0 && self.revisit.factor <= 1.0) {
            keys.push("revisit.factor".into());
        }
        if !unit(self.revisit.floor) {
            keys.push("revisit.floor".into());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid { keys })
        }
    }

    /// Every key with its current value, one per line, in a stable order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "emotion.decay={}", self.emotion_decay);
        for (name, v) in self.personality.traits() {
            let _ = writeln!(s, "personality.{name}={v}");
        }
        let _ = writeln!(s, "instinct.hunger.rate={}", self.rates.hunger);
        let _ = writeln!(s, "instinct.fatigue.rate={}", self.rates.fatigue);
        for (kind, c) in &self.instincts {
            let _ = writeln!(s, "instinct.{kind}.threshold={}", c.threshold);
            let _ = writeln!(s, "instinct.{kind}.weight={}", c.weight);
            let _ = writeln!(s, "instinct.{kind}.initial={}", c.initial);
        }
        let _ = writeln!(s, "load.battery_drain={}", self.load.battery_drain);
        let _ = writeln!(s, "load.process={}", self.load.process_load);
        let _ = writeln!(s, "memory.capacity={}", self.memory_capacity);
        let _ = writeln!(s, "memory.long_term_threshold={}", self.long_term_threshold);
        let _ = writeln!(s, "expression.base={}", self.expression.base);
        let _ = writeln!(s, "expression.k={}", self.expression.neuroticism_slope);
        let _ = writeln!(s, "thought.steps={}", self.walk_steps);
        let _ = writeln!(s, "thought.alpha={}", self.walk_alpha);
        let _ = writeln!(s, "thought.beta={}", self.walk_beta);
        let _ = writeln!(s, "revisit.factor={}", self.revisit.factor);
        let _ = writeln!(s, "revisit.floor={}", self.revisit.floor);
        for (kind, seq) in &self.challenge_states {
            let _ = writeln!(s, "challenge.{kind}.states={seq}");
        }
        s
    }
}
