//! Consciousness-state registry and the action-to-state derivation table.
//!
//! States are a closed set of ten numbered modes. Which states an action
//! passes through is data, not code: a [`RuleTable`] maps an action's verb
//! and modifier set to an ordered [`StateSeq`]. Both load from the same
//! line-oriented file (see `data/registry.txt`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::Modality;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("invalid state id {0}: expected 1..=10")]
    InvalidState(i64),
    #[error("unknown action `{0}`: no rule for this verb")]
    UnknownAction(String),
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("modifier `{0}` repeats the main verb")]
    ModifierIsVerb(Verb),
    #[error("state {0} appears twice in one sequence")]
    DuplicateState(StateId),
    #[error("line {line}: {message}")]
    Load { line: usize, message: String },
}

/// Numbered consciousness state, 1 through 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct StateId(u8);

impl StateId {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 10;

    pub fn new(id: i64) -> Result<Self, StateError> {
        if (Self::MIN as i64..=Self::MAX as i64).contains(&id) {
            Ok(Self(id as u8))
        } else {
            Err(StateError::InvalidState(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = StateId> {
        (Self::MIN..=Self::MAX).map(StateId)
    }
}

impl TryFrom<u8> for StateId {
    type Error = StateError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v as i64)
    }
}

impl From<StateId> for u8 {
    fn from(s: StateId) -> u8 {
        s.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Physical,
    Metaphysical,
}

impl FromStr for Layer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "physical" => Ok(Layer::Physical),
            "metaphysical" => Ok(Layer::Metaphysical),
            other => Err(format!("unknown layer `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDescriptor {
    pub id: StateId,
    pub name: String,
    pub layer: Layer,
}

/// Action vocabulary. The declaration order is the canonical modifier order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Perceive,
    Decide,
    Act,
    Communicate,
    Emote,
    Express,
    Recall,
    Relax,
    Think,
    Observe,
    Wait,
}

impl Verb {
    pub const ALL: [Verb; 11] = [
        Verb::Perceive,
        Verb::Decide,
        Verb::Act,
        Verb::Communicate,
        Verb::Emote,
        Verb::Express,
        Verb::Recall,
        Verb::Relax,
        Verb::Think,
        Verb::Observe,
        Verb::Wait,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Perceive => "perceive",
            Verb::Decide => "decide",
            Verb::Act => "act",
            Verb::Communicate => "communicate",
            Verb::Emote => "emote",
            Verb::Express => "express",
            Verb::Recall => "recall",
            Verb::Relax => "relax",
            Verb::Think => "think",
            Verb::Observe => "observe",
            Verb::Wait => "wait",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = StateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| StateError::UnknownVerb(s.to_string()))
    }
}

/// What an agent does in one plan stage: a main verb plus modifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionDescriptor {
    verb: Verb,
    modifiers: BTreeSet<Verb>,
    channel: Option<Modality>,
}

impl ActionDescriptor {
    pub fn new(
        verb: Verb,
        modifiers: impl IntoIterator<Item = Verb>,
        channel: Option<Modality>,
    ) -> Result<Self, StateError> {
        let modifiers: BTreeSet<Verb> = modifiers.into_iter().collect();
        if modifiers.contains(&verb) {
            return Err(StateError::ModifierIsVerb(verb));
        }
        Ok(Self {
            verb,
            modifiers,
            channel,
        })
    }

    pub fn verb(verb: Verb) -> Self {
        Self {
            verb,
            modifiers: BTreeSet::new(),
            channel: None,
        }
    }

    pub fn main_verb(&self) -> Verb {
        self.verb
    }

    pub fn modifiers(&self) -> &BTreeSet<Verb> {
        &self.modifiers
    }

    pub fn channel(&self) -> Option<Modality> {
        self.channel
    }

    /// True if the verb or any modifier is `v`.
    pub fn involves(&self, v: Verb) -> bool {
        self.verb == v || self.modifiers.contains(&v)
    }

    /// `verb+mod+mod`, modifiers in canonical order.
    pub fn key(&self) -> String {
        let mut s = self.verb.as_str().to_string();
        for m in &self.modifiers {
            s.push('+');
            s.push_str(m.as_str());
        }
        s
    }
}

impl FromStr for ActionDescriptor {
    type Err = StateError;
    /// Parses `verb[+modifier...]` (no channel).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('+');
        let verb: Verb = parts.next().unwrap_or_default().parse()?;
        let mods = parts.map(str::parse).collect::<Result<Vec<Verb>, _>>()?;
        ActionDescriptor::new(verb, mods, None)
    }
}

impl fmt::Display for ActionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Ordered, duplicate-free sequence of states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<StateId>", into = "Vec<StateId>")]
pub struct StateSeq(Vec<StateId>);

impl StateSeq {
    pub fn new(states: Vec<StateId>) -> Result<Self, StateError> {
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(*s) {
                return Err(StateError::DuplicateState(*s));
            }
        }
        Ok(Self(states))
    }

    pub fn from_ids(ids: &[i64]) -> Result<Self, StateError> {
        Self::new(ids.iter().map(|&i| StateId::new(i)).collect::<Result<_, _>>()?)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }

    pub fn ids(&self) -> Vec<u8> {
        self.0.iter().map(|s| s.get()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.0.contains(&s)
    }
}

impl TryFrom<Vec<StateId>> for StateSeq {
    type Error = StateError;
    fn try_from(v: Vec<StateId>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<StateSeq> for Vec<StateId> {
    fn from(s: StateSeq) -> Self {
        s.0
    }
}

impl fmt::Display for StateSeq {
    /// Comma-separated ids, no brackets.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for StateSeq {
    type Err = StateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        if s.trim().is_empty() {
            return Ok(StateSeq::empty());
        }
        let ids = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<i64>()
                    .map_err(|_| StateError::Load {
                        line: 0,
                        message: format!("`{t}` is not a state id"),
                    })
                    .and_then(StateId::new)
            })
            .collect::<Result<Vec<_>, _>>()?;
        StateSeq::new(ids)
    }
}

/// Whether a trace step came from executing a plan stage or attending a challenge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Stage,
    Challenge,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: u64,
    pub goal_id: String,
    pub label: String,
    pub kind: StepKind,
    pub action: ActionDescriptor,
    pub states: StateSeq,
    pub note: String,
}

/// Verb+modifier set to state sequence lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleTable {
    rules: BTreeMap<(Verb, BTreeSet<Verb>), StateSeq>,
}

impl RuleTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, action: &ActionDescriptor, states: StateSeq) -> Option<StateSeq> {
        self.rules.insert((action.verb, action.modifiers.clone()), states)
    }

    pub fn get(&self, action: &ActionDescriptor) -> Option<&StateSeq> {
        self.rules.get(&(action.verb, action.modifiers.clone()))
    }

    fn base(&self, verb: Verb) -> Option<&StateSeq> {
        self.rules.get(&(verb, BTreeSet::new()))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Verbs that have no base rule.
    pub fn uncovered_verbs(&self) -> Vec<Verb> {
        Verb::ALL.into_iter().filter(|v| self.base(*v).is_none()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActionDescriptor, &StateSeq)> {
        self.rules.iter().map(|((v, m), s)| {
            (
                ActionDescriptor {
                    verb: *v,
                    modifiers: m.clone(),
                    channel: None,
                },
                s,
            )
        })
    }
}

/// Ordered state sequence for an action: the exact rule for its verb and
/// modifier set if one exists, otherwise the base rules of the verb and then
/// each modifier concatenated with repeats dropped.
pub fn derive_states(action: &ActionDescriptor, rules: &RuleTable) -> Result<StateSeq, StateError> {
    if let Some(seq) = rules.get(action) {
        return Ok(seq.clone());
    }
    let mut out: Vec<StateId> = Vec::new();
    for verb in std::iter::once(action.verb).chain(action.modifiers.iter().copied()) {
        let base = rules
            .base(verb)
            .ok_or_else(|| StateError::UnknownAction(verb.as_str().to_string()))?;
        for s in base.states() {
            if !out.contains(s) {
                out.push(*s);
            }
        }
    }
    if out.is_empty() {
        return Err(StateError::UnknownAction(action.key()));
    }
    StateSeq::new(out)
}

/// State descriptors plus the derivation rule table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    states: BTreeMap<StateId, StateDescriptor>,
    rules: RuleTable,
}

impl Registry {
    pub fn bundled() -> Self {
        Self::parse(crate::bundled::REGISTRY).expect("bundled registry is valid")
    }

    /// Parses `state` and `rule` declarations. Every id 1..=10 must be
    /// declared exactly once, names must be unique, and rules may only name
    /// declared states.
    pub fn parse(text: &str) -> Result<Self, StateError> {
        let mut states = BTreeMap::new();
        let mut names = BTreeSet::new();
        let mut pending_rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| StateError::Load { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match keyword {
                "state" => {
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(err("expected `state <id> <name> <layer>`".into()));
                    }
                    let id = toks[0]
                        .parse::<i64>()
                        .map_err(|_| err(format!("`{}` is not a state id", toks[0])))
                        .and_then(|i| StateId::new(i).map_err(|e| err(e.to_string())))?;
                    let layer: Layer = toks[toks.len() - 1].parse().map_err(err)?;
                    let name = toks[1..toks.len() - 1].join(" ").trim_matches('"').to_string();
                    if name.is_empty() {
                        return Err(err("empty state name".into()));
                    }
                    if !names.insert(name.clone()) {
                        return Err(err(format!("duplicate state name `{name}`")));
                    }
                    if states.insert(id, StateDescriptor { id, name, layer }).is_some() {
                        return Err(err(format!("state {id} declared twice")));
                    }
                }
                "rule" => {
                    let (lhs, rhs) = rest
                        .split_once("->")
                        .ok_or_else(|| err("expected `rule <action> -> <ids>`".into()))?;
                    let action: ActionDescriptor = lhs.trim().parse().map_err(|e: StateError| err(e.to_string()))?;
                    let seq: StateSeq = rhs.trim().parse().map_err(|e: StateError| err(e.to_string()))?;
                    if seq.is_empty() {
                        return Err(err("rule produces no states".into()));
                    }
                    pending_rules.push((line_no, action, seq));
                }
                other => return Err(err(format!("unknown declaration `{other}`"))),
            }
        }
        if let Some(missing) = StateId::all().find(|id| !states.contains_key(id)) {
            return Err(StateError::Load {
                line: 0,
                message: format!("state {missing} is not declared"),
            });
        }
        let mut rules = RuleTable::new();
        for (line, action, seq) in pending_rules {
            if rules.insert(&action, seq).is_some() {
                return Err(StateError::Load {
                    line,
                    message: format!("duplicate rule for `{}`", action.key()),
                });
            }
        }
        Ok(Self { states, rules })
    }

    pub fn resolve_state(&self, id: StateId) -> &StateDescriptor {
        // every id is present after a successful parse
        &self.states[&id]
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &StateDescriptor> {
        self.states.values()
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn derive(&self, action: &ActionDescriptor) -> Result<StateSeq, StateError> {
        derive_states(action, &self.rules)
    }
}

/// Looks up an integer state id in the registry.
pub fn resolve_state(registry: &Registry, id: i64) -> Result<&StateDescriptor, StateError> {
    Ok(registry.resolve_state(StateId::new(id)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Finding {
    DuplicateIndex { position: usize, index: u64 },
    NonMonotoneIndex { position: usize, previous: u64, index: u64 },
    EmptyStates { position: usize },
    UnknownState { position: usize, id: i64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// A trace step before state ids have been checked, as read from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawStep {
    pub index: u64,
    pub states: Vec<i64>,
}

impl From<&TraceStep> for RawStep {
    fn from(s: &TraceStep) -> Self {
        Self {
            index: s.index,
            states: s.states.ids().into_iter().map(i64::from).collect(),
        }
    }
}

/// Reports repeated or decreasing indices, empty state lists and ids outside 1..=10.
pub fn validate_trace(trace: &[RawStep]) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    let mut previous: Option<u64> = None;
    for (position, step) in trace.iter().enumerate() {
        if !seen.insert(step.index) {
            findings.push(Finding::DuplicateIndex {
                position,
                index: step.index,
            });
        } else if let Some(prev) = previous {
            if step.index < prev {
                findings.push(Finding::NonMonotoneIndex {
                    position,
                    previous: prev,
                    index: step.index,
                });
            }
        }
        previous = Some(step.index);
        if step.states.is_empty() {
            findings.push(Finding::EmptyStates { position });
        }
        for &id in &step.states {
            if StateId::new(id).is_err() {
                findings.push(Finding::UnknownState { position, id });
            }
        }
    }
    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn action(s: &str) -> ActionDescriptor {
        s.parse().unwrap()
    }

    #[test]
    fn resolves_reconstructed_names() {
        let reg = Registry::bundled();
        let eight = resolve_state(&reg, 8).unwrap();
        assert_eq!(eight.name, "emotional state");
        assert_eq!(eight.layer, Layer::Metaphysical);
        let five = resolve_state(&reg, 5).unwrap();
        assert_eq!(five.name, "motor control");
        assert_eq!(five.layer, Layer::Physical);
        assert_eq!(resolve_state(&reg, 0), Err(StateError::InvalidState(0)));
        assert_eq!(resolve_state(&reg, 11), Err(StateError::InvalidState(11)));
    }

    #[test]
    fn derive_scenario_examples() {
        let rules = Registry::bundled().rules().clone();
        let look = ActionDescriptor::new(Verb::Perceive, [Verb::Decide], Some(Modality::Vision)).unwrap();
        assert_eq!(derive_states(&look, &rules).unwrap().ids(), vec![2, 6]);
        assert_eq!(
            derive_states(&action("communicate+emote+act+express"), &rules)
                .unwrap()
                .ids(),
            vec![2, 5, 8, 10]
        );
        assert_eq!(
            derive_states(&action("recall+relax"), &rules).unwrap().ids(),
            vec![2, 9, 3]
        );
    }

    #[test]
    fn composes_from_base_rules() {
        let rules = Registry::bundled().rules().clone();
        // no explicit rule: think(7) then observe(1)
        assert_eq!(
            derive_states(&action("think+observe"), &rules).unwrap().ids(),
            vec![7, 1]
        );
        // perceive and communicate both map to 6; the repeat is dropped
        assert_eq!(
            derive_states(&action("perceive+communicate"), &rules).unwrap().ids(),
            vec![6]
        );
    }

    #[test]
    fn missing_verb_is_unknown_action() {
        let mut rules = RuleTable::new();
        rules.insert(&action("act"), StateSeq::from_ids(&[5]).unwrap());
        assert!(matches!(
            derive_states(&action("think"), &rules),
            Err(StateError::UnknownAction(_))
        ));
        assert!(matches!(
            derive_states(&action("act+think"), &rules),
            Err(StateError::UnknownAction(_))
        ));
    }

    #[test]
    fn bundled_rules_cover_vocabulary() {
        assert!(Registry::bundled().rules().uncovered_verbs().is_empty());
    }

    #[test]
    fn modifier_equal_to_verb_rejected() {
        assert_eq!(
            "act+act".parse::<ActionDescriptor>(),
            Err(StateError::ModifierIsVerb(Verb::Act))
        );
    }

    #[test]
    fn duplicate_states_rejected() {
        assert!(StateSeq::from_ids(&[2, 6, 2]).is_err());
    }

    #[test]
    fn registry_load_errors_carry_line() {
        let text = "state 1 a metaphysical\nstate 12 b physical\n";
        match Registry::parse(text) {
            Err(StateError::Load { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let mut full: String = (1..=10).map(|i| format!("state {i} s{i} physical\n")).collect();
        full.push_str("rule act -> 5,11\n");
        assert!(matches!(Registry::parse(&full), Err(StateError::Load { line: 11, .. })));
    }

    #[test]
    fn validate_trace_findings() {
        let ok = [
            RawStep {
                index: 1,
                states: vec![2, 6],
            },
            RawStep {
                index: 2,
                states: vec![5],
            },
        ];
        assert!(validate_trace(&ok).is_clean());

        let bad_id = [RawStep {
            index: 1,
            states: vec![2, 11],
        }];
        assert_eq!(
            validate_trace(&bad_id).findings,
            vec![Finding::UnknownState { position: 0, id: 11 }]
        );

        let unordered = [
            RawStep {
                index: 2,
                states: vec![2],
            },
            RawStep {
                index: 1,
                states: vec![2],
            },
        ];
        assert_eq!(
            validate_trace(&unordered).findings,
            vec![Finding::NonMonotoneIndex {
                position: 1,
                previous: 2,
                index: 1
            }]
        );

        let dup_empty = [
            RawStep {
                index: 1,
                states: vec![2],
            },
            RawStep {
                index: 1,
                states: vec![],
            },
        ];
        assert_eq!(
            validate_trace(&dup_empty).findings,
            vec![
                Finding::DuplicateIndex { position: 1, index: 1 },
                Finding::EmptyStates { position: 1 }
            ]
        );
    }
}
