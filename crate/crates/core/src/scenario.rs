//! Scenario scripts: a line-oriented DSL describing goals, their stages,
//! events anchored to stages, and the expected state sequence per stage.
//!
//! ```text
//! scenario "<name>"
//! config <key>=<value>
//! goal <goal-id> "<description>" priority <0..1>
//! stage <goal-id>.<label> <verb>[+modifier...] [channel=<modality>] [memorable=<bool>] "<note>"
//! event at <goal-id>.<label> percept <modality> <label> conf <0..1>
//! event at <goal-id>.<label> stimulus <emotion>=<0..1>[,...]
//! event at <goal-id>.<label> instinct <pain|hunger|fatigue>=<0..1>
//! event at <goal-id>.<label> terminal <success|failure>
//! expect <goal-id>.<label> states <id>,<id>,...
//! halt
//! ```
//!
//! `#` starts a comment outside quoted strings. Nothing may follow `halt`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{Emotion, EmotionVector, InstinctKind};
use crate::cognition::{Goal, Means, MeansStep};
use crate::config::EngineConfig;
use crate::manager::{AgentEvent, StageEvents, TerminalResult};
use crate::perception::{ingest_percept, Modality, Percept, PerceptionError};
use crate::registry::{ActionDescriptor, StateSeq, Verb};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StageRef {
    pub goal: String,
    pub label: String,
}

impl StageRef {
    pub fn new(goal: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            goal: goal.into(),
            label: label.into(),
        }
    }
}

impl fmt::Display for StageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.goal, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGoal {
    pub goal: Goal,
    pub means: Means,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSpec {
    Percept(Percept),
    Stimulus(Vec<(Emotion, f64)>),
    Instinct(InstinctKind, f64),
    Terminal(TerminalResult),
}

impl EventSpec {
    pub fn to_agent_event(&self) -> AgentEvent {
        match self {
            EventSpec::Percept(p) => AgentEvent::Percept(p.clone()),
            EventSpec::Stimulus(parts) => {
                let mut v = EmotionVector::zero();
                for &(e, level) in parts {
                    v.set(e, v.get(e).max(level));
                }
                AgentEvent::Stimulus(v)
            }
            EventSpec::Instinct(kind, level) => AgentEvent::Instinct {
                kind: *kind,
                level: *level,
            },
            EventSpec::Terminal(t) => AgentEvent::Terminal(*t),
        }
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::Percept(p) => write!(f, "{p}"),
            EventSpec::Stimulus(parts) => {
                f.write_str("stimulus ")?;
                for (i, (e, v)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}={v}")?;
                }
                Ok(())
            }
            EventSpec::Instinct(k, v) => write!(f, "instinct {k}={v}"),
            EventSpec::Terminal(t) => write!(f, "terminal {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub at: StageRef,
    pub event: EventSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub at: StageRef,
    pub states: StateSeq,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub config: Vec<(String, String)>,
    pub goals: Vec<ScenarioGoal>,
    pub events: Vec<ScenarioEvent>,
    pub expected: Vec<Expectation>,
    pub halt: bool,
}

impl Scenario {
    /// Events for one goal, keyed by stage label, in script order.
    pub fn events_for(&self, goal_id: &str) -> StageEvents {
        let mut out = StageEvents::new();
        for e in self.events.iter().filter(|e| e.at.goal == goal_id) {
            out.entry(e.at.label.clone())
                .or_default()
                .push(e.event.to_agent_event());
        }
        out
    }

    pub fn stage_count(&self) -> usize {
        self.goals.iter().map(|g| g.means.steps.len()).sum()
    }

    /// Base config with this scenario's overrides applied.
    pub fn apply_config(&self, base: &EngineConfig) -> Result<EngineConfig, crate::config::ConfigError> {
        let mut cfg = base.clone();
        for (k, v) in &self.config {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for Scenario {
    /// Canonical script text; parses back to an equal scenario.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", quote(&self.name))?;
        for (k, v) in &self.config {
            writeln!(f, "config {k}={v}")?;
        }
        for g in &self.goals {
            writeln!(
                f,
                "goal {} {} priority {}",
                g.goal.id,
                quote(&g.goal.description),
                g.goal.priority
            )?;
            for s in &g.means.steps {
                write!(f, "stage {}.{} {}", g.goal.id, s.label, s.action)?;
                if let Some(ch) = s.action.channel() {
                    write!(f, " channel={ch}")?;
                }
                if let Some(m) = s.memorable {
                    write!(f, " memorable={m}")?;
                }
                writeln!(f, " {}", quote(&s.note))?;
            }
        }
        for e in &self.events {
            writeln!(f, "event at {} {}", e.at, e.event)?;
        }
        for x in &self.expected {
            writeln!(f, "expect {} states {}", x.at, x.states)?;
        }
        if self.halt {
            writeln!(f, "halt")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    column: usize,
    quoted: bool,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let column = i + 1;
            let mut text = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError {
                            line: line_no,
                            column,
                            message: "unterminated string".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                        text.push(chars[i + 1]);
                        i += 2;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Token {
                text,
                column,
                quoted: true,
            });
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            out.push(Token {
                text: chars[start..i].iter().collect(),
                column: start + 1,
                quoted: false,
            });
        }
    }
    Ok(out)
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

struct LineParser<'a> {
    line: usize,
    line_len: usize,
    toks: &'a [Token],
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err_at(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.line_len + 1
    }

    fn next(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| self.err_at(self.end_column(), format!("missing {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn bare(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        let t = self.next(what)?;
        if t.quoted {
            return Err(self.err_at(t.column, format!("expected {what}, found a string")));
        }
        Ok(t)
    }

    fn quoted(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        let t = self.next(what)?;
        if !t.quoted {
            return Err(self.err_at(t.column, format!("expected quoted {what}")));
        }
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.bare(&format!("`{kw}`"))?;
        if t.text != kw {
            return Err(self.err_at(t.column, format!("expected `{kw}`, found `{}`", t.text)));
        }
        Ok(())
    }

    fn ident(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        let t = self.bare(what)?;
        if !is_ident(&t.text) {
            return Err(self.err_at(t.column, format!("invalid {what} `{}`", t.text)));
        }
        Ok(t)
    }

    fn unit_number(&self, text: &str, column: usize, what: &str) -> Result<f64, ParseError> {
        let v: f64 = text
            .parse()
            .map_err(|_| self.err_at(column, format!("{what} `{text}` is not a number")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(self.err_at(column, format!("{what} {v} outside [0, 1]")));
        }
        Ok(v)
    }

    fn stage_ref(&mut self) -> Result<(StageRef, usize), ParseError> {
        let t = self.bare("<goal-id>.<label>")?;
        let (g, l) = t
            .text
            .split_once('.')
            .filter(|(g, l)| is_ident(g) && is_ident(l))
            .ok_or_else(|| self.err_at(t.column, format!("expected <goal-id>.<label>, found `{}`", t.text)))?;
        Ok((StageRef::new(g, l), t.column))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) => Err(self.err_at(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

/// Parses the event part of a line (`percept ...`, `stimulus ...`,
/// `instinct ...`, `terminal ...`) starting at the parser's position.
fn event_body(p: &mut LineParser<'_>, raw: &str) -> Result<EventSpec, ParseError> {
    let kind = p.bare("event kind")?;
    let event = match kind.text.as_str() {
        "percept" => {
            // reuse the percept line parser on the tail of this line
            let offset = kind.column - 1;
            let tail: String = raw.chars().skip(offset).collect();
            let tail = tail.split('#').next().unwrap_or("");
            let percept = ingest_percept(tail).map_err(|e| match e {
                PerceptionError::Parse { column, message } => p.err_at(offset + column, message),
                other => p.err_at(kind.column, other.to_string()),
            })?;
            p.pos = p.toks.len();
            EventSpec::Percept(percept)
        }
        "stimulus" => {
            let t = p.bare("emotion=level list")?;
            let mut parts = Vec::new();
            for item in t.text.split(',') {
                let (e, v) = item
                    .split_once('=')
                    .ok_or_else(|| p.err_at(t.column, format!("expected <emotion>=<level>, found `{item}`")))?;
                let e: Emotion = e
                    .parse()
                    .map_err(|err: crate::affect::AffectError| p.err_at(t.column, err.to_string()))?;
                parts.push((e, p.unit_number(v, t.column, "stimulus level")?));
            }
            EventSpec::Stimulus(parts)
        }
        "instinct" => {
            let t = p.bare("instinct=level")?;
            let (k, v) = t
                .text
                .split_once('=')
                .ok_or_else(|| p.err_at(t.column, "expected <instinct>=<level>"))?;
            let k: InstinctKind = k
                .parse()
                .map_err(|e: crate::affect::AffectError| p.err_at(t.column, e.to_string()))?;
            EventSpec::Instinct(k, p.unit_number(v, t.column, "instinct level")?)
        }
        "terminal" => {
            let t = p.bare("success or failure")?;
            EventSpec::Terminal(match t.text.as_str() {
                "success" => TerminalResult::Success,
                "failure" => TerminalResult::Failure,
                other => return Err(p.err_at(t.column, format!("expected success or failure, found `{other}`"))),
            })
        }
        other => return Err(p.err_at(kind.column, format!("unknown event kind `{other}`"))),
    };
    Ok(event)
}

/// Parses a bare event line such as `stimulus fear=1` or
/// `percept audio hello conf 0.5`.
pub fn parse_event(line: &str) -> Result<EventSpec, ParseError> {
    let toks = tokenize(line, 1)?;
    let mut p = LineParser {
        line: 1,
        line_len: line.chars().count(),
        toks: &toks,
        pos: 0,
    };
    let event = event_body(&mut p, line)?;
    p.finish()?;
    Ok(event)
}

/// Parses a scenario script. Returns the first error with its line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut sc = Scenario::default();
    let mut named = false;
    let mut goal_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut stages: BTreeSet<StageRef> = BTreeSet::new();
    // references to check once every stage is known: (ref, line, column)
    let mut refs: Vec<(StageRef, usize, usize)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let toks = tokenize(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line,
            line_len: raw.chars().count(),
            toks: &toks,
            pos: 0,
        };
        if sc.halt {
            return Err(p.err_at(toks[0].column, "statement after `halt`"));
        }
        let kw = p.bare("keyword")?;
        match kw.text.as_str() {
            "scenario" => {
                if named {
                    return Err(p.err_at(kw.column, "scenario named twice"));
                }
                sc.name = p.quoted("scenario name")?.text.clone();
                named = true;
            }
            "config" => {
                let t = p.bare("key=value")?;
                let (k, v) = t
                    .text
                    .split_once('=')
                    .ok_or_else(|| p.err_at(t.column, "expected <key>=<value>"))?;
                EngineConfig::default()
                    .set(k, v)
                    .map_err(|e| p.err_at(t.column, e.to_string()))?;
                sc.config.push((k.to_string(), v.to_string()));
            }
            "goal" => {
                let id = p.ident("goal id")?;
                if goal_index.contains_key(&id.text) {
                    return Err(p.err_at(id.column, format!("goal `{}` declared twice", id.text)));
                }
                let desc = p.quoted("goal description")?.text.clone();
                p.keyword("priority")?;
                let pt = p.bare("priority")?;
                let priority = p.unit_number(&pt.text, pt.column, "priority")?;
                goal_index.insert(id.text.clone(), sc.goals.len());
                sc.goals.push(ScenarioGoal {
                    goal: Goal::new(id.text.clone(), desc, priority),
                    means: Means::default(),
                });
            }
            "stage" => {
                let (at, col) = p.stage_ref()?;
                let gi = *goal_index
                    .get(&at.goal)
                    .ok_or_else(|| p.err_at(col, format!("stage for undeclared goal `{}`", at.goal)))?;
                if !stages.insert(at.clone()) {
                    return Err(p.err_at(col, format!("stage `{at}` declared twice")));
                }
                let vt = p.bare("action")?;
                let mut parts = vt.text.split('+');
                let verb: Verb = parts
                    .next()
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e: crate::registry::StateError| p.err_at(vt.column, e.to_string()))?;
                let mods = parts
                    .map(str::parse::<Verb>)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| p.err_at(vt.column, e.to_string()))?;
                let mut channel = None;
                let mut memorable = None;
                let note = loop {
                    let t = p.next("stage note")?;
                    if t.quoted {
                        break t.text.clone();
                    }
                    if let Some(m) = t.text.strip_prefix("channel=") {
                        channel = Some(m.parse::<Modality>().map_err(|e| p.err_at(t.column, e))?);
                    } else if let Some(b) = t.text.strip_prefix("memorable=") {
                        memorable = Some(match b {
                            "true" => true,
                            "false" => false,
                            _ => return Err(p.err_at(t.column, format!("memorable must be true or false, got `{b}`"))),
                        });
                    } else {
                        return Err(p.err_at(t.column, format!("unexpected `{}`", t.text)));
                    }
                };
                let action =
                    ActionDescriptor::new(verb, mods, channel).map_err(|e| p.err_at(vt.column, e.to_string()))?;
                sc.goals[gi].means.steps.push(MeansStep {
                    label: at.label,
                    action,
                    note,
                    memorable,
                });
            }
            "event" => {
                p.keyword("at")?;
                let (at, col) = p.stage_ref()?;
                let event = event_body(&mut p, raw)?;
                refs.push((at.clone(), line, col));
                sc.events.push(ScenarioEvent { at, event });
            }
            "expect" => {
                let (at, col) = p.stage_ref()?;
                p.keyword("states")?;
                let t = p.bare("state list")?;
                let ids = t
                    .text
                    .split(',')
                    .map(|s| {
                        s.parse::<i64>()
                            .map_err(|_| p.err_at(t.column, format!("`{s}` is not a state id")))
                            .and_then(|i| {
                                crate::registry::StateId::new(i).map_err(|e| p.err_at(t.column, e.to_string()))
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let states = StateSeq::new(ids).map_err(|e| p.err_at(t.column, e.to_string()))?;
                refs.push((at.clone(), line, col));
                sc.expected.push(Expectation { at, states });
            }
            "halt" => sc.halt = true,
            other => return Err(p.err_at(kw.column, format!("unknown keyword `{other}`"))),
        }
        p.finish()?;
    }

    for (r, line, column) in refs {
        if !stages.contains(&r) {
            return Err(ParseError {
                line,
                column,
                message: format!("reference to undeclared stage `{r}`"),
            });
        }
    }
    Ok(sc)
}
