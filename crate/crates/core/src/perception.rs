//! Symbolic percepts and multi-modal confidence fusion.
//!
//! Recognition is not modelled; a percept is a labelled confidence from one
//! sensory channel. Channels that agree on a label reinforce each other by
//! noisy-or, and a missing channel simply does not contribute.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ambiguous observation: {labels:?} tie at confidence {confidence}")]
    Ambiguous { labels: Vec<String>, confidence: f64 },
    #[error("column {column}: {message}")]
    Parse { column: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Vision,
    Audio,
    Touch,
    Other,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Vision, Modality::Audio, Modality::Touch, Modality::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Vision => "vision",
            Modality::Audio => "audio",
            Modality::Touch => "touch",
            Modality::Other => "other",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown modality `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percept {
    pub modality: Modality,
    pub label: String,
    pub confidence: f64,
    pub tick: u64,
}

impl fmt::Display for Percept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "percept {} {} conf {}", self.modality, self.label, self.confidence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedObservation {
    pub label: String,
    pub confidence: f64,
    pub contributing: Vec<Modality>,
}

/// Fuses same-tick percepts into the best-supported label.
///
/// Within a label, each modality contributes its strongest confidence and
/// modalities combine as `1 - prod(1 - c)`. A label seen by one modality
/// keeps that confidence exactly.
pub fn fuse(percepts: &[Percept]) -> Result<FusedObservation, PerceptionError> {
    let first = percepts
        .first()
        .ok_or_else(|| PerceptionError::InvalidArgument("no percepts to fuse".into()))?;
    if percepts.iter().any(|p| p.tick != first.tick) {
        return Err(PerceptionError::InvalidArgument(
            "percepts span more than one tick".into(),
        ));
    }
    if let Some(p) = percepts.iter().find(|p| !(0.0..=1.0).contains(&p.confidence)) {
        return Err(PerceptionError::InvalidArgument(format!(
            "confidence {} outside [0, 1]",
            p.confidence
        )));
    }

    let mut by_label: BTreeMap<&str, BTreeMap<Modality, f64>> = BTreeMap::new();
    for p in percepts {
        let slot = by_label
            .entry(p.label.as_str())
            .or_default()
            .entry(p.modality)
            .or_insert(0.0);
        *slot = slot.max(p.confidence);
    }

    let scored: Vec<(&str, f64, Vec<Modality>)> = by_label
        .into_iter()
        .map(|(label, per_modality)| {
            let strongest = per_modality.values().fold(0.0f64, |a, &c| a.max(c));
            let miss = per_modality.values().fold(1.0f64, |acc, &c| acc * (1.0 - c));
            // noisy-or is never below its strongest input; max() absorbs rounding
            let confidence = if per_modality.len() == 1 {
                strongest
            } else {
                (1.0 - miss).max(strongest).min(1.0)
            };
            (label, confidence, per_modality.into_keys().collect())
        })
        .collect();

    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<_> = scored.iter().filter(|s| s.1 == best).collect();
    if winners.len() > 1 {
        return Err(PerceptionError::Ambiguous {
            labels: winners.iter().map(|w| w.0.to_string()).collect(),
            confidence: best,
        });
    }
    let (label, confidence, contributing) = winners[0].clone();
    Ok(FusedObservation {
        label: label.to_string(),
        confidence,
        contributing,
    })
}

/// Parses `percept <modality> <label> conf <c>`. Errors carry the 1-based
/// column of the offending token.
pub fn ingest_percept(raw_line: &str) -> Result<Percept, PerceptionError> {
    let toks = columns(raw_line);
    let err = |column: usize, message: String| PerceptionError::Parse { column, message };
    let at = |i: usize| toks.get(i).copied();
    let end = raw_line.trim_end().len() + 1;

    match at(0) {
        Some((_, "percept")) => {}
        Some((c, other)) => return Err(err(c, format!("expected `percept`, found `{other}`"))),
        None => return Err(err(1, "empty percept line".into())),
    }
    let (mc, m) = at(1).ok_or_else(|| err(end, "missing modality".into()))?;
    let modality: Modality = m.parse().map_err(|e| err(mc, e))?;
    let (_, label) = at(2).ok_or_else(|| err(end, "missing label".into()))?;
    match at(3) {
        Some((_, "conf")) => {}
        Some((c, other)) => return Err(err(c, format!("expected `conf`, found `{other}`"))),
        None => return Err(err(end, "missing `conf`".into())),
    }
    let (cc, c) = at(4).ok_or_else(|| err(end, "missing confidence".into()))?;
    let confidence: f64 = c.parse().map_err(|_| err(cc, format!("`{c}` is not a number")))?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(err(cc, format!("confidence {confidence} outside [0, 1]")));
    }
    if let Some((c, extra)) = at(5) {
        return Err(err(c, format!("unexpected `{extra}`")));
    }
    Ok(Percept {
        modality,
        label: label.to_string(),
        confidence,
        tick: 0,
    })
}

/// Whitespace-separated tokens with 1-based starting columns.
fn columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}
