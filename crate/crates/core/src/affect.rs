//! Personality, emotion dynamics, instinct drives and the attribute taxonomy.
//!
//! Everything here is a pure value transformation. Emotions decay toward
//! zero each step and are pushed up by stimuli; fear is amplified by
//! neuroticism. Instincts (pain, hunger, fatigue) compete for attention and
//! the strongest one over its threshold becomes a [`Challenge`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffectError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonalityProfile {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl Default for PersonalityProfile {
    fn default() -> Self {
        Self {
            openness: 0.5,
            conscientiousness: 0.5,
            extraversion: 0.5,
            agreeableness: 0.5,
            neuroticism: 0.5,
        }
    }
}

impl PersonalityProfile {
    pub fn traits(&self) -> [(&'static str, f64); 5] {
        [
            ("openness", self.openness),
            ("conscientiousness", self.conscientiousness),
            ("extraversion", self.extraversion),
            ("agreeableness", self.agreeableness),
            ("neuroticism", self.neuroticism),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Fear,
    Joy,
    Hope,
    Anger,
    Sadness,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Hope,
        Emotion::Anger,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Hope => "hope",
            Emotion::Anger => "anger",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = AffectError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| AffectError::InvalidArgument(format!("unknown emotion `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmotionVector {
    pub fear: f64,
    pub joy: f64,
    pub hope: f64,
    pub anger: f64,
    pub sadness: f64,
    pub surprise: f64,
}

impl EmotionVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(e: Emotion, level: f64) -> Self {
        let mut v = Self::zero();
        v.set(e, level);
        v
    }

    pub fn get(&self, e: Emotion) -> f64 {
        match e {
            Emotion::Fear => self.fear,
            Emotion::Joy => self.joy,
            Emotion::Hope => self.hope,
            Emotion::Anger => self.anger,
            Emotion::Sadness => self.sadness,
            Emotion::Surprise => self.surprise,
        }
    }

    pub fn set(&mut self, e: Emotion, level: f64) {
        let slot = match e {
            Emotion::Fear => &mut self.fear,
            Emotion::Joy => &mut self.joy,
            Emotion::Hope => &mut self.hope,
            Emotion::Anger => &mut self.anger,
            Emotion::Sadness => &mut self.sadness,
            Emotion::Surprise => &mut self.surprise,
        };
        *slot = level;
    }

    pub fn components(&self) -> [(Emotion, f64); 6] {
        Emotion::ALL.map(|e| (e, self.get(e)))
    }

    pub fn max_component(&self) -> f64 {
        self.components().iter().fold(0.0, |m, &(_, v)| m.max(v))
    }

    /// Strongest component; ties go to the earlier emotion in [`Emotion::ALL`].
    /// `None` when every component is zero.
    pub fn dominant(&self) -> Option<Emotion> {
        let mut best: Option<(Emotion, f64)> = None;
        for (e, v) in self.components() {
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((e, v));
            }
        }
        best.map(|(e, _)| e)
    }

    /// Component-wise maximum.
    pub fn merge_max(&self, other: &EmotionVector) -> EmotionVector {
        let mut out = *self;
        for e in Emotion::ALL {
            out.set(e, self.get(e).max(other.get(e)));
        }
        out
    }

    pub fn in_bounds(&self) -> bool {
        self.components().iter().all(|&(_, v)| (0.0..=1.0).contains(&v))
    }
}

/// One emotion step: each component moves to
/// `decay^dt * e + (1 - decay^dt) * gain * stimulus`, clamped to [0, 1].
/// Gain is `1 + neuroticism` for fear and 1 for the rest.
pub fn update_emotion(
    e: &EmotionVector,
    stimulus: &EmotionVector,
    p: &PersonalityProfile,
    dt: f64,
    decay: f64,
) -> Result<EmotionVector, AffectError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(AffectError::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(AffectError::InvalidArgument(format!(
            "decay must be in (0, 1], got {decay}"
        )));
    }
    let keep = decay.powf(dt);
    let mut out = EmotionVector::zero();
    for em in Emotion::ALL {
        let gain = if em == Emotion::Fear { 1.0 + p.neuroticism } else { 1.0 };
        let v = keep * e.get(em) + (1.0 - keep) * gain * stimulus.get(em);
        out.set(em, clamp01(v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstinctKind {
    Pain,
    Hunger,
    Fatigue,
}

impl InstinctKind {
    /// Tie-break priority order: pain, hunger, fatigue.
    pub const ALL: [InstinctKind; 3] = [InstinctKind::Pain, InstinctKind::Hunger, InstinctKind::Fatigue];

    pub fn as_str(self) -> &'static str {
        match self {
            InstinctKind::Pain => "pain",
            InstinctKind::Hunger => "hunger",
            InstinctKind::Fatigue => "fatigue",
        }
    }

    /// The emotion a challenge of this kind stirs while being attended.
    pub fn felt_as(self) -> Emotion {
        match self {
            InstinctKind::Pain => Emotion::Fear,
            InstinctKind::Hunger => Emotion::Anger,
            InstinctKind::Fatigue => Emotion::Sadness,
        }
    }
}

impl fmt::Display for InstinctKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstinctKind {
    type Err = AffectError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstinctKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AffectError::InvalidArgument(format!("unknown instinct `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstinctSignal {
    pub kind: InstinctKind,
    pub level: f64,
    pub threshold: f64,
    pub weight: f64,
}

impl InstinctSignal {
    pub fn new(kind: InstinctKind, level: f64, threshold: f64, weight: f64) -> Self {
        Self {
            kind,
            level,
            threshold,
            weight,
        }
    }
}

/// Machine analogue of bodily drives: battery drain feeds hunger and
/// process load feeds fatigue. Both in [0, 1]; zero means an idle machine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MachineLoad {
    pub battery_drain: f64,
    pub process_load: f64,
}

/// Per-step growth rates for the drives that grow on their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstinctRates {
    pub hunger: f64,
    pub fatigue: f64,
}

impl Default for InstinctRates {
    fn default() -> Self {
        Self {
            hunger: 0.02,
            fatigue: 0.03,
        }
    }
}

/// Advances drives by `dt`. Hunger grows at `rates.hunger * (1 + battery_drain)`,
/// fatigue at `rates.fatigue * (1 + process_load)`; pain only changes when
/// injected. A non-positive `dt` leaves every level as it was.
pub fn tick_instincts(
    signals: &[InstinctSignal],
    dt: f64,
    load: &MachineLoad,
    rates: &InstinctRates,
) -> Vec<InstinctSignal> {
    let dt = if dt > 0.0 { dt } else { 0.0 };
    signals
        .iter()
        .map(|s| {
            let growth = match s.kind {
                InstinctKind::Pain => 0.0,
                InstinctKind::Hunger => rates.hunger * (1.0 + clamp01(load.battery_drain)),
                InstinctKind::Fatigue => rates.fatigue * (1.0 + clamp01(load.process_load)),
            };
            InstinctSignal {
                level: clamp01(s.level + growth * dt),
                ..*s
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengeSource {
    Instinct(InstinctKind),
    External(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Challenge {
    pub source: ChallengeSource,
    pub severity: f64,
}

/// Picks the over-threshold signal with the largest `weight * level`.
/// Equal scores resolve pain, then hunger, then fatigue.
pub fn select_challenge(signals: &[InstinctSignal]) -> Option<Challenge> {
    let mut best: Option<&InstinctSignal> = None;
    for s in signals.iter().filter(|s| s.level >= s.threshold) {
        let better = match best {
            None => true,
            Some(b) => {
                let (sa, sb) = (s.weight * s.level, b.weight * b.level);
                sa > sb || (sa == sb && s.kind < b.kind)
            }
        };
        if better {
            best = Some(s);
        }
    }
    best.map(|s| Challenge {
        source: ChallengeSource::Instinct(s.kind),
        severity: clamp01(s.level),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Personality,
    Intelligence,
    Creativity,
    Knowledge,
    Memory,
    ExtraSensoryPerception,
    Emotions,
    Expression,
    MotorControl,
    Pain,
    Hunger,
    BodilyFunctions,
}

impl Attribute {
    pub const ALL: [Attribute; 12] = [
        Attribute::Personality,
        Attribute::Intelligence,
        Attribute::Creativity,
        Attribute::Knowledge,
        Attribute::Memory,
        Attribute::ExtraSensoryPerception,
        Attribute::Emotions,
        Attribute::Expression,
        Attribute::MotorControl,
        Attribute::Pain,
        Attribute::Hunger,
        Attribute::BodilyFunctions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Personality => "personality",
            Attribute::Intelligence => "intelligence",
            Attribute::Creativity => "creativity",
            Attribute::Knowledge => "knowledge",
            Attribute::Memory => "memory",
            Attribute::ExtraSensoryPerception => "extra-sensory perception",
            Attribute::Emotions => "emotions",
            Attribute::Expression => "expression",
            Attribute::MotorControl => "motor control",
            Attribute::Pain => "pain",
            Attribute::Hunger => "hunger",
            Attribute::BodilyFunctions => "bodily functions",
        }
    }
}

impl FromStr for Attribute {
    type Err = AffectError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        Attribute::ALL
            .into_iter()
            .find(|a| a.name().replace('-', " ") == norm)
            .ok_or_else(|| AffectError::InvalidArgument(format!("unknown attribute `{s}`")))
    }
}

/// What an attribute bears on: decision making, behaviour, motivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Implication {
    D,
    B,
    M,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub attribute: Attribute,
    pub quality: bool,
    pub state: bool,
    pub instinct: bool,
    pub implications: Vec<Implication>,
}

pub fn implications_of(attribute: Attribute) -> AttributeProfile {
    use Implication::{B, D, M};
    let (quality, state, instinct, implications): (bool, bool, bool, &[Implication]) = match attribute {
        Attribute::Personality => (true, false, false, &[D, B, M]),
        Attribute::Intelligence => (true, false, false, &[D, B]),
        Attribute::Creativity => (true, false, false, &[D, B]),
        Attribute::Knowledge => (true, true, false, &[D, B, M]),
        Attribute::Memory => (true, true, false, &[D, B, M]),
        Attribute::ExtraSensoryPerception => (true, true, false, &[D]),
        Attribute::Emotions => (false, true, false, &[D, B]),
        Attribute::Expression => (false, true, false, &[B]),
        Attribute::MotorControl => (false, true, false, &[B]),
        Attribute::Pain => (false, false, true, &[B, M]),
        Attribute::Hunger => (false, false, true, &[B, M]),
        Attribute::BodilyFunctions => (false, false, true, &[B, M]),
    };
    AttributeProfile {
        attribute,
        quality,
        state,
        instinct,
        implications: implications.to_vec(),
    }
}

/// Name-based lookup; unknown names are an invalid argument.
pub fn implications_by_name(name: &str) -> Result<AttributeProfile, AffectError> {
    Ok(implications_of(name.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpressionMode {
    Voluntary,
    Involuntary,
}

impl ExpressionMode {
    pub fn short(self) -> &'static str {
        match self {
            ExpressionMode::Voluntary => "vol",
            ExpressionMode::Involuntary => "invol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressionThreshold {
    pub base: f64,
    pub neuroticism_slope: f64,
}

impl Default for ExpressionThreshold {
    fn default() -> Self {
        Self {
            base: 0.8,
            neuroticism_slope: 0.2,
        }
    }
}

impl ExpressionThreshold {
    /// `base - slope * neuroticism`, kept within [0.5, 1].
    pub fn for_personality(&self, p: &PersonalityProfile) -> f64 {
        (self.base - self.neuroticism_slope * p.neuroticism).clamp(0.5, 1.0)
    }
}

/// Involuntary once the strongest emotion reaches the personality's threshold.
pub fn expression_mode(e: &EmotionVector, p: &PersonalityProfile, threshold: &ExpressionThreshold) -> ExpressionMode {
    if e.max_component() >= threshold.for_personality(p) {
        ExpressionMode::Involuntary
    } else {
        ExpressionMode::Voluntary
    }
}
