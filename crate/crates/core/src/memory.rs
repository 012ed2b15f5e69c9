//! Episodic memory: a bounded short-term FIFO and an unbounded long-term
//! store. Every experience lands in short-term; only emotionally salient
//! ones are also kept long-term.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::affect::EmotionVector;
use crate::registry::StateSeq;

pub const DEFAULT_CAPACITY: usize = 7;
pub const DEFAULT_LONG_TERM_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub id: u64,
    pub event: String,
    pub emotion_snapshot: EmotionVector,
    pub states: StateSeq,
    pub salience: f64,
    pub tick: u64,
}

/// Result of one write.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreOutcome {
    pub record: MemoryRecord,
    pub long_term: bool,
    pub evicted: Option<MemoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryStores {
    capacity: usize,
    long_term_threshold: f64,
    next_id: u64,
    short_term: VecDeque<MemoryRecord>,
    long_term: Vec<MemoryRecord>,
}

impl Default for MemoryStores {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY, DEFAULT_LONG_TERM_THRESHOLD)
    }
}

impl MemoryStores {
    /// `capacity` is clamped to at least 1.
    pub fn new(capacity: usize, long_term_threshold: f64) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            long_term_threshold,
            next_id: 0,
            short_term: VecDeque::with_capacity(capacity),
            long_term: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn long_term_threshold(&self) -> f64 {
        self.long_term_threshold
    }

    pub fn short_term(&self) -> impl ExactSizeIterator<Item = &MemoryRecord> {
        self.short_term.iter()
    }

    pub fn long_term(&self) -> &[MemoryRecord] {
        &self.long_term
    }

    pub fn len(&self) -> usize {
        self.short_term.len() + self.long_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.short_term.is_empty() && self.long_term.is_empty()
    }

    /// Stores an experience. Salience is the strongest emotion component.
    pub fn record_experience(
        &mut self,
        event: impl Into<String>,
        emotion: &EmotionVector,
        states: StateSeq,
        tick: u64,
    ) -> StoreOutcome {
        let record = MemoryRecord {
            id: self.next_id,
            event: event.into(),
            emotion_snapshot: *emotion,
            states,
            salience: emotion.max_component().clamp(0.0, 1.0),
            tick,
        };
        self.next_id += 1;

        let evicted = if self.short_term.len() >= self.capacity {
            self.short_term.pop_front()
        } else {
            None
        };
        self.short_term.push_back(record.clone());
        let long_term = record.salience >= self.long_term_threshold;
        if long_term {
            self.long_term.push(record.clone());
        }
        StoreOutcome {
            record,
            long_term,
            evicted,
        }
    }

    /// Records whose event text holds every query token (case-insensitive,
    /// whole-word), most salient first, then most recent. Long-term is
    /// searched before short-term; a record in both is returned once.
    pub fn recall(&self, query: &str, limit: usize) -> Vec<&MemoryRecord> {
        let wanted: Vec<String> = tokens(query).collect();
        if wanted.is_empty() || limit == 0 {
            return Vec::new();
        }
        let mut seen = BTreeSet::new();
        let mut hits: Vec<&MemoryRecord> = self
            .long_term
            .iter()
            .chain(self.short_term.iter())
            .filter(|r| {
                let have: BTreeSet<String> = tokens(&r.event).collect();
                wanted.iter().all(|w| have.contains(w))
            })
            .filter(|r| seen.insert(r.id))
            .collect();
        hits.sort_by(|a, b| {
            b.salience
                .total_cmp(&a.salience)
                .then(b.tick.cmp(&a.tick))
                .then(b.id.cmp(&a.id))
        });
        hits.truncate(limit);
        hits
    }
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}
