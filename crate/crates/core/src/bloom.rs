//! Bloom level assignment for learning objectives.
//!
//! The default backend is a verb lexicon: the first token of the objective
//! that appears in the lexicon decides the level. Anything implementing
//! [`BloomClassifier`] can replace it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use thiserror::Error;

use crate::model::BloomLevel;

const DEFAULT_LEXICON: &str = include_str!("../resources/lexicon.json");

/// Minimum number of verbs each assigned level must carry.
pub const MIN_VERBS_PER_LEVEL: usize = 3;

pub trait BloomClassifier: Send + Sync {
    fn classify(&self, lo_text: &str) -> BloomLevel;
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("lexicon is not a JSON object of verb -> level: {0}")]
    Parse(String),
    #[error("verb {0:?} is listed more than once")]
    DuplicateVerb(String),
    #[error("level {0} has fewer than {MIN_VERBS_PER_LEVEL} verbs")]
    EmptyLevel(BloomLevel),
    #[error("verb {verb:?} maps to {level:?}, which is not a taxonomy level")]
    InvalidLevel { verb: String, level: String },
}

/// Lowercase verb to Bloom level. Each verb maps to exactly one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon {
    entries: BTreeMap<String, BloomLevel>,
}

// Keeps duplicate keys visible; a plain map would silently keep the last one.
struct OrderedEntries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping verbs to levels")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl VerbLexicon {
    /// The lexicon shipped with the crate.
    pub fn default_lexicon() -> VerbLexicon {
        VerbLexicon::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<VerbLexicon, LexiconError> {
        let OrderedEntries(pairs) =
            serde_json::from_str(text).map_err(|e| LexiconError::Parse(e.to_string()))?;
        Self::from_pairs(pairs)
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Result<VerbLexicon, LexiconError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (verb, level) in pairs {
            let verb = verb.as_ref().trim().to_lowercase();
            let parsed: BloomLevel =
                level
                    .as_ref()
                    .parse()
                    .map_err(|_| LexiconError::InvalidLevel {
                        verb: verb.clone(),
                        level: level.as_ref().to_string(),
                    })?;
            if !parsed.is_assigned() {
                return Err(LexiconError::InvalidLevel {
                    verb,
                    level: level.as_ref().to_string(),
                });
            }
            if entries.insert(verb.clone(), parsed).is_some() {
                return Err(LexiconError::DuplicateVerb(verb));
            }
        }
        for level in BloomLevel::ASSIGNED {
            if entries.values().filter(|l| **l == level).count() < MIN_VERBS_PER_LEVEL {
                return Err(LexiconError::EmptyLevel(level));
            }
        }
        Ok(VerbLexicon { entries })
    }

    pub fn get(&self, verb: &str) -> Option<BloomLevel> {
        self.entries.get(verb).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn verbs_for(&self, level: BloomLevel) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |(_, l)| **l == level)
            .map(|(v, _)| v.as_str())
    }
}

impl BloomClassifier for VerbLexicon {
    fn classify(&self, lo_text: &str) -> BloomLevel {
        classify_lo(lo_text, self)
    }
}

pub fn load_lexicon(path: &Path) -> Result<VerbLexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    VerbLexicon::from_json(&text)
}

/// Level of the first lexicon verb in `text`, scanning left to right.
///
/// Tokens are whitespace-separated, lowercased, with leading and trailing
/// punctuation removed. Returns `Unassigned` when nothing matches.
pub fn classify_lo(text: &str, lexicon: &VerbLexicon) -> BloomLevel {
    text.split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .find_map(|tok| lexicon.get(&tok))
        .unwrap_or(BloomLevel::Unassigned)
}
