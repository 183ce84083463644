use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ranked, validate_predictions, PredictError, Prediction, Predictor, TOP_K};
use crate::masking::MaskedSequence;

/// Fixture key of a rendered masked sequence: lowercase hex SHA-256.
pub fn fixture_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A recorded token, either bare text (no score recorded) or with a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureToken {
    Bare(String),
    Scored { token: String, score: f64 },
}

impl FixtureToken {
    fn into_pair(self) -> (String, f64) {
        match self {
            FixtureToken::Bare(t) => (t, 0.0),
            FixtureToken::Scored { token, score } => (token, score),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub key: String,
    /// The rendered sequence the key was computed from, for readers.
    pub sequence: String,
    pub predictions: Vec<FixtureToken>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub entries: Vec<FixtureEntry>,
}

impl FixtureFile {
    pub fn read(path: &Path) -> io::Result<FixtureFile> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)
    }

    /// Adds or replaces the entry for `sequence`.
    pub fn record(&mut self, sequence: &str, predictions: Vec<FixtureToken>) {
        let key = fixture_key(sequence);
        self.entries.retain(|e| e.key != key);
        self.entries.push(FixtureEntry {
            key,
            sequence: sequence.to_string(),
            predictions,
        });
    }
}

/// Replays recorded predictions keyed by the hash of the masked text.
#[derive(Debug, Clone, Default)]
pub struct FixturePredictor {
    entries: BTreeMap<String, Vec<Prediction>>,
}

impl FixturePredictor {
    pub fn load(path: &Path) -> io::Result<FixturePredictor> {
        Self::from_file(FixtureFile::read(path)?)
    }

    pub fn from_file(file: FixtureFile) -> io::Result<FixturePredictor> {
        let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
        let mut entries = BTreeMap::new();
        for e in file.entries {
            if fixture_key(&e.sequence) != e.key {
                return Err(invalid(format!(
                    "key {} does not match its sequence",
                    e.key
                )));
            }
            let preds = ranked(e.predictions.into_iter().map(FixtureToken::into_pair));
            validate_predictions(&preds)
                .map_err(|err| invalid(format!("entry {}: {err}", e.key)))?;
            entries.insert(e.key, preds);
        }
        Ok(FixturePredictor { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Predictor for FixturePredictor {
    fn predict(&self, sequence: &MaskedSequence) -> Result<Vec<Prediction>, PredictError> {
        let key = fixture_key(&sequence.text());
        let preds = self
            .entries
            .get(&key)
            .cloned()
            .ok_or(PredictError::FixtureMiss { key })?;
        debug_assert_eq!(preds.len(), TOP_K);
        Ok(preds)
    }

    fn describe(&self) -> String {
        format!("fixture ({} entries)", self.entries.len())
    }
}
