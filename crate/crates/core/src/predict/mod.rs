//! Masked-token predictors.
//!
//! Every backend answers one [`MaskedSequence`] with exactly
//! [`TOP_K`] ranked tokens. Token text is kept verbatim, leading spaces
//! included; trimming happens in `mutagen`.

mod fixture;
mod http;
mod ngram;

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::MaskedSequence;

pub use fixture::{fixture_key, FixtureEntry, FixtureFile, FixturePredictor, FixtureToken};
pub use http::{
    decode_response, FillMaskRequest, FillMaskResponse, HttpPredictor, WirePrediction,
    FILL_MASK_PATH,
};
pub use ngram::{NgramError, NgramModel, NgramPredictor};

/// Predictions per query.
pub const TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub rank: u8,
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("no recorded predictions for sequence {key}")]
    FixtureMiss { key: String },
    #[error("predictor unreachable: {0}")]
    Unreachable(String),
    #[error("predictor timed out")]
    Timeout,
    #[error("malformed predictor response: {0}")]
    Malformed(String),
    #[error("predictor rejected the request (status {status}): {message}")]
    Rejected { status: u16, message: String },
}

impl PredictError {
    /// The backend could not be reached at all, as opposed to answering
    /// badly.
    pub fn is_unreachable(&self) -> bool {
        matches!(self, PredictError::Unreachable(_) | PredictError::Timeout)
    }
}

pub trait Predictor: Send + Sync {
    fn predict(&self, sequence: &MaskedSequence) -> Result<Vec<Prediction>, PredictError>;

    /// Short description recorded in reports.
    fn describe(&self) -> String;
}

/// Checks the shape every backend must return: ranks 1..=5 in order and
/// non-increasing scores in `[0, 1]`.
pub fn validate_predictions(preds: &[Prediction]) -> Result<(), PredictError> {
    if preds.len() != TOP_K {
        return Err(PredictError::Malformed(format!(
            "expected {TOP_K} predictions, got {}",
            preds.len()
        )));
    }
    for (i, p) in preds.iter().enumerate() {
        if p.rank as usize != i + 1 {
            return Err(PredictError::Malformed(format!(
                "rank {} at position {}",
                p.rank,
                i + 1
            )));
        }
        if !(0.0..=1.0).contains(&p.score) {
            return Err(PredictError::Malformed(format!(
                "score {} out of range",
                p.score
            )));
        }
        if i > 0 && p.score > preds[i - 1].score {
            return Err(PredictError::Malformed(
                "scores increase with rank".to_string(),
            ));
        }
    }
    Ok(())
}

/// Attaches ranks to `(token, score)` pairs.
pub fn ranked(items: impl IntoIterator<Item = (String, f64)>) -> Vec<Prediction> {
    items
        .into_iter()
        .enumerate()
        .map(|(i, (token, score))| Prediction {
            rank: (i + 1) as u8,
            token,
            score,
        })
        .collect()
}

fn default_order() -> u8 {
    3
}

fn default_timeout() -> u64 {
    30_000
}

fn default_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PredictorConfig {
    Ngram {
        #[serde(default = "default_order")]
        order: u8,
        /// A saved model (`.json`), a `.minij` file, or a directory of them.
        corpus: PathBuf,
    },
    Fixture {
        path: PathBuf,
    },
    Http {
        endpoint: String,
        #[serde(default = "default_timeout")]
        timeout_ms: u64,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown predictor `{0}`; expected ngram[:ORDER]:PATH, fixture:PATH or http:URL")]
    Unknown(String),
    #[error("invalid n-gram order {0}; expected 1, 2 or 3")]
    Order(String),
    #[error(transparent)]
    Ngram(#[from] NgramError),
    #[error("cannot read fixtures {path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

impl FromStr for PredictorConfig {
    type Err = ConfigError;

    /// `ngram:PATH`, `ngram:2:PATH`, `fixture:PATH` or `http:URL`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (backend, rest) = s
            .split_once(':')
            .ok_or_else(|| ConfigError::Unknown(s.to_string()))?;
        match backend {
            "ngram" => {
                let (order, path) = match rest.split_once(':') {
                    Some((o, p)) if o.len() == 1 && o.chars().all(|c| c.is_ascii_digit()) => (
                        o.parse::<u8>()
                            .map_err(|_| ConfigError::Order(o.to_string()))?,
                        p,
                    ),
                    _ => (default_order(), rest),
                };
                if !(1..=3).contains(&order) {
                    return Err(ConfigError::Order(order.to_string()));
                }
                Ok(PredictorConfig::Ngram {
                    order,
                    corpus: PathBuf::from(path),
                })
            }
            "fixture" => Ok(PredictorConfig::Fixture {
                path: PathBuf::from(rest),
            }),
            "http" | "https" => Ok(PredictorConfig::Http {
                // both `http:URL` and a bare `http://host` are accepted
                endpoint: if rest.starts_with("//") {
                    s.to_string()
                } else {
                    rest.to_string()
                },
                timeout_ms: default_timeout(),
                max_in_flight: default_in_flight(),
            }),
            _ => Err(ConfigError::Unknown(s.to_string())),
        }
    }
}

impl PredictorConfig {
    /// Resolves relative file paths against `dir`.
    pub fn rebase(self, dir: &std::path::Path) -> PredictorConfig {
        match self {
            PredictorConfig::Ngram { order, corpus } => PredictorConfig::Ngram {
                order,
                corpus: dir.join(corpus),
            },
            PredictorConfig::Fixture { path } => PredictorConfig::Fixture {
                path: dir.join(path),
            },
            http => http,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Predictor>, ConfigError> {
        Ok(match self {
            PredictorConfig::Ngram { order, corpus } => {
                if !(1..=3).contains(order) {
                    return Err(ConfigError::Order(order.to_string()));
                }
                let model = if corpus.extension().is_some_and(|e| e == "json") {
                    NgramModel::load(corpus)?
                } else {
                    NgramModel::train_path(corpus, *order)?
                };
                Box::new(NgramPredictor::new(model.with_order(*order)))
            }
            PredictorConfig::Fixture { path } => Box::new(FixturePredictor::load(path).map_err(
                |e| ConfigError::Fixture {
                    path: path.clone(),
                    message: e.to_string(),
                },
            )?),
            PredictorConfig::Http {
                endpoint,
                timeout_ms,
                max_in_flight,
            } => Box::new(HttpPredictor::new(endpoint, *timeout_ms, *max_in_flight)),
        })
    }
}
