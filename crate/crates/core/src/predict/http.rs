//! Client for the fill-mask wire protocol.
//!
//! `POST {endpoint}/v1/fill-mask` with `{"sequence": ..., "top_k": 5}`;
//! a 200 answer carries `{"model": ..., "predictions": [{"token", "score"}]}`
//! and errors carry `{"error": ...}`.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ranked, validate_predictions, PredictError, Prediction, Predictor, TOP_K};
use crate::masking::MaskedSequence;

pub const FILL_MASK_PATH: &str = "/v1/fill-mask";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillMaskRequest {
    pub sequence: String,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePrediction {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillMaskResponse {
    pub model: String,
    pub predictions: Vec<WirePrediction>,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpPredictor {
    url: String,
    agent: ureq::Agent,
    gate: Gate,
}

impl HttpPredictor {
    pub fn new(endpoint: &str, timeout_ms: u64, max_in_flight: usize) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(timeout_ms))
            .build();
        HttpPredictor {
            url: format!("{}{FILL_MASK_PATH}", endpoint.trim_end_matches('/')),
            agent,
            gate: Gate::new(max_in_flight),
        }
    }

    /// Sends raw sequence text, e.g. for protocol tests.
    pub fn fill_mask(&self, sequence: &str) -> Result<Vec<Prediction>, PredictError> {
        let _slot = self.gate.enter();
        let req = FillMaskRequest {
            sequence: sequence.to_string(),
            top_k: TOP_K,
        };
        let resp = match self.agent.post(&self.url).send_json(&req) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let message = r
                    .into_string()
                    .ok()
                    .and_then(|b| serde_json::from_str::<ErrorBody>(&b).ok())
                    .map_or_else(|| "no error message".to_string(), |b| b.error);
                return Err(PredictError::Rejected { status, message });
            }
            Err(ureq::Error::Transport(t)) => {
                let text = t.to_string();
                return Err(if text.contains("timed out") {
                    PredictError::Timeout
                } else {
                    PredictError::Unreachable(text)
                });
            }
        };
        let body = resp
            .into_string()
            .map_err(|e| PredictError::Malformed(e.to_string()))?;
        decode_response(&body)
    }
}

/// Parses and validates a 200 response body.
pub fn decode_response(body: &str) -> Result<Vec<Prediction>, PredictError> {
    let parsed: FillMaskResponse =
        serde_json::from_str(body).map_err(|e| PredictError::Malformed(e.to_string()))?;
    let preds = ranked(parsed.predictions.into_iter().map(|p| (p.token, p.score)));
    validate_predictions(&preds)?;
    Ok(preds)
}

impl Predictor for HttpPredictor {
    fn predict(&self, seq: &MaskedSequence) -> Result<Vec<Prediction>, PredictError> {
        self.fill_mask(&seq.text())
    }

    fn describe(&self) -> String {
        format!("http ({})", self.url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_keeps_leading_spaces() {
        let body = r#"{"model":"m","predictions":[{"token":" /","score":0.231},
            {"token":"/","score":0.2},{"token":"%","score":0.1},{"token":"-","score":0.1},
            {"token":"*","score":0.0}]}"#;
        let p = decode_response(body).unwrap();
        assert_eq!(p[0].token, " /");
        assert_eq!(p[4].rank, 5);
    }

    #[test]
    fn decode_rejects_missing_fields() {
        assert!(matches!(
            decode_response(r#"{"predictions":[]}"#),
            Err(PredictError::Malformed(_))
        ));
    }

    #[test]
    fn unreachable_endpoint() {
        // port 9 on localhost: nothing listens there in the test sandbox
        let p = HttpPredictor::new("http://127.0.0.1:9", 2_000, 1);
        let err = p.fill_mask("a <mask>").unwrap_err();
        assert!(err.is_unreachable(), "{err:?}");
    }
}
