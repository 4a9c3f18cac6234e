//! HTTP client for a remote text-to-image service.
//!
//! `POST {endpoint}/evaluate` with an [`EvaluateRequest`] JSON body; a 200
//! answer carries an [`EvaluateResponse`], errors carry `{"error": "..."}`.

use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::distribution::{FrequencyVector, WeightVector};
use crate::error::{Error, Result};
use crate::oracle::{check_request, BackendKind, Oracle, OracleConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub weights: Vec<f64>,
    pub prompt: String,
    pub labels: Vec<String>,
    pub num_samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub counts: Vec<u64>,
    pub num_samples: u64,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug, Clone)]
pub struct RemoteOracle {
    endpoint: String,
    prompt: String,
    labels: Vec<String>,
    agent: ureq::Agent,
    max_attempts: u32,
    initial_backoff: Duration,
}

impl RemoteOracle {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);
    pub const MAX_ATTEMPTS: u32 = 3;
    pub const INITIAL_BACKOFF: Duration = Duration::from_secs(1);

    pub fn new(endpoint: impl Into<String>, prompt: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        Self::with_timeout(endpoint, prompt, labels, Self::DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(
        endpoint: impl Into<String>,
        prompt: impl Into<String>,
        labels: Vec<String>,
        timeout: Duration,
    ) -> Result<Self> {
        let endpoint = endpoint.into().trim_end_matches('/').to_string();
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(Error::InvalidConfig(format!("endpoint {endpoint:?} is not an http(s) URL")));
        }
        if labels.len() < 2 {
            return Err(Error::InvalidConfig("remote oracle needs at least 2 labels".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            endpoint,
            prompt: prompt.into(),
            labels,
            agent,
            max_attempts: Self::MAX_ATTEMPTS,
            initial_backoff: Self::INITIAL_BACKOFF,
        })
    }

    /// Overrides the retry policy; the delay doubles after every failed attempt.
    pub fn with_retry(mut self, max_attempts: u32, initial_backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.initial_backoff = initial_backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, body: &str, expected_len: usize, num_samples: u64) -> Result<FrequencyVector> {
        let url = format!("{}/evaluate", self.endpoint);
        let mut resp = self
            .agent
            .post(&url)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| Error::OracleUnavailable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::OracleUnavailable(format!("reading response from {url}: {e}")))?;
        match status {
            200 => parse_response(&text, expected_len, num_samples),
            408 | 429 | 500..=599 => Err(Error::OracleUnavailable(format!(
                "HTTP {status}: {}",
                error_message(&text)
            ))),
            _ => Err(Error::Protocol(format!("HTTP {status}: {}", error_message(&text)))),
        }
    }
}

fn error_message(text: &str) -> String {
    serde_json::from_str::<ErrorBody>(text)
        .map(|b| b.error)
        .unwrap_or_else(|_| text.chars().take(200).collect())
}

/// Validates a 200 response body against the request it answers.
pub fn parse_response(text: &str, expected_len: usize, num_samples: u64) -> Result<FrequencyVector> {
    let resp: EvaluateResponse =
        serde_json::from_str(text).map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
    if resp.counts.len() != expected_len {
        return Err(Error::Protocol(format!(
            "response has {} counts for {expected_len} weights",
            resp.counts.len()
        )));
    }
    if resp.num_samples != num_samples {
        return Err(Error::Protocol(format!(
            "response reports num_samples {} but {num_samples} were requested",
            resp.num_samples
        )));
    }
    let sum = resp.counts.iter().try_fold(0u64, |acc, &c| acc.checked_add(c));
    if sum != Some(num_samples) {
        return Err(Error::Protocol(format!(
            "counts sum to {} but num_samples is {num_samples}",
            sum.map_or_else(|| "overflow".to_string(), |s| s.to_string())
        )));
    }
    FrequencyVector::new(resp.counts).map_err(|e| Error::Protocol(e.to_string()))
}

/// One evaluation against `endpoint`, retrying transient failures with
/// exponential backoff.
pub fn remote_evaluate<S: Scalar>(
    oracle: &RemoteOracle,
    a: &WeightVector<S>,
    cfg: &OracleConfig,
) -> Result<FrequencyVector> {
    check_request(oracle, a, cfg)?;
    let request = EvaluateRequest {
        weights: a.as_slice().iter().map(|v| v.as_f64()).collect(),
        prompt: oracle.prompt.clone(),
        labels: oracle.labels.clone(),
        num_samples: cfg.num_samples,
        seed: cfg.seed,
    };
    let body = serde_json::to_string(&request).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut delay = oracle.initial_backoff;
    let mut attempt = 1;
    loop {
        debug!("remote evaluate attempt {attempt} to {}", oracle.endpoint);
        match oracle.attempt(&body, a.len(), cfg.num_samples) {
            Err(e) if e.is_retryable() && attempt < oracle.max_attempts => {
                warn!("attempt {attempt}/{} failed: {e}; retrying in {delay:?}", oracle.max_attempts);
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

impl<S: Scalar> Oracle<S> for RemoteOracle {
    fn arity(&self) -> usize {
        self.labels.len()
    }

    fn backend(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn evaluate(&self, a: &WeightVector<S>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        remote_evaluate(self, a, cfg)
    }
}
