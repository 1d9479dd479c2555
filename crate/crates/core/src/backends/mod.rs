//! Answer sources behind one interface: OpenAI-compatible chat endpoints,
//! next-token logprob scoring over option labels, and a deterministic mock
//! oracle for offline runs.

mod cache;
mod http;
mod mock;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheEntry, CacheMode, CachedBackend};
pub use http::{ChatHttpBackend, LogprobHttpBackend};
pub use mock::{MockOracle, OracleMode, OraclePolicy, ScriptEntry};

use crate::promptkit::RenderedPrompt;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("endpoint returned HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed endpoint reply: {0}")]
    Malformed(String),
    #[error("cannot reach endpoint: {0}")]
    Connect(String),
    #[error("label `{0}` is not a single token")]
    LabelNotSingleToken(String),
    #[error("endpoint returned no logprobs; it may not support them")]
    LogprobsUnsupported,
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("no cached response for prompt {key} and the cache is read-only")]
    CacheMiss { key: String },
    #[error("cache i/o: {0}")]
    Cache(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Timeout { .. } | BackendError::Connect(_) => true,
            BackendError::HttpStatus { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ChatHttp,
    LogprobHttp,
    MockOracle,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::ChatHttp => "chat_http",
            BackendKind::LogprobHttp => "logprob_http",
            BackendKind::MockOracle => "mock_oracle",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chat_http" => Ok(BackendKind::ChatHttp),
            "logprob_http" => Ok(BackendKind::LogprobHttp),
            "mock_oracle" => Ok(BackendKind::MockOracle),
            other => Err(format!("unknown backend kind `{other}`")),
        }
    }
}

fn default_max_output_tokens() -> u32 {
    64
}
fn default_timeout_ms() -> u64 {
    60_000
}
fn default_retries() -> u32 {
    3
}
fn default_parallelism() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OraclePolicy>,
}

impl BackendConfig {
    pub fn mock(policy: OraclePolicy) -> Self {
        BackendConfig {
            kind: BackendKind::MockOracle,
            endpoint_url: None,
            model_name: "mock-oracle".into(),
            temperature: 0.0,
            max_output_tokens: default_max_output_tokens(),
            request_timeout_ms: default_timeout_ms(),
            max_retries: default_retries(),
            retry_backoff_ms: default_backoff_ms(),
            parallelism: default_parallelism(),
            api_key_env: None,
            oracle: Some(policy),
        }
    }

    pub fn http(kind: BackendKind, endpoint_url: &str, model_name: &str) -> Self {
        BackendConfig {
            kind,
            endpoint_url: Some(endpoint_url.to_string()),
            model_name: model_name.to_string(),
            oracle: None,
            ..BackendConfig::mock(OraclePolicy::always_gold())
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.parallelism == 0 {
            return Err(BackendError::Config("parallelism must be at least 1".into()));
        }
        match self.kind {
            BackendKind::ChatHttp | BackendKind::LogprobHttp => {
                if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                    return Err(BackendError::Config(format!("{} needs endpoint_url", self.kind)));
                }
                if self.model_name.is_empty() {
                    return Err(BackendError::Config(format!("{} needs model_name", self.kind)));
                }
            }
            BackendKind::MockOracle => match &self.oracle {
                Some(policy) => policy.validate()?,
                None => return Err(BackendError::Config("mock_oracle needs an oracle policy".into())),
            },
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    /// Empty when the answer comes from label logprobs.
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_logprobs: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub usage: Usage,
    #[serde(default)]
    pub latency_ms: u64,
}

impl ModelResponse {
    pub fn text(raw_text: impl Into<String>) -> Self {
        ModelResponse { raw_text: raw_text.into(), label_logprobs: None, usage: Usage::default(), latency_ms: 0 }
    }

    pub fn logprobs(map: BTreeMap<String, f64>) -> Self {
        ModelResponse { raw_text: String::new(), label_logprobs: Some(map), usage: Usage::default(), latency_ms: 0 }
    }
}

/// Identity of an answer source; part of the response cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendIdentity {
    pub kind: BackendKind,
    pub model: String,
    pub temperature: f64,
}

impl BackendIdentity {
    pub fn of(config: &BackendConfig) -> Self {
        BackendIdentity { kind: config.kind, model: config.model_name.clone(), temperature: config.temperature }
    }
}

pub trait Backend: Send + Sync {
    /// One answer for one prompt. `attempt` is 0 for the first request for
    /// this prompt; callers re-asking after an unusable answer pass higher
    /// values, which bypass cached responses.
    fn complete(&self, prompt: &RenderedPrompt, attempt: u32) -> Result<ModelResponse, BackendError>;

    fn identity(&self) -> BackendIdentity;
}

/// Builds the backend for a config. `golds` maps instance ids to the answer
/// the mock oracle treats as correct; HTTP backends ignore it.
pub fn build_backend(config: &BackendConfig, golds: HashMap<String, String>) -> Result<Box<dyn Backend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::ChatHttp => Box::new(ChatHttpBackend::new(config.clone())?),
        BackendKind::LogprobHttp => Box::new(LogprobHttpBackend::new(config.clone())?),
        BackendKind::MockOracle => {
            let policy = config.oracle.clone().expect("validated");
            Box::new(
                MockOracle::new(policy, config.model_name.clone())
                    .with_temperature(config.temperature)
                    .with_golds(golds),
            )
        }
    })
}

/// Softmax over the given labels' logprobs.
pub fn renormalize(logprobs: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let max = logprobs.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return logprobs.keys().map(|k| (k.clone(), 1.0 / logprobs.len() as f64)).collect();
    }
    let z: f64 = logprobs.values().map(|v| (v - max).exp()).sum();
    logprobs.iter().map(|(k, v)| (k.clone(), (v - max).exp() / z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn http_config_needs_endpoint() {
        let mut c = BackendConfig::http(BackendKind::ChatHttp, "", "m");
        assert!(c.validate().is_err());
        c.endpoint_url = Some("http://localhost:1/v1/chat/completions".into());
        c.validate().unwrap();
        c.parallelism = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn mock_config_needs_policy() {
        let mut c = BackendConfig::mock(OraclePolicy::always_gold());
        c.validate().unwrap();
        c.oracle = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn renormalized_probabilities_sum_to_one() {
        let lp = BTreeMap::from([("A".to_string(), -0.1), ("B".to_string(), -2.3)]);
        let p = renormalize(&lp);
        assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p["A"] > p["B"]);
    }

    #[test]
    fn retryable_classes() {
        assert!(BackendError::Timeout { attempts: 1 }.is_retryable());
        assert!(BackendError::HttpStatus { status: 503, body: String::new() }.is_retryable());
        assert!(BackendError::HttpStatus { status: 429, body: String::new() }.is_retryable());
        assert!(!BackendError::HttpStatus { status: 400, body: String::new() }.is_retryable());
        assert!(!BackendError::Malformed(String::new()).is_retryable());
    }
}
