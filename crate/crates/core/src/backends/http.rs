//! OpenAI-compatible chat-completions clients.

use std::collections::BTreeMap;
use std::env;
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use serde_json::{json, Value};

use super::{Backend, BackendConfig, BackendError, BackendIdentity, ModelResponse, Usage};
use crate::promptkit::RenderedPrompt;

const TOP_LOGPROBS: u32 = 20;

struct HttpCore {
    client: Client,
    config: BackendConfig,
    api_key: Option<String>,
}

impl HttpCore {
    fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                env::var(var).map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = Client::builder()
            .timeout(Duration::from_millis(config.request_timeout_ms))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpCore { client, config, api_key })
    }

    fn post_once(&self, body: &Value) -> Result<Value, BackendError> {
        let url = self.config.endpoint_url.as_deref().expect("validated");
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(classify)?;
        let status = resp.status();
        let text = resp.text().map_err(classify)?;
        if !status.is_success() {
            let body: String = text.chars().take(500).collect();
            return Err(BackendError::HttpStatus { status: status.as_u16(), body });
        }
        serde_json::from_str(&text).map_err(|e| BackendError::Malformed(format!("reply is not JSON: {e}")))
    }

    /// POSTs with exponential backoff on retryable failures.
    fn post(&self, body: &Value) -> Result<(Value, u64), BackendError> {
        let started = Instant::now();
        let mut delay = Duration::from_millis(self.config.retry_backoff_ms);
        let attempts = self.config.max_retries + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.post_once(body) {
                Ok(v) => return Ok((v, started.elapsed().as_millis() as u64)),
                Err(e) if e.is_retryable() && attempt < attempts => {
                    log::warn!("request failed ({e}); retry {attempt}/{} in {delay:?}", self.config.max_retries);
                    thread::sleep(delay);
                    delay *= 2;
                }
                Err(BackendError::Timeout { .. }) => return Err(BackendError::Timeout { attempts: attempt }),
                Err(e) => return Err(e),
            }
        }
    }

    fn chat_body(&self, prompt: &RenderedPrompt) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        })
    }

    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            kind: self.config.kind,
            model: self.config.model_name.clone(),
            temperature: self.config.temperature,
        }
    }
}

fn classify(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout { attempts: 1 }
    } else if e.is_connect() || e.is_request() {
        BackendError::Connect(e.to_string())
    } else {
        BackendError::Malformed(e.to_string())
    }
}

fn usage(v: &Value) -> Usage {
    let get = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0);
    Usage { prompt_tokens: get("prompt_tokens"), completion_tokens: get("completion_tokens") }
}

pub struct ChatHttpBackend {
    core: HttpCore,
}

impl ChatHttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        Ok(ChatHttpBackend { core: HttpCore::new(config)? })
    }
}

impl Backend for ChatHttpBackend {
    fn complete(&self, prompt: &RenderedPrompt, _attempt: u32) -> Result<ModelResponse, BackendError> {
        let (reply, latency_ms) = self.core.post(&self.core.chat_body(prompt))?;
        let content = reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Malformed("no choices[0].message.content".into()))?;
        Ok(ModelResponse { raw_text: content.to_string(), label_logprobs: None, usage: usage(&reply), latency_ms })
    }

    fn identity(&self) -> BackendIdentity {
        self.core.identity()
    }
}

/// Scores option labels by the next-token distribution after the prompt.
pub struct LogprobHttpBackend {
    core: HttpCore,
}

/// Option labels are short ASCII strings ("A", "AB", "43"), which common
/// tokenizers keep as one token. Anything longer is refused up front.
pub fn check_single_token(label: &str) -> Result<(), BackendError> {
    let ok = !label.is_empty() && label.len() <= 2 && label.bytes().all(|b| b.is_ascii_alphanumeric());
    if ok {
        Ok(())
    } else {
        Err(BackendError::LabelNotSingleToken(label.to_string()))
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Extracts the requested labels' logprobs from a reply's top-k list.
/// Token variants that differ only by surrounding whitespace are pooled.
pub fn label_logprobs_from_reply(reply: &Value, labels: &[String]) -> Result<BTreeMap<String, f64>, BackendError> {
    let top = reply
        .pointer("/choices/0/logprobs/content/0/top_logprobs")
        .and_then(Value::as_array)
        .ok_or(BackendError::LogprobsUnsupported)?;
    let mut out: BTreeMap<String, f64> = labels.iter().map(|l| (l.clone(), f64::NEG_INFINITY)).collect();
    for entry in top {
        let (Some(token), Some(lp)) =
            (entry.get("token").and_then(Value::as_str), entry.get("logprob").and_then(Value::as_f64))
        else {
            return Err(BackendError::Malformed("top_logprobs entry lacks token/logprob".into()));
        };
        if let Some(slot) = out.get_mut(token.trim()) {
            *slot = log_sum_exp(*slot, lp);
        }
    }
    if out.values().all(|v| *v == f64::NEG_INFINITY) {
        return Err(BackendError::Malformed("none of the option labels is among the top logprobs".into()));
    }
    Ok(out)
}

impl LogprobHttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        Ok(LogprobHttpBackend { core: HttpCore::new(config)? })
    }

    pub fn score_restricted(
        &self,
        prompt: &RenderedPrompt,
        labels: &[String],
    ) -> Result<(BTreeMap<String, f64>, Usage, u64), BackendError> {
        for label in labels {
            check_single_token(label)?;
        }
        let mut body = self.core.chat_body(prompt);
        body["max_tokens"] = json!(1);
        body["logprobs"] = json!(true);
        body["top_logprobs"] = json!(TOP_LOGPROBS);
        let (reply, latency) = self.core.post(&body)?;
        Ok((label_logprobs_from_reply(&reply, labels)?, usage(&reply), latency))
    }
}

impl Backend for LogprobHttpBackend {
    fn complete(&self, prompt: &RenderedPrompt, _attempt: u32) -> Result<ModelResponse, BackendError> {
        let labels: Vec<String> = prompt.label_map.labels().map(str::to_string).collect();
        if labels.is_empty() {
            return Err(BackendError::Config(format!("{} prompts have no option labels to score", prompt.format)));
        }
        let (map, usage, latency_ms) = self.score_restricted(prompt, &labels)?;
        Ok(ModelResponse { raw_text: String::new(), label_logprobs: Some(map), usage, latency_ms })
    }

    fn identity(&self) -> BackendIdentity {
        self.core.identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_token_rule() {
        for ok in ["A", "AB", "43", "1"] {
            check_single_token(ok).unwrap();
        }
        for bad in ["", "ABC", "A B", "é"] {
            assert!(check_single_token(bad).is_err());
        }
    }

    #[test]
    fn top_logprobs_are_pooled_and_missing_labels_are_neg_inf() {
        let reply = json!({"choices": [{"logprobs": {"content": [{"top_logprobs": [
            {"token": "A", "logprob": -0.5},
            {"token": " A", "logprob": -0.5},
            {"token": "B", "logprob": -2.0},
            {"token": "The", "logprob": -3.0}
        ]}]}}]});
        let got = label_logprobs_from_reply(&reply, &["A".into(), "B".into(), "C".into()]).unwrap();
        assert!((got["A"] - (-0.5 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(got["B"], -2.0);
        assert_eq!(got["C"], f64::NEG_INFINITY);
    }

    #[test]
    fn reply_without_logprobs_is_unsupported() {
        let reply = json!({"choices": [{"message": {"content": "A"}}]});
        assert_eq!(label_logprobs_from_reply(&reply, &["A".into()]), Err(BackendError::LogprobsUnsupported));
    }
}
