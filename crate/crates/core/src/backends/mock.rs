//! Deterministic answer oracle. Every draw is seeded from the policy seed,
//! the instance id and the prompt text, so outcomes do not depend on
//! request order or thread count.

use std::collections::{BTreeMap, HashMap};
use std::thread;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendIdentity, BackendKind, ModelResponse};
use crate::promptkit::{AnswerSchema, RenderedPrompt};
use crate::seeds::{derive_seed, fingerprint};

pub const REFUSAL: &str = "I'm not able to tell which frame fits this target.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    AlwaysGold,
    AccuracyP,
    Scripted,
}

/// A scripted reply: fixed text, one text per attempt, or label logprobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Text(String),
    Attempts(Vec<String>),
    Logprobs(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePolicy {
    pub mode: OracleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<BTreeMap<String, ScriptEntry>>,
    /// Answer labelled prompts with label logprobs instead of text.
    #[serde(default)]
    pub logprobs: bool,
    /// Simulated per-request latency.
    #[serde(default)]
    pub latency_ms: u64,
}

impl OraclePolicy {
    pub fn always_gold() -> Self {
        OraclePolicy { mode: OracleMode::AlwaysGold, p: None, seed: 0, script: None, logprobs: false, latency_ms: 0 }
    }

    pub fn accuracy(p: f64, seed: u64) -> Self {
        OraclePolicy { mode: OracleMode::AccuracyP, p: Some(p), seed, ..OraclePolicy::always_gold() }
    }

    pub fn scripted(script: BTreeMap<String, ScriptEntry>) -> Self {
        OraclePolicy { mode: OracleMode::Scripted, script: Some(script), ..OraclePolicy::always_gold() }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match self.mode {
            OracleMode::AccuracyP => match self.p {
                Some(p) if (0.0..=1.0).contains(&p) => Ok(()),
                Some(p) => Err(BackendError::Config(format!("oracle p must be in [0, 1], got {p}"))),
                None => Err(BackendError::Config("accuracy_p oracle needs p".into())),
            },
            OracleMode::Scripted if self.script.is_none() => {
                Err(BackendError::Config("scripted oracle needs a script".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockOracle {
    policy: OraclePolicy,
    model: String,
    temperature: f64,
    golds: HashMap<String, String>,
    definitions: HashMap<String, String>,
}

enum Choice {
    Frame(String),
    Refuse,
}

impl MockOracle {
    pub fn new(policy: OraclePolicy, model: impl Into<String>) -> Self {
        MockOracle { policy, model: model.into(), temperature: 0.0, golds: HashMap::new(), definitions: HashMap::new() }
    }

    /// Temperature reported in the identity, so cache keys match the config.
    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_golds(mut self, golds: HashMap<String, String>) -> Self {
        self.golds = golds;
        self
    }

    /// Definitions returned for definition-generation prompts, keyed by frame.
    pub fn with_definitions(mut self, definitions: HashMap<String, String>) -> Self {
        self.definitions = definitions;
        self
    }

    fn rng(&self, prompt: &RenderedPrompt) -> ChaCha8Rng {
        let key = format!("{}\0{}", prompt.instance_id, fingerprint(&[&prompt.text]));
        ChaCha8Rng::seed_from_u64(derive_seed(self.policy.seed, &key))
    }

    fn choose(&self, prompt: &RenderedPrompt) -> Result<Choice, BackendError> {
        let gold = self
            .golds
            .get(&prompt.instance_id)
            .ok_or_else(|| BackendError::Oracle(format!("no gold answer for instance `{}`", prompt.instance_id)))?;
        let mut rng = self.rng(prompt);
        let correct = match self.policy.mode {
            OracleMode::AlwaysGold => true,
            _ => rng.gen::<f64>() < self.policy.p.unwrap_or(1.0),
        };
        let reachable = prompt.candidates.iter().any(|c| c == gold);
        let labelled = !prompt.label_map.is_empty();
        if correct && (reachable || !labelled) {
            return Ok(Choice::Frame(gold.clone()));
        }
        let others: Vec<&String> = prompt.candidates.iter().filter(|c| *c != gold).collect();
        Ok(match others.choose(&mut rng) {
            Some(frame) => Choice::Frame((*frame).clone()),
            None => Choice::Refuse,
        })
    }

    fn render(&self, prompt: &RenderedPrompt, choice: Choice) -> ModelResponse {
        let frame = match choice {
            Choice::Frame(f) => f,
            Choice::Refuse if self.policy.logprobs && !prompt.label_map.is_empty() => {
                let flat = prompt.label_map.labels().map(|l| (l.to_string(), -1.0)).collect();
                return ModelResponse::logprobs(flat);
            }
            Choice::Refuse => return ModelResponse::text(REFUSAL),
        };
        let label = prompt.label_map.label_of(&frame).unwrap_or_default().to_string();
        if self.policy.logprobs && !prompt.label_map.is_empty() {
            let map =
                prompt.label_map.labels().map(|l| (l.to_string(), if l == label { -0.05 } else { -4.0 })).collect();
            return ModelResponse::logprobs(map);
        }
        let text = match prompt.expected_answer_schema {
            AnswerSchema::FrameNameJson => serde_json::json!({ "frame_Name": frame }).to_string(),
            AnswerSchema::FrameOptionJson => format!("{{\"frame_Option\": \"{label}\", \"frame_Name\": \"{frame}\"}}"),
            AnswerSchema::DefOptionJson => format!("{{\"frame_definition_Option\": \"{label}\"}}"),
            AnswerSchema::OrdinalAnswer | AnswerSchema::LetterAnswer => format!(" {label}"),
            AnswerSchema::DefinitionJson => unreachable!("handled before choosing"),
        };
        ModelResponse::text(text)
    }

    fn definition(&self, frame: &str) -> ModelResponse {
        let definition = self
            .definitions
            .get(frame)
            .cloned()
            .unwrap_or_else(|| format!("A situation characterized as {}.", frame.replace('_', " ").to_lowercase()));
        ModelResponse::text(serde_json::json!({ "frame": frame, "definition": definition }).to_string())
    }

    fn scripted(&self, prompt: &RenderedPrompt, attempt: u32) -> Result<ModelResponse, BackendError> {
        let script = self.policy.script.as_ref().expect("validated");
        match script.get(&prompt.instance_id) {
            Some(ScriptEntry::Text(t)) => Ok(ModelResponse::text(t.clone())),
            Some(ScriptEntry::Attempts(list)) => {
                let i = (attempt as usize).min(list.len().saturating_sub(1));
                Ok(ModelResponse::text(list.get(i).cloned().unwrap_or_default()))
            }
            Some(ScriptEntry::Logprobs(map)) => Ok(ModelResponse::logprobs(map.clone())),
            None => Err(BackendError::Oracle(format!("script has no entry for `{}`", prompt.instance_id))),
        }
    }
}

impl Backend for MockOracle {
    fn complete(&self, prompt: &RenderedPrompt, attempt: u32) -> Result<ModelResponse, BackendError> {
        if self.policy.latency_ms > 0 {
            thread::sleep(Duration::from_millis(self.policy.latency_ms));
        }
        if self.policy.mode == OracleMode::Scripted {
            return self.scripted(prompt, attempt);
        }
        if prompt.expected_answer_schema == AnswerSchema::DefinitionJson {
            return Ok(self.definition(&prompt.instance_id));
        }
        let choice = self.choose(prompt)?;
        Ok(self.render(prompt, choice))
    }

    fn identity(&self) -> BackendIdentity {
        BackendIdentity { kind: BackendKind::MockOracle, model: self.model.clone(), temperature: self.temperature }
    }
}
