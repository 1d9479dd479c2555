//! Definition probe: generate frame definitions from names alone, then
//! measure how well they identify frames when shown without names.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::Backend;
use crate::corpus::{read_jsonl, write_jsonl, CorpusError, FrameRecord};
use crate::evalkit::{fan_out, run_eval, EvalError, EvalInputs, EvalReport, Execution, RunSpec};
use crate::parse::parse_definition;
use crate::promptkit::{render_def_gen, PromptFormat};
use crate::seeds::fingerprint;

pub const MAX_ATTEMPTS: u32 = 3;
/// Generation fails when more than this share of frames gets no definition.
pub const MAX_MISSING_FRACTION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum DefprobeError {
    #[error("{missing} of {total} frames got no definition (limit 5%): {preview}")]
    TooManyMissing { missing: usize, total: usize, preview: String },
    #[error("definition for `{0}` is empty")]
    EmptyDefinition(String),
    #[error("frame `{frame}` has two definitions from {model}")]
    Duplicate { frame: String, model: String },
    #[error("definition store mixes generators `{0}` and `{1}`")]
    MixedGenerators(String, String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Where def_eval option texts come from: the lexicon, or a model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DefinitionSource {
    #[default]
    Gold,
    Generated(String),
}

impl fmt::Display for DefinitionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefinitionSource::Gold => f.write_str("gold"),
            DefinitionSource::Generated(m) => write!(f, "generated:{m}"),
        }
    }
}

impl FromStr for DefinitionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "gold" => Ok(DefinitionSource::Gold),
            Some(("generated", model)) if !model.is_empty() => Ok(DefinitionSource::Generated(model.to_string())),
            _ => Err(format!("unknown definition source `{s}` (expected gold or generated:<model>)")),
        }
    }
}

impl TryFrom<String> for DefinitionSource {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DefinitionSource> for String {
    fn from(s: DefinitionSource) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedDefinition {
    pub frame_name: String,
    pub definition: String,
    pub generator_model: String,
    pub prompt_fingerprint: String,
}

/// Definitions from one generator, keyed by frame name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinitionStore {
    generator_model: String,
    records: BTreeMap<String, GeneratedDefinition>,
}

impl DefinitionStore {
    pub fn from_records(generator_model: &str, records: Vec<GeneratedDefinition>) -> Result<Self, DefprobeError> {
        let mut map = BTreeMap::new();
        for r in records {
            if r.generator_model != generator_model {
                return Err(DefprobeError::MixedGenerators(generator_model.to_string(), r.generator_model));
            }
            if r.definition.trim().is_empty() {
                return Err(DefprobeError::EmptyDefinition(r.frame_name));
            }
            if map.contains_key(&r.frame_name) {
                return Err(DefprobeError::Duplicate { frame: r.frame_name, model: r.generator_model });
            }
            map.insert(r.frame_name.clone(), r);
        }
        Ok(DefinitionStore { generator_model: generator_model.to_string(), records: map })
    }

    pub fn load(path: &Path) -> Result<Self, DefprobeError> {
        let records: Vec<GeneratedDefinition> = read_jsonl(path)?;
        let model = records.first().map(|r| r.generator_model.clone()).unwrap_or_default();
        Self::from_records(&model, records)
    }

    pub fn save(&self, path: &Path) -> Result<(), DefprobeError> {
        Ok(write_jsonl(path, self.records.values())?)
    }

    pub fn generator_model(&self) -> &str {
        &self.generator_model
    }

    pub fn get(&self, frame: &str) -> Option<&str> {
        self.records.get(frame).map(|r| r.definition.as_str())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &GeneratedDefinition> {
        self.records.values()
    }
}

/// `<dir>/<model>.jsonl`, with path-unsafe characters in the model name
/// replaced.
pub fn store_path(dir: &Path, model: &str) -> PathBuf {
    let safe: String = model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect();
    dir.join(format!("{safe}.jsonl"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationReport {
    pub store: DefinitionStore,
    /// Frames with no usable definition after all attempts.
    pub missing: Vec<String>,
    pub requests: usize,
}

/// Asks the backend for one definition per frame, retrying unusable
/// replies up to [`MAX_ATTEMPTS`] times in total.
pub fn generate_definitions(
    frames: &[FrameRecord],
    backend: &dyn Backend,
    parallelism: usize,
) -> Result<GenerationReport, DefprobeError> {
    let model = backend.identity().model;
    let results = fan_out(frames, Execution::for_parallelism(parallelism), |_, frame| {
        let prompt = render_def_gen(&frame.name);
        let mut requests = 0;
        for attempt in 0..MAX_ATTEMPTS {
            requests += 1;
            match backend.complete(&prompt, attempt) {
                Ok(resp) => {
                    if let Some(definition) = parse_definition(&resp.raw_text) {
                        let record = GeneratedDefinition {
                            frame_name: frame.name.clone(),
                            definition,
                            generator_model: model.clone(),
                            prompt_fingerprint: fingerprint(&[&prompt.text]),
                        };
                        return (Some(record), requests);
                    }
                    log::debug!("attempt {} for {}: unusable reply", attempt + 1, frame.name);
                }
                Err(e) => log::warn!("attempt {} for {}: {e}", attempt + 1, frame.name),
            }
        }
        (None, requests)
    });
    let mut records = Vec::new();
    let mut missing = Vec::new();
    let mut requests = 0;
    for (frame, (record, n)) in frames.iter().zip(results) {
        requests += n;
        match record {
            Some(r) => records.push(r),
            None => missing.push(frame.name.clone()),
        }
    }
    if !frames.is_empty() && missing.len() as f64 > MAX_MISSING_FRACTION * frames.len() as f64 {
        let preview = missing.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
        return Err(DefprobeError::TooManyMissing { missing: missing.len(), total: frames.len(), preview });
    }
    if !missing.is_empty() {
        log::warn!("{} frame(s) without a definition: {}", missing.len(), missing.join(", "));
    }
    Ok(GenerationReport { store: DefinitionStore::from_records(&model, records)?, missing, requests })
}

/// Evaluates `spec` with def_eval prompts whose options are the chosen
/// definitions, shown without frame names.
pub fn eval_with_definitions(
    source: &DefinitionSource,
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    backend: &dyn Backend,
    out_dir: Option<&Path>,
) -> Result<EvalReport, DefprobeError> {
    let mut spec = spec.clone();
    spec.prompt.format = PromptFormat::DefEval;
    spec.definitions = source.clone();
    Ok(run_eval(&spec, inputs, backend, out_dir)?)
}
