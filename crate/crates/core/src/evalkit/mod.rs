//! Evaluation runs, ablation grids and error-overlap analysis.

pub mod ablation;
pub mod driver;
pub mod overlap;
pub mod predictions;
pub mod report;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ablation::{ambiguous_grid, default_grid, run_ablation, AblationCell, AblationTable, FEW_SHOT_K};
pub use driver::{fan_out, Execution};
pub use overlap::{compare_errors, OverlapError, OverlapReport};
pub use predictions::{predictions_file_name, read_predictions, write_predictions, PredictionRow};
pub use report::{mean, subset_accuracy, EvalReport, SeedResult, Subset, SubsetScore};

use crate::backends::{Backend, BackendConfig, BackendError};
use crate::corpus::{AnnotatedInstance, ArtifactEntry, CorpusError, Dataset, Split};
use crate::defprobe::{DefinitionSource, DefinitionStore};
use crate::lexicon::{CandidateMode, CandidateSet, Lexicon};
use crate::parse::{parse_response, DecodePath, Prediction};
use crate::promptkit::{
    render, render_artifacts, select_exemplars, ExemplarBlock, PromptConfig, PromptError, PromptFormat, RenderedPrompt,
};
use crate::seeds::{derive_seed, fingerprint};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid run spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("backend failed on {failures} of {attempted} instances (limit 10%); first error: {first_error}")]
    BackendDown { failures: usize, attempted: usize, first_error: String },
    #[error("frame `{frame}` has no definition from source {source_name}")]
    MissingDefinition { frame: String, source_name: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io { path: path.to_path_buf(), source }
}

fn yes() -> bool {
    true
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

/// Everything that determines a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: Dataset,
    pub split: Split,
    pub prompt: PromptConfig,
    pub backend: BackendConfig,
    #[serde(default)]
    pub candidate_mode: CandidateMode,
    /// One repetition per seed. Seeds drive exemplar sampling and option order.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Failed decodes count as wrong. When off they leave the denominator.
    #[serde(default = "yes")]
    pub strict_scoring: bool,
    /// Answer single-candidate instances without asking the backend.
    #[serde(default)]
    pub auto_singleton: bool,
    /// Shuffle each instance's options with a per-instance seed. When off,
    /// lexicon order is kept.
    #[serde(default = "yes")]
    pub shuffle_candidates: bool,
    /// Evaluate only this subset of instances.
    #[serde(default)]
    pub subset: Subset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    #[serde(default)]
    pub definitions: DefinitionSource,
}

impl RunSpec {
    pub fn new(dataset: Dataset, split: Split, prompt: PromptConfig, backend: BackendConfig) -> Self {
        RunSpec {
            dataset,
            split,
            prompt,
            backend,
            candidate_mode: CandidateMode::default(),
            seeds: default_seeds(),
            strict_scoring: true,
            auto_singleton: false,
            shuffle_candidates: true,
            subset: Subset::All,
            limit: None,
            definitions: DefinitionSource::Gold,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.seeds.is_empty() {
            return Err(EvalError::Spec("at least one seed is required".into()));
        }
        if !self.dataset.splits().contains(&self.split) {
            return Err(EvalError::Corpus(CorpusError::UnknownSplit { dataset: self.dataset, split: self.split }));
        }
        self.prompt.validate()?;
        self.backend.validate()?;
        let format = self.prompt.format;
        if format == PromptFormat::DefGen {
            return Err(EvalError::Spec("def_gen prompts are run through defprobe generation, not evaluation".into()));
        }
        if (format == PromptFormat::Artifacts) != (self.dataset == Dataset::Artifacts) {
            return Err(EvalError::Spec(format!("{} prompts cannot be used on {}", format, self.dataset)));
        }
        if self.definitions != DefinitionSource::Gold && format != PromptFormat::DefEval {
            return Err(EvalError::Spec("a definition source other than gold needs the def_eval format".into()));
        }
        Ok(())
    }

    /// Hash of everything that can change results. Execution settings
    /// (parallelism, timeouts, retries) are left out.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("spec serializes");
        if let Some(backend) = value.get_mut("backend").and_then(|b| b.as_object_mut()) {
            for key in ["parallelism", "request_timeout_ms", "max_retries", "retry_backoff_ms", "api_key_env"] {
                backend.remove(key);
            }
        }
        fingerprint(&[&value.to_string()])
    }

    pub fn run_id(&self, seed: u64) -> String {
        format!("{}-s{seed}", &self.fingerprint()[..8])
    }

    /// The answer an instance is scored against.
    pub fn gold_for(&self, instance: &AnnotatedInstance) -> String {
        if self.prompt.format == PromptFormat::Artifacts {
            ArtifactEntry::from_instance(instance).effective_gold().to_string()
        } else {
            instance.gold_frame.clone()
        }
    }

    /// Instances this spec evaluates, in file order.
    pub fn select_instances<'a>(
        &self,
        lexicon: &Lexicon,
        instances: &'a [AnnotatedInstance],
    ) -> Vec<&'a AnnotatedInstance> {
        let mut picked: Vec<&AnnotatedInstance> = instances
            .iter()
            .filter(|i| match self.subset {
                Subset::All => true,
                Subset::Ambiguous => lexicon.lookup_candidates(&i.target_lemma, i.target_pos).len() >= 2,
                Subset::UnknownTarget => i.has_flag(crate::corpus::InstanceFlag::UnknownTarget),
                Subset::UnlinkedTarget => i.has_flag(crate::corpus::InstanceFlag::UnlinkedTarget),
            })
            .collect();
        if let Some(n) = self.limit {
            picked.truncate(n);
        }
        picked
    }
}

/// Data a run reads. Nothing here is mutated.
#[derive(Clone, Copy)]
pub struct EvalInputs<'a> {
    pub lexicon: &'a Lexicon,
    /// The split being evaluated.
    pub instances: &'a [AnnotatedInstance],
    /// Exemplar pool for few-shot prompts.
    pub train: &'a [AnnotatedInstance],
    /// Required when the spec's definition source is `generated:*`.
    pub definitions: Option<&'a DefinitionStore>,
}

/// Gold answers keyed by instance id, as the mock oracle expects them.
pub fn gold_map(spec: &RunSpec, instances: &[AnnotatedInstance]) -> HashMap<String, String> {
    instances.iter().map(|i| (i.instance_id.clone(), spec.gold_for(i))).collect()
}

fn substitute_definitions(
    set: &mut CandidateSet,
    source: &DefinitionSource,
    store: Option<&DefinitionStore>,
) -> Result<(), EvalError> {
    let DefinitionSource::Generated(model) = source else {
        return Ok(());
    };
    let store = store.ok_or_else(|| EvalError::Spec(format!("no definition store loaded for {source}")))?;
    if store.generator_model() != model {
        return Err(EvalError::Spec(format!(
            "definition store holds {} definitions, spec asks for {model}",
            store.generator_model()
        )));
    }
    for c in &mut set.candidates {
        c.frame_definition = store
            .get(&c.frame_name)
            .ok_or_else(|| EvalError::MissingDefinition {
                frame: c.frame_name.clone(),
                source_name: source.to_string(),
            })?
            .to_string();
    }
    Ok(())
}

struct Outcome {
    row: PredictionRow,
    backend_error: Option<String>,
    no_candidates: bool,
}

/// Candidate set exactly as it appears in the prompt for one seed.
pub fn prompt_candidates(
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    instance: &AnnotatedInstance,
    seed: u64,
    mode: CandidateMode,
) -> Result<CandidateSet, EvalError> {
    let set = inputs.lexicon.candidates_for(&instance.target_lemma, instance.target_pos, &instance.gold_frame, mode);
    let mut set = if spec.shuffle_candidates { set.shuffled(derive_seed(seed, &instance.instance_id)) } else { set };
    substitute_definitions(&mut set, &spec.definitions, inputs.definitions)?;
    Ok(set)
}

fn prepare_exemplars(
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    config: &PromptConfig,
    seed: u64,
) -> Result<ExemplarBlock, EvalError> {
    if config.shots == 0 {
        return Ok(ExemplarBlock::empty());
    }
    let chosen =
        select_exemplars(inputs.train, config.shots, derive_seed(seed, "exemplars"), config.exemplar_strategy)?;
    let mut failure = None;
    let block = ExemplarBlock::prepare(chosen, config, |inst| {
        match prompt_candidates(spec, inputs, inst, seed, CandidateMode::Filtered) {
            Ok(set) => set,
            Err(e) => {
                failure.get_or_insert(e);
                inputs.lexicon.lookup_candidates(&inst.target_lemma, inst.target_pos)
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(block?)
}

/// The prompt `run_eval` sends for one instance under one seed.
pub fn render_for(
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    instance: &AnnotatedInstance,
    seed: u64,
) -> Result<RenderedPrompt, EvalError> {
    if spec.prompt.format == PromptFormat::Artifacts {
        return Ok(render_artifacts(&ArtifactEntry::from_instance(instance))?);
    }
    let block = prepare_exemplars(spec, inputs, &spec.prompt, seed)?;
    let set = prompt_candidates(spec, inputs, instance, seed, spec.candidate_mode)?;
    Ok(render(instance, &set, &spec.prompt, &block)?)
}

fn row(
    spec: &RunSpec,
    run_id: &str,
    instance: &AnnotatedInstance,
    lexicon: &Lexicon,
    prediction: &Prediction,
) -> PredictionRow {
    PredictionRow {
        instance_id: instance.instance_id.clone(),
        predicted_frame: prediction.predicted_frame.clone(),
        gold_frame: spec.gold_for(instance),
        decode_path: prediction.decode_path,
        run_id: run_id.to_string(),
        label: prediction.label.clone(),
        candidate_count: Some(lexicon.lookup_candidates(&instance.target_lemma, instance.target_pos).len()),
        flags: instance.flags.clone(),
        error: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    backend: &dyn Backend,
    block: &ExemplarBlock,
    config: &PromptConfig,
    seed: u64,
    run_id: &str,
    instance: &AnnotatedInstance,
) -> Result<Outcome, EvalError> {
    let prompt = if config.format == PromptFormat::Artifacts {
        render_artifacts(&ArtifactEntry::from_instance(instance))?
    } else {
        let set = prompt_candidates(spec, inputs, instance, seed, spec.candidate_mode)?;
        if set.is_empty() {
            let mut r = row(spec, run_id, instance, inputs.lexicon, &Prediction::failed(&instance.instance_id, ""));
            r.error = Some("no candidate frames".into());
            return Ok(Outcome { row: r, backend_error: None, no_candidates: true });
        }
        if spec.auto_singleton && set.len() == 1 {
            let prediction = Prediction {
                instance_id: instance.instance_id.clone(),
                predicted_frame: Some(set.candidates[0].frame_name.clone()),
                label: None,
                decode_path: DecodePath::AutoSingleton,
                raw_text: String::new(),
            };
            return Ok(Outcome {
                row: row(spec, run_id, instance, inputs.lexicon, &prediction),
                backend_error: None,
                no_candidates: false,
            });
        }
        render(instance, &set, config, block)?
    };
    match backend.complete(&prompt, 0) {
        Ok(response) => {
            let prediction = parse_response(&response, &prompt);
            Ok(Outcome {
                row: row(spec, run_id, instance, inputs.lexicon, &prediction),
                backend_error: None,
                no_candidates: false,
            })
        }
        Err(e) => {
            let mut r = row(spec, run_id, instance, inputs.lexicon, &Prediction::failed(&instance.instance_id, ""));
            r.error = Some(e.to_string());
            Ok(Outcome { row: r, backend_error: Some(e.to_string()), no_candidates: false })
        }
    }
}

/// Runs every seed of `spec` over the inputs. With `out_dir`, writes one
/// predictions file per seed there. Parallelism comes from the backend
/// config; results do not depend on it.
pub fn run_eval(
    spec: &RunSpec,
    inputs: &EvalInputs<'_>,
    backend: &dyn Backend,
    out_dir: Option<&Path>,
) -> Result<EvalReport, EvalError> {
    spec.validate()?;
    let instances = spec.select_instances(inputs.lexicon, inputs.instances);
    let execution = Execution::for_parallelism(spec.backend.parallelism);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut per_run = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let run_id = spec.run_id(seed);
        let config = PromptConfig { seed, ..spec.prompt.clone() };
        let block = prepare_exemplars(spec, inputs, &config, seed)?;
        let failures = AtomicUsize::new(0);
        let limit = instances.len() / 10;
        let outcomes = fan_out(&instances, execution, |_, instance| {
            if failures.load(Ordering::Relaxed) > limit {
                return None;
            }
            let out = evaluate_one(spec, inputs, backend, &block, &config, seed, &run_id, instance);
            if matches!(&out, Ok(o) if o.backend_error.is_some()) {
                failures.fetch_add(1, Ordering::Relaxed);
            }
            Some(out)
        });
        let attempted = outcomes.iter().filter(|o| o.is_some()).count();
        let mut rows = Vec::with_capacity(instances.len());
        let mut backend_errors = Vec::new();
        let mut no_candidates = 0;
        for outcome in outcomes.into_iter().flatten() {
            let outcome = outcome?;
            if let Some(e) = outcome.backend_error {
                backend_errors.push(e);
            }
            no_candidates += usize::from(outcome.no_candidates);
            rows.push(outcome.row);
        }
        if backend_errors.len() > limit {
            return Err(EvalError::BackendDown {
                failures: backend_errors.len(),
                attempted,
                first_error: backend_errors.swap_remove(0),
            });
        }
        let mut result =
            SeedResult::from_rows(seed, run_id, &rows, spec.strict_scoring, backend_errors.len(), no_candidates);
        result.exemplar_ids = block.exemplars.iter().map(|e| e.instance.instance_id.clone()).collect();
        if let Some(dir) = out_dir {
            let name = predictions_file_name(seed);
            write_predictions(&dir.join(&name), &rows)?;
            result.predictions_file = Some(name);
        }
        log::info!(
            "seed {seed}: accuracy {:.4} over {} instances ({} failed)",
            result.accuracy,
            result.total,
            result.parse_failures + result.backend_failures + result.no_candidates
        );
        per_run.push(result);
    }
    Ok(EvalReport::assemble(spec.clone(), spec.fingerprint(), instances.len(), per_run))
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = dir.join("report.json");
    fs::write(&json, report.to_json()).map_err(io_err(&json))?;
    let text = dir.join("report.txt");
    fs::write(&text, report.to_text()).map_err(io_err(&text))?;
    Ok(())
}
