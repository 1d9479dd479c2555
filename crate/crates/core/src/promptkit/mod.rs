//! Prompt rendering for every prompt family: Simple, Direct-QA, Artifacts,
//! QA fine-tune, definition generation and definition evaluation.
//!
//! Rendering is pure: the output depends only on the instance, the candidate
//! set (in the order given), the config and the exemplar block. Candidate
//! shuffling happens before rendering, see [`CandidateSet::shuffled`].

pub mod exemplars;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exemplars::{select_exemplars, Exemplar, ExemplarBlock, ExemplarStrategy};

use crate::corpus::{AnnotatedInstance, ArtifactEntry, ARTIFACT_OPTION_COUNT, NONE_OF_ABOVE};
use crate::lexicon::{Candidate, CandidateSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("{format} prompt needs at least one candidate frame (instance `{instance_id}`)")]
    EmptyCandidates { format: PromptFormat, instance_id: String },
    #[error("artifact `{name}` has {found} options, expected {ARTIFACT_OPTION_COUNT} ending in \"{NONE_OF_ABOVE}\"")]
    ArtifactOptions { name: String, found: usize },
    #[error("{0} prompts do not take few-shot exemplars")]
    ShotsNotSupported(PromptFormat),
    #[error("exemplar block was prepared for {block} but the prompt is {prompt}")]
    ExemplarFormatMismatch { block: PromptFormat, prompt: PromptFormat },
    #[error("exemplar block has not been prepared for rendering")]
    ExemplarsNotPrepared,
    #[error("cannot draw {k} exemplars from a training pool of {available}")]
    NotEnoughExemplars { k: usize, available: usize },
    #[error("exemplar `{0}` has no answer among its candidates")]
    ExemplarUnanswerable(String),
    #[error("frame `{0}` has no definition to show")]
    MissingDefinition(String),
    #[error("{0} candidates exceed the two-letter label range")]
    TooManyCandidates(usize),
    #[error("template error: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFormat {
    Simple,
    DirectQa,
    Artifacts,
    QaFinetune,
    DefGen,
    DefEval,
}

impl PromptFormat {
    pub const ALL: [PromptFormat; 6] = [
        PromptFormat::Simple,
        PromptFormat::DirectQa,
        PromptFormat::Artifacts,
        PromptFormat::QaFinetune,
        PromptFormat::DefGen,
        PromptFormat::DefEval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptFormat::Simple => "simple",
            PromptFormat::DirectQa => "direct_qa",
            PromptFormat::Artifacts => "artifacts",
            PromptFormat::QaFinetune => "qa_finetune",
            PromptFormat::DefGen => "def_gen",
            PromptFormat::DefEval => "def_eval",
        }
    }

    /// Name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PromptFormat::Simple => "Simple",
            PromptFormat::DirectQa => "Direct-QA",
            PromptFormat::Artifacts => "Artifacts",
            PromptFormat::QaFinetune => "QA",
            PromptFormat::DefGen => "Definition generation",
            PromptFormat::DefEval => "Definition QA",
        }
    }

    pub fn answer_schema(self) -> AnswerSchema {
        match self {
            PromptFormat::Simple => AnswerSchema::FrameNameJson,
            PromptFormat::DirectQa => AnswerSchema::FrameOptionJson,
            PromptFormat::Artifacts => AnswerSchema::OrdinalAnswer,
            PromptFormat::QaFinetune => AnswerSchema::LetterAnswer,
            PromptFormat::DefGen => AnswerSchema::DefinitionJson,
            PromptFormat::DefEval => AnswerSchema::DefOptionJson,
        }
    }

    pub fn uses_granularity(self) -> bool {
        matches!(self, PromptFormat::Simple | PromptFormat::DirectQa)
    }

    pub fn supports_shots(self) -> bool {
        matches!(self, PromptFormat::Simple | PromptFormat::DirectQa | PromptFormat::DefEval)
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptFormat::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| format!("unknown prompt format `{s}`"))
    }
}

/// Which descriptive fields accompany each candidate frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Names,
    NamesDefs,
    NamesLuDefs,
    #[default]
    NamesDefsLuDefs,
}

impl Granularity {
    pub const ALL: [Granularity; 4] =
        [Granularity::Names, Granularity::NamesDefs, Granularity::NamesLuDefs, Granularity::NamesDefsLuDefs];

    pub fn frame_defs(self) -> bool {
        matches!(self, Granularity::NamesDefs | Granularity::NamesDefsLuDefs)
    }

    pub fn lu_defs(self) -> bool {
        matches!(self, Granularity::NamesLuDefs | Granularity::NamesDefsLuDefs)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Names => "names",
            Granularity::NamesDefs => "names_defs",
            Granularity::NamesLuDefs => "names_lu_defs",
            Granularity::NamesDefsLuDefs => "names_defs_lu_defs",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Granularity::Names => "Frame Names",
            Granularity::NamesDefs => "Frame Names & Defs",
            Granularity::NamesLuDefs => "Frame Names & LU Defs",
            Granularity::NamesDefsLuDefs => "Frame Names, Defs & LU Defs",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Granularity::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| format!("unknown granularity `{s}`"))
    }
}

/// Shape of the answer a prompt asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSchema {
    /// `{"frame_Name": ...}`
    FrameNameJson,
    /// `{"frame_Option": ..., "frame_Name": ...}`
    FrameOptionJson,
    /// `{"frame_definition_Option": ...}`
    DefOptionJson,
    /// a number 1-43 after the `Answer:` cue
    OrdinalAnswer,
    /// a single option letter after the `Answer:` cue
    LetterAnswer,
    /// `{"frame": ..., "definition": ...}`
    DefinitionJson,
}

fn default_shots() -> usize {
    0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub format: PromptFormat,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    /// Longer frame definitions are cut to this many characters and marked
    /// with `....`. `None` keeps them whole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition_char_budget: Option<usize>,
    #[serde(default)]
    pub exemplar_strategy: ExemplarStrategy,
}

impl PromptConfig {
    pub fn new(format: PromptFormat, granularity: Granularity, shots: usize) -> Self {
        PromptConfig {
            format,
            granularity,
            shots,
            seed: 0,
            definition_char_budget: None,
            exemplar_strategy: ExemplarStrategy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.shots > 0 && !self.format.supports_shots() {
            return Err(PromptError::ShotsNotSupported(self.format));
        }
        Ok(())
    }

    /// Row label for result tables, e.g. `Direct-QA (Frame Names & LU Defs)`.
    pub fn row_label(&self) -> String {
        if self.format.uses_granularity() {
            format!("{} ({})", self.format.display_name(), self.granularity.display_name())
        } else {
            self.format.display_name().to_string()
        }
    }
}

/// Ordered label → frame mapping of a multiple-choice prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap(Vec<(String, String)>);

impl LabelMap {
    pub fn new(entries: Vec<(String, String)>) -> Self {
        LabelMap(entries)
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.0.iter().find(|(l, _)| l == label).map(|(_, f)| f.as_str())
    }

    pub fn label_of(&self, frame: &str) -> Option<&str> {
        self.0.iter().find(|(_, f)| f == frame).map(|(l, _)| l.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(l, _)| l.as_str())
    }

    pub fn frames(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(_, f)| f.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(l, f)| (l.as_str(), f.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub instance_id: String,
    pub format: PromptFormat,
    pub text: String,
    /// Empty for prompts that ask for a frame name.
    pub label_map: LabelMap,
    /// Frame names offered to the model, in prompt order.
    pub candidates: Vec<String>,
    pub expected_answer_schema: AnswerSchema,
}

/// `A`..`Z`, then `AA`, `AB`, ... up to `ZZ`.
pub fn option_label(index: usize) -> Result<String, PromptError> {
    const LETTERS: &[u8; 26] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if index < 26 {
        Ok((LETTERS[index] as char).to_string())
    } else if index < 26 * 27 {
        let i = index - 26;
        Ok(format!("{}{}", LETTERS[i / 26] as char, LETTERS[i % 26] as char))
    } else {
        Err(PromptError::TooManyCandidates(index + 1))
    }
}

fn letter_labels(n: usize) -> Result<Vec<String>, PromptError> {
    (0..n).map(option_label).collect()
}

fn apply_budget(definition: &str, budget: Option<usize>) -> String {
    match budget {
        Some(max) if definition.chars().count() > max => {
            let cut: String = definition.chars().take(max).collect();
            format!("{}....", cut.trim_end())
        }
        _ => definition.to_string(),
    }
}

fn with_terminal_period(s: &str) -> String {
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replaces whole-token occurrences of any frame name with `[frame]`.
pub fn redact_frame_names(text: &str, names: &[&str]) -> String {
    let mut out = text.to_string();
    let mut names: Vec<&str> = names.iter().copied().filter(|n| !n.is_empty()).collect();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    for name in names {
        let mut result = String::with_capacity(out.len());
        let mut rest = out.as_str();
        while let Some(pos) = rest.find(name) {
            let before_ok = rest[..pos].chars().next_back().is_none_or(|c| !is_word_char(c));
            let after = &rest[pos + name.len()..];
            let after_ok = after.chars().next().is_none_or(|c| !is_word_char(c));
            result.push_str(&rest[..pos]);
            if before_ok && after_ok {
                result.push_str("[frame]");
            } else {
                result.push_str(name);
            }
            rest = after;
        }
        result.push_str(rest);
        out = result;
    }
    out
}

fn frame_definition(c: &Candidate, config: &PromptConfig) -> String {
    apply_budget(&c.frame_definition, config.definition_char_budget)
}

fn simple_frame_line(c: &Candidate, config: &PromptConfig) -> String {
    let mut line = c.frame_name.clone();
    let g = config.granularity;
    if g.frame_defs() && !c.frame_definition.is_empty() {
        line.push_str(" ; Frame Definition : ");
        line.push_str(&frame_definition(c, config));
    }
    if g.lu_defs() && !c.lu_sense_definition.is_empty() {
        line.push_str(" ; Lexical Unit Definition : ");
        if let Some(lu) = &c.lu_name {
            line.push_str(lu);
            line.push_str(": ");
        }
        line.push_str(&with_terminal_period(&c.lu_sense_definition));
    }
    line
}

fn direct_qa_senses(instance: &AnnotatedInstance, candidates: &CandidateSet) -> String {
    let mut block = String::from("The different senses of this word are\n");
    for (i, c) in candidates.candidates.iter().enumerate() {
        let lu = c.lu_name.clone().unwrap_or_else(|| instance.target_lemma.clone());
        let def = if c.lu_sense_definition.is_empty() {
            "(no lexical unit definition)"
        } else {
            c.lu_sense_definition.as_str()
        };
        block.push_str(&format!("{}. {lu}: {def}\n", i + 1));
    }
    let names: Vec<String> = candidates.candidates.iter().map(|c| format!("'{}'", c.frame_name)).collect();
    block.push_str(&format!("These senses can be related to the frames: {} respectively\n", names.join(", ")));
    block
}

fn qa_finetune_option(label: &str, c: &Candidate, config: &PromptConfig) -> String {
    let mut line = format!("{label}. Frame: {}", c.frame_name);
    if !c.frame_definition.is_empty() {
        line.push_str(" - ");
        line.push_str(&frame_definition(c, config));
    }
    if !c.lu_sense_definition.is_empty() {
        line.push_str(" ; Lexical Unit Definition : ");
        if let Some(lu) = &c.lu_name {
            line.push_str(lu);
            line.push_str(" - ");
        }
        line.push_str(&c.lu_sense_definition);
    }
    line
}

/// Renders the per-instance question part of a prompt (everything a
/// demonstration repeats) and its label map.
pub(crate) fn render_query(
    instance: &AnnotatedInstance,
    candidates: &CandidateSet,
    config: &PromptConfig,
) -> Result<(String, LabelMap), PromptError> {
    let format = config.format;
    if candidates.is_empty() {
        return Err(PromptError::EmptyCandidates { format, instance_id: instance.instance_id.clone() });
    }
    let names: Vec<&str> = candidates.candidates.iter().map(|c| c.frame_name.as_str()).collect();
    let sentence = instance.sentence.as_str();
    let target = instance.target_lemma.as_str();
    match format {
        PromptFormat::Simple => {
            let frames: Vec<String> = candidates.candidates.iter().map(|c| simple_frame_line(c, config)).collect();
            let text = template::fill(
                template::SIMPLE_QUERY,
                &[("sentence", sentence), ("target", target), ("frames", &frames.join("\n"))],
            )?;
            Ok((text, LabelMap::default()))
        }
        PromptFormat::DirectQa => {
            let labels = letter_labels(candidates.len())?;
            let senses =
                if config.granularity.lu_defs() { direct_qa_senses(instance, candidates) } else { String::new() };
            let options: Vec<String> = labels
                .iter()
                .zip(&candidates.candidates)
                .map(|(label, c)| {
                    if config.granularity.frame_defs() && !c.frame_definition.is_empty() {
                        format!("{label}. Frame: {} - {}", c.frame_name, frame_definition(c, config))
                    } else {
                        format!("{label}. Frame: {}", c.frame_name)
                    }
                })
                .collect();
            let text = template::fill(
                template::DIRECT_QA_QUERY,
                &[("sentence", sentence), ("target", target), ("senses", &senses), ("options", &options.join("\n"))],
            )?;
            Ok((text, label_map(&labels, &names)))
        }
        PromptFormat::QaFinetune => {
            let labels = letter_labels(candidates.len())?;
            let options: Vec<String> = labels
                .iter()
                .zip(&candidates.candidates)
                .map(|(label, c)| qa_finetune_option(label, c, config))
                .collect();
            let text = template::fill(
                template::QA_FINETUNE,
                &[
                    ("target", target),
                    ("sentence", sentence),
                    ("options", &options.join("\n")),
                    ("label_list", &labels.join("/")),
                ],
            )?;
            Ok((text, label_map(&labels, &names)))
        }
        PromptFormat::DefEval => {
            let labels = letter_labels(candidates.len())?;
            let mut options = Vec::with_capacity(labels.len());
            for (label, c) in labels.iter().zip(&candidates.candidates) {
                if c.frame_definition.trim().is_empty() {
                    return Err(PromptError::MissingDefinition(c.frame_name.clone()));
                }
                let def = redact_frame_names(&frame_definition(c, config), &names);
                options.push(format!("{label}. {def}"));
            }
            let text = template::fill(
                template::DEF_EVAL_QUERY,
                &[("sentence", sentence), ("target", target), ("options", &options.join("\n"))],
            )?;
            Ok((text, label_map(&labels, &names)))
        }
        PromptFormat::Artifacts => {
            let entry = ArtifactEntry::from_instance(instance);
            let prompt = render_artifacts(&entry)?;
            Ok((prompt.text, prompt.label_map))
        }
        PromptFormat::DefGen => {
            let prompt = render_def_gen(&instance.gold_frame);
            Ok((prompt.text, LabelMap::default()))
        }
    }
}

fn label_map(labels: &[String], names: &[&str]) -> LabelMap {
    LabelMap::new(labels.iter().cloned().zip(names.iter().map(|n| n.to_string())).collect())
}

/// The gold answer to a query in the format's output schema, used for
/// demonstrations.
pub(crate) fn render_answer(format: PromptFormat, labels: &LabelMap, gold: &str) -> Option<String> {
    match format {
        PromptFormat::Simple => Some(serde_json::json!({ "frame_Name": gold }).to_string()),
        PromptFormat::DirectQa => {
            let label = labels.label_of(gold)?;
            Some(format!("{{\"frame_Option\": \"{label}\", \"frame_Name\": \"{gold}\"}}"))
        }
        PromptFormat::DefEval => {
            let label = labels.label_of(gold)?;
            Some(format!("{{\"frame_definition_Option\": \"{label}\"}}"))
        }
        PromptFormat::QaFinetune | PromptFormat::Artifacts => labels.label_of(gold).map(|l| format!(" {l}")),
        PromptFormat::DefGen => None,
    }
}

fn outer_template(format: PromptFormat) -> Option<&'static str> {
    match format {
        PromptFormat::Simple => Some(template::SIMPLE),
        PromptFormat::DirectQa => Some(template::DIRECT_QA),
        PromptFormat::DefEval => Some(template::DEF_EVAL),
        _ => None,
    }
}

/// Renders a full prompt for one instance.
pub fn render(
    instance: &AnnotatedInstance,
    candidates: &CandidateSet,
    config: &PromptConfig,
    exemplars: &ExemplarBlock,
) -> Result<RenderedPrompt, PromptError> {
    config.validate()?;
    let (query, label_map) = render_query(instance, candidates, config)?;
    let text = match outer_template(config.format) {
        Some(outer) => {
            let demos = exemplars.render_demonstrations(config.format, &instance.instance_id)?;
            template::fill(outer, &[("exemplars", &demos), ("query", &query)])?
        }
        None => {
            if !exemplars.is_empty() {
                return Err(PromptError::ShotsNotSupported(config.format));
            }
            query
        }
    };
    let candidates = match config.format {
        PromptFormat::Artifacts => label_map.frames().map(str::to_string).collect(),
        _ => candidates.frame_names().into_iter().map(str::to_string).collect(),
    };
    Ok(RenderedPrompt {
        instance_id: instance.instance_id.clone(),
        format: config.format,
        text,
        label_map,
        candidates,
        expected_answer_schema: config.format.answer_schema(),
    })
}

/// Renders the fixed 43-option Artifacts prompt.
pub fn render_artifacts(entry: &ArtifactEntry) -> Result<RenderedPrompt, PromptError> {
    let options = &entry.fixed_option_list;
    if options.len() != ARTIFACT_OPTION_COUNT || options.last().map(String::as_str) != Some(NONE_OF_ABOVE) {
        return Err(PromptError::ArtifactOptions { name: entry.name.clone(), found: options.len() });
    }
    let lines: Vec<String> = options.iter().enumerate().map(|(i, o)| format!("{}. Frame: {o}", i + 1)).collect();
    let text = template::fill(
        template::ARTIFACTS,
        &[("artifact", &entry.name), ("gloss", &entry.gloss), ("options", &lines.join("\n"))],
    )?;
    let label_map = LabelMap::new(options.iter().enumerate().map(|(i, o)| ((i + 1).to_string(), o.clone())).collect());
    Ok(RenderedPrompt {
        instance_id: entry.name.clone(),
        format: PromptFormat::Artifacts,
        text,
        candidates: options.clone(),
        label_map,
        expected_answer_schema: AnswerSchema::OrdinalAnswer,
    })
}

/// Renders the name-only definition generation prompt. Frame names are
/// passed verbatim, underscores included.
pub fn render_def_gen(frame_name: &str) -> RenderedPrompt {
    let text = template::fill(template::DEF_GEN, &[("frame_name", frame_name)]).expect("def_gen template has one slot");
    RenderedPrompt {
        instance_id: frame_name.to_string(),
        format: PromptFormat::DefGen,
        text,
        label_map: LabelMap::default(),
        candidates: vec![frame_name.to_string()],
        expected_answer_schema: AnswerSchema::DefinitionJson,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, Pos, Split};

    fn instance() -> AnnotatedInstance {
        AnnotatedInstance {
            instance_id: "i1".into(),
            sentence: "they live in the country now".into(),
            target_surface: "country".into(),
            target_char_span: (17, 24),
            target_lemma: "country".into(),
            target_pos: Pos::N,
            gold_frame: "Political_locales".into(),
            dataset: Dataset::Fn17,
            split: Split::Test,
            flags: Default::default(),
            gloss: None,
            pool: Default::default(),
        }
    }

    fn candidates(n: usize) -> CandidateSet {
        CandidateSet {
            target_lemma: "country".into(),
            target_pos: Pos::N,
            candidates: (0..n)
                .map(|i| Candidate {
                    frame_name: format!("Frame_{i}"),
                    frame_definition: format!("frame definition {i}"),
                    lu_name: Some("country.n".into()),
                    lu_sense_definition: format!("sense {i}"),
                    alternate_senses: vec![],
                })
                .collect(),
            ordering_seed: None,
            unknown: n == 0,
        }
    }

    #[test]
    fn labels_run_past_z() {
        assert_eq!(option_label(0).unwrap(), "A");
        assert_eq!(option_label(25).unwrap(), "Z");
        assert_eq!(option_label(26).unwrap(), "AA");
        assert_eq!(option_label(27).unwrap(), "AB");
        assert_eq!(option_label(52).unwrap(), "BA");
        assert_eq!(option_label(26 * 27 - 1).unwrap(), "ZZ");
        assert!(option_label(26 * 27).is_err());
    }

    #[test]
    fn thirty_candidates_use_double_letters() {
        let cfg = PromptConfig::new(PromptFormat::DirectQa, Granularity::Names, 0);
        let p = render(&instance(), &candidates(30), &cfg, &ExemplarBlock::empty()).unwrap();
        assert_eq!(p.label_map.len(), 30);
        assert_eq!(p.label_map.get("AD"), Some("Frame_29"));
        assert!(p.text.contains("\nAD. Frame: Frame_29"));
    }

    #[test]
    fn empty_candidates_rejected_for_option_formats() {
        for format in [PromptFormat::Simple, PromptFormat::DirectQa, PromptFormat::QaFinetune, PromptFormat::DefEval] {
            let cfg = PromptConfig::new(format, Granularity::Names, 0);
            let err = render(&instance(), &candidates(0), &cfg, &ExemplarBlock::empty()).unwrap_err();
            assert!(matches!(err, PromptError::EmptyCandidates { .. }));
        }
    }

    #[test]
    fn shots_rejected_for_fixed_formats() {
        let cfg = PromptConfig::new(PromptFormat::QaFinetune, Granularity::Names, 5);
        assert_eq!(cfg.validate(), Err(PromptError::ShotsNotSupported(PromptFormat::QaFinetune)));
    }

    #[test]
    fn budget_truncates_with_marker() {
        assert_eq!(apply_budget("abcdef ghij", Some(7)), "abcdef....");
        assert_eq!(apply_budget("short", Some(7)), "short");
        assert_eq!(apply_budget("short", None), "short");
    }

    #[test]
    fn redaction_is_whole_token() {
        let text = "A Judicial_body hears cases; Judicial_bodys differ. Body is fine.";
        assert_eq!(
            redact_frame_names(text, &["Judicial_body", "Body"]),
            "A [frame] hears cases; Judicial_bodys differ. [frame] is fine."
        );
    }

    #[test]
    fn def_eval_requires_definitions() {
        let mut c = candidates(2);
        c.candidates[1].frame_definition.clear();
        let cfg = PromptConfig::new(PromptFormat::DefEval, Granularity::Names, 0);
        let err = render(&instance(), &c, &cfg, &ExemplarBlock::empty()).unwrap_err();
        assert_eq!(err, PromptError::MissingDefinition("Frame_1".into()));
    }

    #[test]
    fn qa_finetune_label_list() {
        let cfg = PromptConfig::new(PromptFormat::QaFinetune, Granularity::Names, 0);
        let p = render(&instance(), &candidates(3), &cfg, &ExemplarBlock::empty()).unwrap();
        assert!(p.text.ends_with("Pick the best option (A/B/C).\nAnswer:"));
        assert_eq!(p.expected_answer_schema, AnswerSchema::LetterAnswer);
    }

    #[test]
    fn artifacts_option_count_checked() {
        let mut entry = ArtifactEntry::new("abacus", "a tablet", "Supporting");
        entry.fixed_option_list.pop();
        assert!(matches!(render_artifacts(&entry), Err(PromptError::ArtifactOptions { found: 42, .. })));
        let mut swapped = ArtifactEntry::new("abacus", "a tablet", "Supporting");
        swapped.fixed_option_list.swap(0, 42);
        assert!(render_artifacts(&swapped).is_err());
    }

    #[test]
    fn direct_qa_options_roundtrip_through_label_map() {
        let cfg = PromptConfig::new(PromptFormat::DirectQa, Granularity::Names, 0);
        let p = render(&instance(), &candidates(4), &cfg, &ExemplarBlock::empty()).unwrap();
        let rebuilt: Vec<String> = p.label_map.iter().map(|(l, f)| format!("{l}. Frame: {f}")).collect();
        assert!(p.text.ends_with(&format!("Options:\n{}", rebuilt.join("\n"))));
    }
}
