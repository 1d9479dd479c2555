use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Coarse part-of-speech classes used for lexical-unit matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    V,
    N,
    A,
    Adv,
    Prep,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::V => "v",
            Pos::N => "n",
            Pos::A => "a",
            Pos::Adv => "adv",
            Pos::Prep => "prep",
            Pos::Other => "other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v" => Ok(Pos::V),
            "n" => Ok(Pos::N),
            "a" => Ok(Pos::A),
            "adv" => Ok(Pos::Adv),
            "prep" => Ok(Pos::Prep),
            "other" => Ok(Pos::Other),
            other => Err(format!("unknown part of speech `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Fn15,
    Fn17,
    Yags,
    Artifacts,
}

impl Dataset {
    pub const ALL: [Dataset; 4] = [Dataset::Fn15, Dataset::Fn17, Dataset::Yags, Dataset::Artifacts];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Fn15 => "fn15",
            Dataset::Fn17 => "fn17",
            Dataset::Yags => "yags",
            Dataset::Artifacts => "artifacts",
        }
    }

    /// Splits that exist for this dataset. YAGS has no training data and
    /// Artifacts is evaluation-only.
    pub fn splits(self) -> &'static [Split] {
        match self {
            Dataset::Fn15 | Dataset::Fn17 => &[Split::Train, Split::Dev, Split::Test],
            Dataset::Yags => &[Split::Dev, Split::Test],
            Dataset::Artifacts => &[Split::Test],
        }
    }

    /// Lexicon release whose frame inventory annotates this dataset.
    pub fn companion_lexicon(self) -> LexiconVersion {
        match self {
            Dataset::Fn15 | Dataset::Yags => LexiconVersion::Fn15,
            Dataset::Fn17 | Dataset::Artifacts => LexiconVersion::Fn17,
        }
    }

    /// Training split that few-shot exemplars are drawn from.
    pub fn exemplar_source(self) -> Dataset {
        match self {
            Dataset::Fn15 | Dataset::Yags => Dataset::Fn15,
            Dataset::Fn17 | Dataset::Artifacts => Dataset::Fn17,
        }
    }

    /// Published size of each split.
    pub fn expected_size(self, split: Split) -> Option<usize> {
        match (self, split) {
            (Dataset::Fn15, Split::Train) => Some(15_017),
            (Dataset::Fn15, Split::Dev) => Some(4_463),
            (Dataset::Fn15, Split::Test) => Some(4_457),
            (Dataset::Fn17, Split::Train) => Some(19_391),
            (Dataset::Fn17, Split::Dev) => Some(2_272),
            (Dataset::Fn17, Split::Test) => Some(6_714),
            (Dataset::Yags, Split::Dev) => Some(944),
            (Dataset::Yags, Split::Test) => Some(1_971),
            (Dataset::Artifacts, Split::Test) => Some(938),
            _ => None,
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dataset `{s}` (expected fn15, fn17, yags or artifacts)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconVersion {
    Fn15,
    Fn17,
}

impl LexiconVersion {
    pub fn as_str(self) -> &'static str {
        match self {
            LexiconVersion::Fn15 => "fn15",
            LexiconVersion::Fn17 => "fn17",
        }
    }
}

impl fmt::Display for LexiconVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexiconVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fn15" => Ok(LexiconVersion::Fn15),
            "fn17" => Ok(LexiconVersion::Fn17),
            other => Err(format!("unknown lexicon version `{other}` (expected fn15 or fn17)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, dev or test)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFlag {
    /// lemma+POS matches no lexical unit
    UnknownTarget,
    /// gold frame is not among the target's lexicon candidates
    UnlinkedTarget,
}

/// Where a FrameNet instance was harvested from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePool {
    #[default]
    FullText,
    Exemplar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub name: String,
    pub definition: String,
    pub lexical_unit_ids: Vec<String>,
    /// Set when the release ships the frame without a definition.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub definition_missing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalUnit {
    pub id: String,
    pub lemma: String,
    pub pos: Pos,
    pub sense_definition: String,
    pub frame_name: String,
}

impl LexicalUnit {
    /// FrameNet-style display name, e.g. `country.n`.
    pub fn display_name(&self) -> String {
        format!("{}.{}", self.lemma, self.pos)
    }
}

/// One frame-identification instance: a target span in a sentence and its gold frame.
///
/// `target_char_span` is a half-open range of *character* (not byte) offsets
/// into `sentence`, after whitespace normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedInstance {
    pub instance_id: String,
    pub sentence: String,
    pub target_surface: String,
    pub target_char_span: (usize, usize),
    pub target_lemma: String,
    pub target_pos: Pos,
    pub gold_frame: String,
    pub dataset: Dataset,
    pub split: Split,
    #[serde(default)]
    pub flags: BTreeSet<InstanceFlag>,
    /// Dictionary gloss for phrase-level datasets (Artifacts).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_pool")]
    pub pool: SourcePool,
}

fn is_default_pool(pool: &SourcePool) -> bool {
    *pool == SourcePool::FullText
}

impl AnnotatedInstance {
    pub fn has_flag(&self, flag: InstanceFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Number of options in every Artifacts prompt.
pub const ARTIFACT_OPTION_COUNT: usize = 43;
pub const NONE_OF_ABOVE: &str = "None of above";

/// The fixed option inventory shown for every Artifacts entry.
pub const ARTIFACT_OPTIONS: [&str; ARTIFACT_OPTION_COUNT] = [
    "Cause_motion",
    "Cause_to_be_dry",
    "Excreting",
    "Containing",
    "Cause_harm",
    "Rite",
    "Protecting",
    "Building",
    "Education_teaching",
    "Cutting",
    "Cooking_creation",
    "Light_movement",
    "Bringing",
    "Dimension",
    "Closure",
    "Hunting",
    "Supporting",
    "Agriculture",
    "Cure",
    "Competition",
    "Commercial_transaction",
    "Cause_to_fragment",
    "Cause_fluidic_motion",
    "Eclipse",
    "Grooming",
    "Make_noise",
    "Cause_temperature_change",
    "Ingestion",
    "Create_representation",
    "Inhibit_movement",
    "Residence",
    "Performing_arts",
    "Setting_fire",
    "Attaching",
    "Removing",
    "Wearing",
    "Sleep",
    "Contacting",
    "Self_motion",
    "Perception_experience",
    "Text_creation",
    "Reading_activity",
    NONE_OF_ABOVE,
];

/// An artifact noun with its gloss and the fixed 43-way option list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub gloss: String,
    pub gold_frame: String,
    pub fixed_option_list: Vec<String>,
}

impl ArtifactEntry {
    pub fn new(name: impl Into<String>, gloss: impl Into<String>, gold_frame: impl Into<String>) -> Self {
        ArtifactEntry {
            name: name.into(),
            gloss: gloss.into(),
            gold_frame: gold_frame.into(),
            fixed_option_list: ARTIFACT_OPTIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Rebuilds the entry from an Artifacts instance.
    pub fn from_instance(instance: &AnnotatedInstance) -> Self {
        ArtifactEntry::new(
            instance.target_surface.clone(),
            instance.gloss.clone().unwrap_or_default(),
            instance.gold_frame.clone(),
        )
    }

    /// Option that counts as correct: the gold frame when listed, otherwise
    /// "None of above".
    pub fn effective_gold(&self) -> &str {
        if self.fixed_option_list[..self.fixed_option_list.len().saturating_sub(1)]
            .iter()
            .any(|o| o == &self.gold_frame)
        {
            &self.gold_frame
        } else {
            NONE_OF_ABOVE
        }
    }
}
