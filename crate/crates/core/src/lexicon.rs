//! Lexical-unit index and candidate frame retrieval (lexical filtering).
//!
//! A [`Lexicon`] is immutable once built and can be shared across threads.
//! Candidates for a target are the distinct frames of all lexical units whose
//! normalized lemma and POS match, in lexicon (insertion) order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FrameRecord, LexicalUnit, LexiconVersion, Pos};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("frame with empty name at position {0}")]
    EmptyFrameName(usize),
    #[error("duplicate frame name `{0}`")]
    DuplicateFrame(String),
    #[error("lexical unit `{lu}` references unknown frame `{frame}`")]
    DanglingFrame { lu: String, frame: String },
    #[error("duplicate lexical unit ({lemma}, {pos}, {frame}) (ids `{first}` and `{second}`)")]
    DuplicateLexicalUnit { lemma: String, pos: Pos, frame: String, first: String, second: String },
    #[error("duplicate lexical unit id `{0}`")]
    DuplicateLexicalUnitId(String),
}

/// Normalizes a lemma for lookup: lowercase, trimmed, internal whitespace collapsed.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    version: LexiconVersion,
    frames: Vec<FrameRecord>,
    units: Vec<LexicalUnit>,
    frame_index: HashMap<String, usize>,
    lemma_index: HashMap<(String, Pos), Vec<usize>>,
}

impl Lexicon {
    /// Cross-links frames and lexical units. `lexical_unit_ids` on the frames
    /// are rebuilt from the units, so callers may leave them empty.
    pub fn new(
        version: LexiconVersion,
        mut frames: Vec<FrameRecord>,
        units: Vec<LexicalUnit>,
    ) -> Result<Self, LexiconError> {
        let mut frame_index = HashMap::with_capacity(frames.len());
        for (i, frame) in frames.iter_mut().enumerate() {
            if frame.name.trim().is_empty() {
                return Err(LexiconError::EmptyFrameName(i));
            }
            if frame_index.insert(frame.name.clone(), i).is_some() {
                return Err(LexiconError::DuplicateFrame(frame.name.clone()));
            }
            frame.lexical_unit_ids.clear();
            if frame.definition.trim().is_empty() {
                frame.definition_missing = true;
            }
        }

        let mut ids = HashSet::with_capacity(units.len());
        let mut triples: HashMap<(String, Pos, String), usize> = HashMap::with_capacity(units.len());
        let mut lemma_index: HashMap<(String, Pos), Vec<usize>> = HashMap::new();
        for (i, lu) in units.iter().enumerate() {
            let Some(&frame_pos) = frame_index.get(&lu.frame_name) else {
                return Err(LexiconError::DanglingFrame { lu: lu.id.clone(), frame: lu.frame_name.clone() });
            };
            if !ids.insert(lu.id.clone()) {
                return Err(LexiconError::DuplicateLexicalUnitId(lu.id.clone()));
            }
            let triple = (lu.lemma.clone(), lu.pos, lu.frame_name.clone());
            if let Some(&prev) = triples.get(&triple) {
                return Err(LexiconError::DuplicateLexicalUnit {
                    lemma: lu.lemma.clone(),
                    pos: lu.pos,
                    frame: lu.frame_name.clone(),
                    first: units[prev].id.clone(),
                    second: lu.id.clone(),
                });
            }
            triples.insert(triple, i);
            frames[frame_pos].lexical_unit_ids.push(lu.id.clone());
            lemma_index.entry((normalize_lemma(&lu.lemma), lu.pos)).or_default().push(i);
        }

        Ok(Lexicon { version, frames, units, frame_index, lemma_index })
    }

    pub fn version(&self) -> LexiconVersion {
        self.version
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn units(&self) -> &[LexicalUnit] {
        &self.units
    }

    pub fn frame(&self, name: &str) -> Option<&FrameRecord> {
        self.frame_index.get(name).map(|&i| &self.frames[i])
    }

    pub fn contains_frame(&self, name: &str) -> bool {
        self.frame_index.contains_key(name)
    }

    /// (frame count, lexical unit count)
    pub fn counts(&self) -> (usize, usize) {
        (self.frames.len(), self.units.len())
    }

    /// Lexical filtering for one target.
    pub fn lookup_candidates(&self, lemma: &str, pos: Pos) -> CandidateSet {
        let key = (normalize_lemma(lemma), pos);
        let mut candidates: Vec<Candidate> = Vec::new();
        if let Some(unit_ids) = self.lemma_index.get(&key) {
            for &i in unit_ids {
                let lu = &self.units[i];
                if let Some(existing) = candidates.iter_mut().find(|c| c.frame_name == lu.frame_name) {
                    existing.alternate_senses.push(lu.sense_definition.clone());
                    continue;
                }
                let frame = &self.frames[self.frame_index[&lu.frame_name]];
                candidates.push(Candidate {
                    frame_name: frame.name.clone(),
                    frame_definition: frame.definition.clone(),
                    lu_name: Some(lu.display_name()),
                    lu_sense_definition: lu.sense_definition.clone(),
                    alternate_senses: Vec::new(),
                });
            }
        }
        CandidateSet {
            target_lemma: key.0,
            target_pos: pos,
            unknown: candidates.is_empty(),
            candidates,
            ordering_seed: None,
        }
    }

    /// A candidate entry for a frame reached without a lexical unit
    /// (gold injection, all-frames mode).
    pub fn bare_candidate(&self, frame_name: &str) -> Option<Candidate> {
        self.frame(frame_name).map(|frame| Candidate {
            frame_name: frame.name.clone(),
            frame_definition: frame.definition.clone(),
            lu_name: None,
            lu_sense_definition: String::new(),
            alternate_senses: Vec::new(),
        })
    }

    /// Candidates for a target under the given retrieval mode.
    pub fn candidates_for(&self, lemma: &str, pos: Pos, gold_frame: &str, mode: CandidateMode) -> CandidateSet {
        let mut set = self.lookup_candidates(lemma, pos);
        match mode {
            CandidateMode::Filtered => {}
            CandidateMode::FilteredPlusGold => {
                if !set.contains(gold_frame) {
                    if let Some(c) = self.bare_candidate(gold_frame) {
                        set.candidates.push(c);
                    }
                }
            }
            CandidateMode::AllFrames => {
                for frame in &self.frames {
                    if !set.contains(&frame.name) {
                        set.candidates.push(self.bare_candidate(&frame.name).expect("frame exists"));
                    }
                }
            }
        }
        set
    }
}

/// How candidate frames are produced for a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// lexical filtering only
    #[default]
    Filtered,
    /// lexical filtering, with the gold frame appended when missing
    FilteredPlusGold,
    /// every frame in the lexicon
    AllFrames,
}

impl CandidateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateMode::Filtered => "filtered",
            CandidateMode::FilteredPlusGold => "filtered_plus_gold",
            CandidateMode::AllFrames => "all_frames",
        }
    }
}

impl fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "filtered" => Ok(CandidateMode::Filtered),
            "filtered_plus_gold" => Ok(CandidateMode::FilteredPlusGold),
            "all_frames" => Ok(CandidateMode::AllFrames),
            other => Err(format!("unknown candidate mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub frame_name: String,
    pub frame_definition: String,
    /// e.g. `serve.v`; absent for frames not reached through a lexical unit
    pub lu_name: Option<String>,
    pub lu_sense_definition: String,
    /// Sense definitions of further LUs of the same lemma+POS in this frame.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternate_senses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub target_lemma: String,
    pub target_pos: Pos,
    pub candidates: Vec<Candidate>,
    /// `None` means lexicon order.
    pub ordering_seed: Option<u64>,
    pub unknown: bool,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, frame_name: &str) -> bool {
        self.candidates.iter().any(|c| c.frame_name == frame_name)
    }

    pub fn frame_names(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.frame_name.as_str()).collect()
    }

    /// Returns a copy whose candidates are permuted by a seeded shuffle.
    pub fn shuffled(&self, seed: u64) -> CandidateSet {
        let mut out = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.candidates.shuffle(&mut rng);
        out.ordering_seed = Some(seed);
        out
    }
}

/// True when the target can evoke two or more frames.
pub fn is_ambiguous(candidates: &CandidateSet) -> bool {
    candidates.len() >= 2
}

/// Table-driven mapping from dataset POS tags to the internal classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosMap {
    /// Exact tag → class, matched case-insensitively.
    pub exact: HashMap<String, Pos>,
    /// Tag prefix → class, checked longest first when no exact entry matches.
    #[serde(default)]
    pub prefixes: Vec<(String, Pos)>,
    #[serde(default = "default_fallback")]
    pub fallback: Pos,
}

fn default_fallback() -> Pos {
    Pos::Other
}

impl PosMap {
    /// FrameNet LU suffixes and POS attributes (`v`, `n`, `a`, `adv`, `prep`,
    /// plus the minor classes which all map to `other`).
    pub fn framenet() -> Self {
        let exact = [
            ("v", Pos::V),
            ("n", Pos::N),
            ("a", Pos::A),
            ("adv", Pos::Adv),
            ("prep", Pos::Prep),
            ("num", Pos::Other),
            ("art", Pos::Other),
            ("c", Pos::Other),
            ("scon", Pos::Other),
            ("intj", Pos::Other),
            ("pron", Pos::Other),
            ("idio", Pos::Other),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        PosMap { exact, prefixes: Vec::new(), fallback: Pos::Other }
    }

    /// Penn Treebank tags as used by YAGS, plus the FrameNet suffixes.
    pub fn penn() -> Self {
        let mut map = PosMap::framenet();
        map.exact.insert("in".into(), Pos::Prep);
        map.exact.insert("to".into(), Pos::Prep);
        map.prefixes = vec![
            ("vb".into(), Pos::V),
            ("md".into(), Pos::V),
            ("nn".into(), Pos::N),
            ("jj".into(), Pos::A),
            ("rb".into(), Pos::Adv),
            ("wrb".into(), Pos::Adv),
        ];
        map
    }

    pub fn map(&self, tag: &str) -> Pos {
        let tag = tag.trim().to_ascii_lowercase();
        if let Some(&pos) = self.exact.get(&tag) {
            return pos;
        }
        self.prefixes
            .iter()
            .filter(|(prefix, _)| tag.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|&(_, pos)| pos)
            .unwrap_or(self.fallback)
    }
}
