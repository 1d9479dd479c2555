//! Reader for raw FrameNet XML releases.
//!
//! Expected release layout (as distributed for 1.5 and 1.7):
//!
//! ```text
//! <release>/frame/*.xml      one file per frame, with its lexUnit children
//! <release>/fulltext/*.xml   full-text annotated documents
//! <release>/lu/*.xml         per-LU exemplar sentences (optional)
//! ```
//!
//! Split membership for full-text documents comes from a [`SplitManifest`].

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::{normalize, normalize_whitespace, CorpusError, RawRecord};
use super::{AnnotatedInstance, Dataset, FrameRecord, LexicalUnit, LexiconVersion, Pos, SourcePool, Split};
use crate::lexicon::{Lexicon, PosMap};

pub fn has_frame_xml(release: &Path) -> bool {
    !xml_files(&release.join("frame")).is_empty()
}

fn xml_files(dir: &Path) -> Vec<PathBuf> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("xml")))
        .collect();
    files.sort();
    files
}

fn attr(e: &BytesStart<'_>, name: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name.as_bytes())
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

fn xml_err(path: &Path, e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Xml { path: path.to_path_buf(), message: e.to_string() }
}

/// Strips the embedded markup FrameNet keeps inside definitions
/// (`<def-root>`, `<fen>`, `<ex>`, ...) and collapses whitespace.
pub fn clean_definition(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut tag = String::new();
    let mut in_tag = false;
    for ch in raw.chars() {
        match ch {
            '<' => {
                in_tag = true;
                tag.clear();
            }
            '>' if in_tag => {
                in_tag = false;
                // block elements separate text, inline ones (fen, t, ...) do not
                let name = tag.trim_start_matches('/').split_whitespace().next().unwrap_or("");
                if matches!(name, "def-root" | "ex" | "p" | "br" | "br/") {
                    out.push(' ');
                }
            }
            _ if in_tag => tag.push(ch),
            _ => out.push(ch),
        }
    }
    normalize_whitespace(&out)
}

/// Drops the dictionary source prefix FrameNet puts on LU definitions.
pub fn clean_lu_definition(raw: &str) -> String {
    let cleaned = clean_definition(raw);
    for prefix in ["COD:", "FN:"] {
        if let Some(rest) = cleaned.strip_prefix(prefix) {
            return rest.trim().to_string();
        }
    }
    cleaned
}

/// Splits an LU name such as `serve.v` or `give up.v` into lemma and POS.
pub fn split_lu_name(name: &str, pos_map: &PosMap) -> (String, Pos) {
    match name.rsplit_once('.') {
        Some((lemma, suffix)) if !suffix.is_empty() && !suffix.contains(' ') => {
            (lemma.to_string(), pos_map.map(suffix))
        }
        _ => (name.to_string(), Pos::Other),
    }
}

/// Reads every `frame/*.xml` file of a release.
pub fn read_lexicon(release: &Path, version: LexiconVersion) -> Result<Lexicon, CorpusError> {
    let files = xml_files(&release.join("frame"));
    if files.is_empty() {
        return Err(CorpusError::MissingFiles { path: release.to_path_buf(), expected: "frame/*.xml".into() });
    }
    let pos_map = PosMap::framenet();
    let mut frames = Vec::new();
    let mut units = Vec::new();
    for path in files {
        let (frame, lus) = read_frame_file(&path, &pos_map)?;
        frames.push(frame);
        units.extend(lus);
    }
    Ok(Lexicon::new(version, frames, units)?)
}

fn read_frame_file(path: &Path, pos_map: &PosMap) -> Result<(FrameRecord, Vec<LexicalUnit>), CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut reader = Reader::from_str(&content);
    let mut stack: Vec<String> = Vec::new();
    let mut frame_name: Option<String> = None;
    let mut frame_def = String::new();
    let mut units: Vec<LexicalUnit> = Vec::new();
    let mut current_lu: Option<LexicalUnit> = None;

    loop {
        let event = reader.read_event().map_err(|e| xml_err(path, e))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match name.as_str() {
                    "frame" if stack.is_empty() => frame_name = attr(e, "name"),
                    "lexUnit" if stack.len() == 1 => {
                        let lu_name = attr(e, "name").unwrap_or_default();
                        let (lemma, suffix_pos) = split_lu_name(&lu_name, pos_map);
                        let pos = attr(e, "POS").map(|p| pos_map.map(&p)).unwrap_or(suffix_pos);
                        let lu = LexicalUnit {
                            id: attr(e, "ID").unwrap_or_else(|| lu_name.clone()),
                            lemma,
                            pos,
                            sense_definition: String::new(),
                            frame_name: String::new(),
                        };
                        if is_empty {
                            units.push(lu);
                        } else {
                            current_lu = Some(lu);
                        }
                    }
                    _ => {}
                }
                if !is_empty {
                    stack.push(name);
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| xml_err(path, e))?;
                append_definition(&stack, &text, &mut frame_def, current_lu.as_mut());
            }
            Event::CData(t) => {
                let text = String::from_utf8_lossy(&t).into_owned();
                append_definition(&stack, &text, &mut frame_def, current_lu.as_mut());
            }
            Event::End(_) => {
                if stack.pop().as_deref() == Some("lexUnit") && stack.len() == 1 {
                    if let Some(lu) = current_lu.take() {
                        units.push(lu);
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    let name = frame_name.ok_or_else(|| xml_err(path, "no <frame name=...> root"))?;
    for lu in &mut units {
        lu.frame_name = name.clone();
        lu.sense_definition = clean_lu_definition(&lu.sense_definition);
    }
    let definition = clean_definition(&frame_def);
    Ok((
        FrameRecord {
            name,
            definition_missing: definition.is_empty(),
            definition,
            lexical_unit_ids: units.iter().map(|u| u.id.clone()).collect(),
        },
        units,
    ))
}

fn append_definition(stack: &[String], text: &str, frame_def: &mut String, lu: Option<&mut LexicalUnit>) {
    let n = stack.len();
    if n < 2 || stack[n - 1] != "definition" {
        return;
    }
    match (stack[n - 2].as_str(), n) {
        ("frame", 2) => frame_def.push_str(text),
        ("lexUnit", 3) => {
            if let Some(lu) = lu {
                lu.sense_definition.push_str(text);
            }
        }
        _ => {}
    }
}

/// Which FrameNet instance pools feed the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstancePool {
    #[default]
    FullText,
    Exemplars,
    Both,
}

/// Document-level split assignment for full-text annotations.
///
/// Entries are document file stems (a trailing `.xml` is ignored). Documents
/// not listed under `dev` or `test` are training documents unless `train` is
/// given explicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dev: Vec<String>,
    pub test: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<Vec<String>>,
}

impl SplitManifest {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    fn strip(doc: &str) -> &str {
        doc.strip_suffix(".xml").unwrap_or(doc)
    }

    pub fn split_of(&self, document: &str) -> Option<Split> {
        let document = Self::strip(document);
        let listed = |docs: &[String]| docs.iter().any(|d| Self::strip(d) == document);
        if listed(&self.test) {
            Some(Split::Test)
        } else if listed(&self.dev) {
            Some(Split::Dev)
        } else {
            match &self.train {
                Some(train) if !listed(train) => None,
                _ => Some(Split::Train),
            }
        }
    }
}

/// All three splits of a FrameNet release.
#[derive(Debug, Clone, Default)]
pub struct FrameNetSplits {
    pub train: Vec<AnnotatedInstance>,
    pub dev: Vec<AnnotatedInstance>,
    pub test: Vec<AnnotatedInstance>,
}

impl FrameNetSplits {
    pub fn get(&self, split: Split) -> &[AnnotatedInstance] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    fn push(&mut self, inst: AnnotatedInstance) {
        match inst.split {
            Split::Train => self.train.push(inst),
            Split::Dev => self.dev.push(inst),
            Split::Test => self.test.push(inst),
        }
    }
}

/// Reads full-text (and optionally exemplar) annotations into splits.
pub fn read_splits(
    release: &Path,
    dataset: Dataset,
    manifest: &SplitManifest,
    pool: InstancePool,
    lexicon: &Lexicon,
) -> Result<FrameNetSplits, CorpusError> {
    let pos_map = PosMap::framenet();
    let mut splits = FrameNetSplits::default();
    let mut seen = HashSet::new();

    if matches!(pool, InstancePool::FullText | InstancePool::Both) {
        let files = xml_files(&release.join("fulltext"));
        if files.is_empty() {
            return Err(CorpusError::MissingFiles { path: release.to_path_buf(), expected: "fulltext/*.xml".into() });
        }
        for path in files {
            let doc = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let Some(split) = manifest.split_of(&doc) else {
                continue;
            };
            for raw in read_annotated_file(&path, dataset, split, SourcePool::FullText, &pos_map)? {
                push_record(&mut splits, &mut seen, &path, raw, lexicon)?;
            }
        }
    }
    if matches!(pool, InstancePool::Exemplars | InstancePool::Both) {
        for path in xml_files(&release.join("lu")) {
            for raw in read_annotated_file(&path, dataset, Split::Train, SourcePool::Exemplar, &pos_map)? {
                push_record(&mut splits, &mut seen, &path, raw, lexicon)?;
            }
        }
    }
    Ok(splits)
}

fn push_record(
    splits: &mut FrameNetSplits,
    seen: &mut HashSet<String>,
    path: &Path,
    raw: RawRecord,
    lexicon: &Lexicon,
) -> Result<(), CorpusError> {
    if !seen.insert(raw.instance_id.clone()) {
        log::warn!("{}: duplicate instance {} skipped", path.display(), raw.instance_id);
        return Ok(());
    }
    let inst = normalize(&raw, Some(lexicon)).map_err(|e| CorpusError::Malformed {
        path: path.to_path_buf(),
        line: 0,
        message: format!("instance `{}`: {e}", raw.instance_id),
    })?;
    splits.push(inst);
    Ok(())
}

#[derive(Default)]
struct PendingSet {
    id: String,
    frame: Option<String>,
    lu_name: Option<String>,
    in_target_layer: bool,
    spans: Vec<(usize, usize)>,
}

/// Reads `<sentence>` elements with frame-annotated target layers from a
/// full-text document or an LU exemplar file. For LU files the frame and LU
/// name default to the root `<lexUnit>` attributes.
fn read_annotated_file(
    path: &Path,
    dataset: Dataset,
    split: Split,
    source_pool: SourcePool,
    pos_map: &PosMap,
) -> Result<Vec<RawRecord>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut reader = Reader::from_str(&content);
    let mut stack: Vec<String> = Vec::new();
    let mut root_frame: Option<String> = None;
    let mut root_lu: Option<String> = None;
    let mut sentence_text = String::new();
    let mut sets: Vec<PendingSet> = Vec::new();
    let mut current: Option<PendingSet> = None;
    let mut out = Vec::new();

    loop {
        let event = reader.read_event().map_err(|e| xml_err(path, e))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match name.as_str() {
                    "lexUnit" if stack.is_empty() => {
                        root_frame = attr(e, "frame");
                        root_lu = attr(e, "name");
                    }
                    "sentence" => {
                        sentence_text.clear();
                        sets.clear();
                    }
                    "annotationSet" => {
                        current = Some(PendingSet {
                            id: attr(e, "ID").unwrap_or_default(),
                            frame: attr(e, "frameName").or_else(|| root_frame.clone()),
                            lu_name: attr(e, "luName").or_else(|| root_lu.clone()),
                            ..Default::default()
                        });
                    }
                    "layer" => {
                        if let Some(set) = current.as_mut() {
                            set.in_target_layer = attr(e, "name").as_deref() == Some("Target");
                        }
                    }
                    "label" => {
                        if let Some(set) = current.as_mut().filter(|s| s.in_target_layer) {
                            let start = attr(e, "start").and_then(|v| v.parse::<usize>().ok());
                            let end = attr(e, "end").and_then(|v| v.parse::<usize>().ok());
                            if let (Some(start), Some(end)) = (start, end) {
                                set.spans.push((start, end + 1));
                            }
                        }
                    }
                    _ => {}
                }
                if matches!(event, Event::Start(_)) {
                    stack.push(name);
                } else if name == "annotationSet" {
                    if let Some(set) = current.take() {
                        sets.push(set);
                    }
                }
            }
            Event::Text(t) => {
                if stack.last().map(String::as_str) == Some("text") {
                    sentence_text.push_str(&t.unescape().map_err(|e| xml_err(path, e))?);
                }
            }
            Event::End(_) => match stack.pop().as_deref() {
                Some("annotationSet") => {
                    if let Some(set) = current.take() {
                        sets.push(set);
                    }
                }
                Some("layer") => {
                    if let Some(set) = current.as_mut() {
                        set.in_target_layer = false;
                    }
                }
                Some("sentence") => {
                    for set in sets.drain(..) {
                        let (Some(frame), Some(lu_name)) = (set.frame, set.lu_name) else {
                            continue;
                        };
                        let (Some(start), Some(end)) =
                            (set.spans.iter().map(|s| s.0).min(), set.spans.iter().map(|s| s.1).max())
                        else {
                            continue;
                        };
                        let (lemma, pos) = split_lu_name(&lu_name, pos_map);
                        out.push(RawRecord {
                            instance_id: format!("{}:{}", dataset.as_str(), set.id),
                            sentence: sentence_text.clone(),
                            start,
                            end,
                            target_surface: None,
                            lemma,
                            pos,
                            gold_frame: frame,
                            dataset,
                            split,
                            gloss: None,
                            pool: source_pool,
                        });
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}
