//! Tab-separated raw formats for the out-of-domain sets.
//!
//! YAGS (`dev.tsv`, `test.tsv`), one target per line:
//! `instance_id  sentence  start  end  lemma  pos_tag  gold_frame`
//! with half-open character offsets and Penn Treebank POS tags.
//!
//! Artifacts (`artifacts.tsv`): `name  gloss  gold_frame`.
//!
//! Lines starting with `#` and a header line whose first field is
//! `instance_id` or `name` are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use super::{normalize, CorpusError, RawRecord};
use super::{AnnotatedInstance, Dataset, Pos, SourcePool, Split};
use crate::lexicon::{Lexicon, PosMap};

pub fn yags_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.tsv"))
}

pub fn artifacts_file(dir: &Path) -> PathBuf {
    dir.join("artifacts.tsv")
}

pub fn default_pos_map() -> PosMap {
    PosMap::penn()
}

fn data_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::MissingFiles {
            path: path.to_path_buf(),
            expected: "tab-separated input file".into(),
        });
    }
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').map(str::to_string).collect::<Vec<_>>()))
        .filter(|(_, fields)| !matches!(fields[0].as_str(), "instance_id" | "name"))
        .collect())
}

pub fn read_yags(
    path: &Path,
    split: Split,
    pos_map: &PosMap,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<AnnotatedInstance>, CorpusError> {
    let malformed = |line: usize, message: String| CorpusError::Malformed { path: path.to_path_buf(), line, message };
    let mut out = Vec::new();
    for (line, fields) in data_lines(path)? {
        let [id, sentence, start, end, lemma, tag, frame] = fields.as_slice() else {
            return Err(malformed(line, format!("expected 7 tab-separated fields, found {}", fields.len())));
        };
        let parse_offset =
            |s: &str| s.trim().parse::<usize>().map_err(|e| malformed(line, format!("bad offset `{s}`: {e}")));
        let raw = RawRecord {
            instance_id: id.trim().to_string(),
            sentence: sentence.clone(),
            start: parse_offset(start)?,
            end: parse_offset(end)?,
            target_surface: None,
            lemma: lemma.trim().to_string(),
            pos: pos_map.map(tag),
            gold_frame: frame.trim().to_string(),
            dataset: Dataset::Yags,
            split,
            gloss: None,
            pool: SourcePool::FullText,
        };
        out.push(normalize(&raw, lexicon).map_err(|e| malformed(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_artifacts(path: &Path, lexicon: Option<&Lexicon>) -> Result<Vec<AnnotatedInstance>, CorpusError> {
    let mut out = Vec::new();
    for (n, (line, fields)) in data_lines(path)?.into_iter().enumerate() {
        let [name, gloss, frame] = fields.as_slice() else {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        let name = name.trim();
        let raw = RawRecord {
            instance_id: format!("artifacts:{}", n + 1),
            sentence: name.to_string(),
            start: 0,
            end: name.chars().count(),
            target_surface: Some(name.to_string()),
            lemma: name.to_string(),
            pos: Pos::N,
            gold_frame: frame.trim().to_string(),
            dataset: Dataset::Artifacts,
            split: Split::Test,
            gloss: Some(gloss.clone()),
            pool: SourcePool::FullText,
        };
        let inst = normalize(&raw, lexicon).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}
