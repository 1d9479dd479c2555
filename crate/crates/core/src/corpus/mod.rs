//! Lexicon and dataset ingestion.
//!
//! Everything downstream reads the JSONL interchange format (see
//! `docs/formats.md`). Raw FrameNet XML releases, YAGS TSV and Artifacts TSV
//! files are converted once through the readers in [`framenet`] and [`raw`].

pub mod framenet;
mod normalize;
pub mod raw;
mod types;

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use normalize::{normalize, normalize_whitespace, validate_instance, RawRecord, RecordError};
pub use types::*;

use crate::lexicon::{Lexicon, LexiconError};

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const UNITS_FILE: &str = "lexical_units.jsonl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing input under {path}: expected {expected}")]
    MissingFiles { path: PathBuf, expected: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{path}: XML error: {message}")]
    Xml { path: PathBuf, message: String },
    #[error("dataset {dataset} has no {split} split")]
    UnknownSplit { dataset: Dataset, split: Split },
    #[error("instance `{instance_id}` appears in both {first} and {second}")]
    SplitOverlap { instance_id: String, first: Split, second: Split },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// Reads one JSON value per non-blank line, reporting 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("interchange types serialize");
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

/// Loads a lexicon from either interchange JSONL (`frames.jsonl` +
/// `lexical_units.jsonl`) or a raw FrameNet release (a `frame/` directory of
/// XML files), whichever `source` contains.
pub fn load_lexicon(source: &Path, version: LexiconVersion) -> Result<Lexicon, CorpusError> {
    let frames_path = source.join(FRAMES_FILE);
    let lexicon = if frames_path.is_file() {
        let units_path = source.join(UNITS_FILE);
        if !units_path.is_file() {
            return Err(CorpusError::MissingFiles { path: source.to_path_buf(), expected: UNITS_FILE.into() });
        }
        let frames: Vec<FrameRecord> = read_jsonl(&frames_path)?;
        let units: Vec<LexicalUnit> = read_jsonl(&units_path)?;
        Lexicon::new(version, frames, units)?
    } else if framenet::has_frame_xml(source) {
        framenet::read_lexicon(source, version)?
    } else {
        return Err(CorpusError::MissingFiles {
            path: source.to_path_buf(),
            expected: format!("{FRAMES_FILE} and {UNITS_FILE}, or a frame/ directory of FrameNet XML"),
        });
    };
    let (frames, units) = lexicon.counts();
    log::info!("loaded {version} lexicon from {}: {frames} frames, {units} lexical units", source.display());
    Ok(lexicon)
}

pub fn write_lexicon(lexicon: &Lexicon, dir: &Path) -> Result<(), CorpusError> {
    write_jsonl(&dir.join(FRAMES_FILE), lexicon.frames())?;
    write_jsonl(&dir.join(UNITS_FILE), lexicon.units())
}

pub fn split_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

fn check_split(dataset: Dataset, split: Split) -> Result<(), CorpusError> {
    if dataset.splits().contains(&split) {
        Ok(())
    } else {
        Err(CorpusError::UnknownSplit { dataset, split })
    }
}

/// Loads one split. `source` holds either `<split>.jsonl` interchange files
/// or, for YAGS and Artifacts, the raw TSV files read by [`raw`]. The lexicon
/// is only consulted to compute flags for raw input.
pub fn load_dataset(
    source: &Path,
    dataset: Dataset,
    split: Split,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<AnnotatedInstance>, CorpusError> {
    check_split(dataset, split)?;
    let jsonl = split_file(source, split);
    let instances = if jsonl.is_file() {
        let instances: Vec<AnnotatedInstance> = read_jsonl(&jsonl)?;
        for (i, inst) in instances.iter().enumerate() {
            validate_instance(inst).map_err(|e| CorpusError::Malformed {
                path: jsonl.clone(),
                line: i + 1,
                message: format!("instance `{}`: {e}", inst.instance_id),
            })?;
        }
        instances
    } else {
        match dataset {
            Dataset::Yags => raw::read_yags(&raw::yags_file(source, split), split, &raw::default_pos_map(), lexicon)?,
            Dataset::Artifacts => raw::read_artifacts(&raw::artifacts_file(source), lexicon)?,
            Dataset::Fn15 | Dataset::Fn17 => {
                return Err(CorpusError::MissingFiles {
                    path: source.to_path_buf(),
                    expected: format!(
                        "{} (convert raw FrameNet releases with `corpus convert` first)",
                        jsonl.display()
                    ),
                })
            }
        }
    };
    report_split_size(dataset, split, instances.len());
    Ok(instances)
}

fn report_split_size(dataset: Dataset, split: Split, n: usize) {
    match dataset.expected_size(split) {
        Some(expected) if expected != n => {
            log::warn!("{dataset}/{split}: {n} instances (published size {expected})")
        }
        _ => log::info!("{dataset}/{split}: {n} instances"),
    }
}

/// Fails if any instance id occurs in two splits.
pub fn check_split_disjoint(splits: &[(Split, &[AnnotatedInstance])]) -> Result<(), CorpusError> {
    let mut seen: HashMap<&str, Split> = HashMap::new();
    for (split, instances) in splits {
        for inst in *instances {
            if let Some(&first) = seen.get(inst.instance_id.as_str()) {
                return Err(CorpusError::SplitOverlap { instance_id: inst.instance_id.clone(), first, second: *split });
            }
            seen.insert(&inst.instance_id, *split);
        }
    }
    Ok(())
}

/// Standard interchange layout under a data root:
///
/// ```text
/// <root>/lexicons/<fn15|fn17>/{frames,lexical_units}.jsonl
/// <root>/datasets/<dataset>/<split>.jsonl
/// ```
#[derive(Debug, Clone)]
pub struct DataRoot {
    root: PathBuf,
}

impl DataRoot {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataRoot { root: root.into() }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn lexicon_dir(&self, version: LexiconVersion) -> PathBuf {
        self.root.join("lexicons").join(version.as_str())
    }

    pub fn dataset_dir(&self, dataset: Dataset) -> PathBuf {
        self.root.join("datasets").join(dataset.as_str())
    }

    pub fn load_lexicon(&self, version: LexiconVersion) -> Result<Lexicon, CorpusError> {
        load_lexicon(&self.lexicon_dir(version), version)
    }

    pub fn load_split(&self, dataset: Dataset, split: Split) -> Result<Vec<AnnotatedInstance>, CorpusError> {
        load_dataset(&self.dataset_dir(dataset), dataset, split, None)
    }

    /// Split sizes for every split the dataset defines and that exists on disk.
    pub fn split_sizes(&self, dataset: Dataset) -> Result<Vec<(Split, usize)>, CorpusError> {
        let mut sizes = Vec::new();
        for &split in dataset.splits() {
            if split_file(&self.dataset_dir(dataset), split).is_file() {
                sizes.push((split, self.load_split(dataset, split)?.len()));
            }
        }
        Ok(sizes)
    }
}

/// What [`convert`] wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversionSummary {
    /// (frames, lexical units) when a lexicon was converted.
    pub lexicon: Option<(usize, usize)>,
    pub splits: Vec<(Split, usize)>,
}

/// Converts raw input for one dataset into the interchange layout under
/// `out` (see [`DataRoot`]).
///
/// For FrameNet releases `input` is the release directory; the lexicon is
/// converted too and `manifest` defaults to `<input>/splits.json`. For YAGS
/// and Artifacts `input` holds the TSV files, and flags are computed against
/// the companion lexicon already converted under `out`, when present.
pub fn convert(
    dataset: Dataset,
    input: &Path,
    out: &Path,
    manifest: Option<&Path>,
    pool: framenet::InstancePool,
) -> Result<ConversionSummary, CorpusError> {
    let root = DataRoot::new(out);
    let target = root.dataset_dir(dataset);
    match dataset {
        Dataset::Fn15 | Dataset::Fn17 => {
            let version = dataset.companion_lexicon();
            let lexicon = framenet::read_lexicon(input, version)?;
            write_lexicon(&lexicon, &root.lexicon_dir(version))?;
            let manifest_path = manifest.map(Path::to_path_buf).unwrap_or_else(|| input.join("splits.json"));
            let manifest = framenet::SplitManifest::load(&manifest_path)?;
            let splits = framenet::read_splits(input, dataset, &manifest, pool, &lexicon)?;
            check_split_disjoint(&[
                (Split::Train, splits.get(Split::Train)),
                (Split::Dev, splits.get(Split::Dev)),
                (Split::Test, splits.get(Split::Test)),
            ])?;
            let mut sizes = Vec::new();
            for &split in dataset.splits() {
                let rows = splits.get(split);
                write_jsonl(&split_file(&target, split), rows)?;
                report_split_size(dataset, split, rows.len());
                sizes.push((split, rows.len()));
            }
            Ok(ConversionSummary { lexicon: Some(lexicon.counts()), splits: sizes })
        }
        Dataset::Yags | Dataset::Artifacts => {
            let lexicon_dir = root.lexicon_dir(dataset.companion_lexicon());
            let lexicon = if lexicon_dir.join(FRAMES_FILE).is_file() {
                Some(load_lexicon(&lexicon_dir, dataset.companion_lexicon())?)
            } else {
                log::warn!("no converted lexicon under {}; target flags left empty", lexicon_dir.display());
                None
            };
            let mut sizes = Vec::new();
            for &split in dataset.splits() {
                let rows = match dataset {
                    Dataset::Yags => {
                        let path = raw::yags_file(input, split);
                        if !path.is_file() {
                            continue;
                        }
                        raw::read_yags(&path, split, &raw::default_pos_map(), lexicon.as_ref())?
                    }
                    _ => raw::read_artifacts(&raw::artifacts_file(input), lexicon.as_ref())?,
                };
                write_jsonl(&split_file(&target, split), &rows)?;
                report_split_size(dataset, split, rows.len());
                sizes.push((split, rows.len()));
            }
            if sizes.is_empty() {
                return Err(CorpusError::MissingFiles {
                    path: input.to_path_buf(),
                    expected: "dev.tsv or test.tsv".into(),
                });
            }
            Ok(ConversionSummary { lexicon: None, splits: sizes })
        }
    }
}
