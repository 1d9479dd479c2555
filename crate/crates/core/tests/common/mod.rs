#![allow(dead_code)]

pub mod cases;
pub mod goldens;

#[allow(unused_imports)]
pub use cases::*;
#[allow(unused_imports)]
pub use goldens::*;

use std::collections::BTreeMap;
use std::path::PathBuf;

use framescope::backends::{BackendConfig, OraclePolicy};
use framescope::corpus::{load_dataset, load_lexicon, AnnotatedInstance, Dataset, LexiconVersion, Pos, Split};
use framescope::evalkit::{PredictionRow, RunSpec};
use framescope::lexicon::Lexicon;
use framescope::parse::DecodePath;
use framescope::promptkit::{Granularity, PromptConfig, PromptFormat};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn mini_root() -> PathBuf {
    fixtures().join("mini")
}

pub fn mini_lexicon() -> Lexicon {
    load_lexicon(&mini_root().join("lexicons/fn17"), LexiconVersion::Fn17).unwrap()
}

pub fn mini_split(split: Split) -> Vec<AnnotatedInstance> {
    load_dataset(&mini_root().join("datasets/fn17"), Dataset::Fn17, split, None).unwrap()
}

pub fn tiny_lexicon() -> Lexicon {
    load_lexicon(&fixtures().join("tiny"), LexiconVersion::Fn17).unwrap()
}

pub fn golden_instances() -> BTreeMap<String, AnnotatedInstance> {
    let rows: Vec<AnnotatedInstance> =
        framescope::corpus::read_jsonl(&fixtures().join("golden/instances.jsonl")).unwrap();
    rows.into_iter().map(|i| (i.instance_id.trim_start_matches("golden:").to_string(), i)).collect()
}

pub fn golden_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}

/// `n` instances cycling over every lexical unit of the lexicon, in lexicon
/// order, so each instance's gold frame is among its candidates.
pub fn synthetic_instances(lexicon: &Lexicon, n: usize, split: Split) -> Vec<AnnotatedInstance> {
    let units = lexicon.units();
    (0..n)
        .map(|i| {
            let lu = &units[i % units.len()];
            let prefix = format!("case {i} has the");
            let sentence = format!("{prefix} {} here .", lu.lemma);
            let start = prefix.chars().count() + 1;
            AnnotatedInstance {
                instance_id: format!("syn-{}-{i:05}", split.as_str()),
                sentence,
                target_surface: lu.lemma.clone(),
                target_char_span: (start, start + lu.lemma.chars().count()),
                target_lemma: lu.lemma.clone(),
                target_pos: lu.pos,
                gold_frame: lu.frame_name.clone(),
                dataset: Dataset::Fn17,
                split,
                flags: Default::default(),
                gloss: None,
                pool: Default::default(),
            }
        })
        .collect()
}

pub fn mock_spec(policy: OraclePolicy, format: PromptFormat, shots: usize) -> RunSpec {
    RunSpec::new(
        Dataset::Fn17,
        Split::Test,
        PromptConfig::new(format, Granularity::NamesDefsLuDefs, shots),
        BackendConfig::mock(policy),
    )
}

pub fn row(id: &str, pred: Option<&str>, gold: &str) -> PredictionRow {
    PredictionRow {
        instance_id: id.into(),
        predicted_frame: pred.map(str::to_string),
        gold_frame: gold.into(),
        decode_path: if pred.is_some() { DecodePath::CleanJson } else { DecodePath::Failed },
        run_id: "r".into(),
        label: None,
        candidate_count: None,
        flags: Default::default(),
        error: None,
    }
}

pub fn pos(s: &str) -> Pos {
    s.parse().unwrap()
}
