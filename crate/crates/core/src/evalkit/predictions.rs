//! Per-instance prediction rows, persisted as JSONL.
//!
//! Required fields: `instance_id`, `predicted_frame`, `gold_frame`,
//! `decode_path`, `run_id`. The rest are optional so files produced by
//! other tools (e.g. the fine-tuning kit) load unchanged.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, write_jsonl, CorpusError, InstanceFlag};
use crate::parse::DecodePath;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub instance_id: String,
    pub predicted_frame: Option<String>,
    pub gold_frame: String,
    pub decode_path: DecodePath,
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Size of the lexically filtered candidate set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_count: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<InstanceFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRow {
    pub fn is_correct(&self) -> bool {
        self.predicted_frame.as_deref() == Some(self.gold_frame.as_str())
    }

    pub fn is_failed(&self) -> bool {
        self.decode_path == DecodePath::Failed
    }

    pub fn is_ambiguous(&self) -> bool {
        self.candidate_count.is_some_and(|n| n >= 2)
    }
}

pub fn predictions_file_name(seed: u64) -> String {
    format!("predictions_seed{seed}.jsonl")
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, CorpusError> {
    read_jsonl(path)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<(), CorpusError> {
    write_jsonl(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_rows_load() {
        let row: PredictionRow = serde_json::from_str(
            r#"{"instance_id": "i", "predicted_frame": "A", "gold_frame": "A", "decode_path": "logprob_argmax", "run_id": "ft"}"#,
        )
        .unwrap();
        assert!(row.is_correct());
        assert!(!row.is_ambiguous());
    }

    #[test]
    fn failed_rows_keep_null_prediction() {
        let row = PredictionRow {
            instance_id: "i".into(),
            predicted_frame: None,
            gold_frame: "A".into(),
            decode_path: DecodePath::Failed,
            run_id: "r".into(),
            label: None,
            candidate_count: Some(2),
            flags: BTreeSet::new(),
            error: None,
        };
        let text = serde_json::to_string(&row).unwrap();
        assert!(text.contains("\"predicted_frame\":null"));
        assert_eq!(serde_json::from_str::<PredictionRow>(&text).unwrap(), row);
    }
}
