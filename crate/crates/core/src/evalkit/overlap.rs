//! Where two systems' errors coincide.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::predictions::PredictionRow;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverlapError {
    #[error("prediction files cover different instances: {only_a} only in A, {only_b} only in B (e.g. `{example}`)")]
    InstanceSetMismatch { only_a: usize, only_b: usize, example: String },
    #[error("instance `{instance_id}` has gold `{gold_a}` in A but `{gold_b}` in B")]
    GoldMismatch { instance_id: String, gold_a: String, gold_b: String },
    #[error("instance `{0}` appears more than once in one file")]
    DuplicateInstance(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub wrong_a: usize,
    pub wrong_b: usize,
    pub common_wrong: usize,
    /// Both wrong with the same predicted frame.
    pub agreeing_wrong: usize,
    /// Both wrong otherwise, including when either produced no frame.
    pub disagreeing_wrong: usize,
    /// Sorted instance ids per bucket: `only_a`, `only_b`, `agreeing`,
    /// `disagreeing`.
    pub examples: BTreeMap<String, Vec<String>>,
}

fn index(rows: &[PredictionRow]) -> Result<HashMap<&str, &PredictionRow>, OverlapError> {
    let mut map = HashMap::with_capacity(rows.len());
    for r in rows {
        if map.insert(r.instance_id.as_str(), r).is_some() {
            return Err(OverlapError::DuplicateInstance(r.instance_id.clone()));
        }
    }
    Ok(map)
}

pub fn compare_errors(a: &[PredictionRow], b: &[PredictionRow]) -> Result<OverlapReport, OverlapError> {
    let ia = index(a)?;
    let ib = index(b)?;
    let mut only_a: Vec<&str> = ia.keys().filter(|k| !ib.contains_key(*k)).copied().collect();
    let only_b: Vec<&str> = ib.keys().filter(|k| !ia.contains_key(*k)).copied().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        only_a.sort_unstable();
        let example = only_a.first().or(only_b.iter().min()).map(|s| s.to_string()).unwrap_or_default();
        return Err(OverlapError::InstanceSetMismatch { only_a: only_a.len(), only_b: only_b.len(), example });
    }

    let mut buckets: BTreeMap<String, Vec<String>> =
        ["only_a", "only_b", "agreeing", "disagreeing"].into_iter().map(|k| (k.to_string(), Vec::new())).collect();
    let mut report = OverlapReport {
        wrong_a: 0,
        wrong_b: 0,
        common_wrong: 0,
        agreeing_wrong: 0,
        disagreeing_wrong: 0,
        examples: BTreeMap::new(),
    };
    for (id, ra) in &ia {
        let rb = ib[id];
        if ra.gold_frame != rb.gold_frame {
            return Err(OverlapError::GoldMismatch {
                instance_id: id.to_string(),
                gold_a: ra.gold_frame.clone(),
                gold_b: rb.gold_frame.clone(),
            });
        }
        let (wa, wb) = (!ra.is_correct(), !rb.is_correct());
        report.wrong_a += usize::from(wa);
        report.wrong_b += usize::from(wb);
        let bucket = match (wa, wb) {
            (true, true) => {
                report.common_wrong += 1;
                if ra.predicted_frame.is_some() && ra.predicted_frame == rb.predicted_frame {
                    report.agreeing_wrong += 1;
                    "agreeing"
                } else {
                    report.disagreeing_wrong += 1;
                    "disagreeing"
                }
            }
            (true, false) => "only_a",
            (false, true) => "only_b",
            (false, false) => continue,
        };
        buckets.get_mut(bucket).expect("bucket exists").push(id.to_string());
    }
    for ids in buckets.values_mut() {
        ids.sort();
    }
    report.examples = buckets;
    Ok(report)
}

impl OverlapReport {
    pub fn to_text(&self, name_a: &str, name_b: &str) -> String {
        let rows = [
            (format!("{name_a} wrong predictions"), self.wrong_a),
            (format!("{name_b} wrong predictions"), self.wrong_b),
            ("Common wrong predictions".to_string(), self.common_wrong),
            ("Agreeing wrong predictions".to_string(), self.agreeing_wrong),
            ("Disagreeing wrong predictions".to_string(), self.disagreeing_wrong),
        ];
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, n) in rows {
            let _ = writeln!(out, "{label:<width$}  {n:>6}");
        }
        out
    }
}
